"""Renyi/KL accounting for (sub)sampled Gaussian compositions.

Covers the Pinsker advantage bound sqrt(D / 2), conversion of an RDP curve to
(eps, delta), and the sigmoid-based accuracy/precision bounds implied by eps.

Divergences are between the all-Gaussian world N(0, sigma^2) ("gauss") and the
subsampled world (1 - q) N(0, sigma^2) + q N(r, sigma^2) ("mix").  Per-step
values compose by summation.
"""

from __future__ import annotations

import collections
import dataclasses
import functools
import math
from collections.abc import Sequence
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize, special

from mi_accountant.core import MechanismSchedule, validate_schedule

FRACTIONAL_ORDERS = (1.25, 1.5, 1.75)
DEFAULT_ALPHA_MAX = 256
DEFAULT_DELTA = 1e-5

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# Integration window padding (in standardized units) beyond the integrand's peaks.
_PAD = 40.0


def default_orders(alpha_max: int = DEFAULT_ALPHA_MAX) -> tuple[float, ...]:
    if alpha_max < 2:
        raise ValueError("alpha_max must be >= 2")
    return FRACTIONAL_ORDERS + tuple(float(a) for a in range(2, int(alpha_max) + 1))


@dataclasses.dataclass(frozen=True)
class RdpCurve:
    alpha_grid: tuple[float, ...]
    eps_values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        object.__setattr__(self, "eps_values", tuple(float(e) for e in self.eps_values))
        if len(self.alpha_grid) != len(self.eps_values):
            raise ValueError("alpha_grid and eps_values must be aligned")
        if any(a <= 1.0 for a in self.alpha_grid):
            raise ValueError("RDP orders must exceed 1")
        if list(self.alpha_grid) != sorted(self.alpha_grid):
            raise ValueError("alpha_grid must be increasing")
        if any(e < 0 or math.isnan(e) for e in self.eps_values):
            raise ValueError("RDP values must be nonnegative")


@dataclasses.dataclass(frozen=True)
class EpsDelta:
    eps: float
    delta: float
    alpha: float | None = None  # order attaining the minimum, when derived from a curve

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError("eps must be nonnegative")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("delta must lie in [0, 1)")


class PinskerBound(NamedTuple):
    advantage: float
    alpha: float
    divergence: float

    @property
    def vacuous(self) -> bool:
        return self.divergence > 2.0


def _check_step(q: float, r: float, sigma: float) -> None:
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1] (got {q})")
    if r < 0:
        raise ValueError("r must be nonnegative")
    if not sigma > 0:
        raise ValueError("sigma must be positive")


def rdp_gaussian(alpha: float, r: float, sigma: float) -> float:
    """D_alpha(N(r, sigma^2) || N(0, sigma^2)) = alpha r^2 / (2 sigma^2)."""
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    _check_step(1.0, r, sigma)
    k = r / sigma
    return alpha * k * k / 2.0


def _log_comb(n: int, k: np.ndarray) -> np.ndarray:
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


def rdp_sampled_gaussian(alpha: int, q: float, r: float, sigma: float) -> float:
    """Integer-order RDP of the sampled Gaussian mechanism (binomial expansion, in log space)."""
    if int(alpha) != alpha or alpha < 2:
        raise ValueError(f"alpha must be an integer >= 2 (got {alpha})")
    _check_step(q, r, sigma)
    if q == 0.0 or r == 0.0:
        return 0.0
    if q == 1.0:
        return rdp_gaussian(alpha, r, sigma)
    alpha = int(alpha)
    k = r / sigma
    j = np.arange(alpha + 1, dtype=float)
    log_terms = (
        _log_comb(alpha, j) + j * math.log(q) + (alpha - j) * math.log1p(-q) + j * (j - 1) * k * k / 2.0
    )
    return max(0.0, float(special.logsumexp(log_terms)) / (alpha - 1))


def _log_mix_over_gauss(x, q: float, k: float):
    """log of mix/gauss at standardized x."""
    return np.logaddexp(math.log1p(-q), math.log(q) + k * x - 0.5 * k * k)


def _log_gauss(x):
    return -0.5 * x * x - _LOG_SQRT_2PI


def _quad(f, lo: float, hi: float, points) -> float:
    pts = sorted({p for p in points if lo < p < hi})
    val, _ = integrate.quad(f, lo, hi, points=pts or None, epsabs=1e-14, epsrel=1e-13, limit=500)
    return val


def _renyi_quadrature(alpha: float, q: float, k: float, reverse: bool) -> float:
    """D_alpha(mix || gauss) (or gauss || mix when `reverse`) by quadrature of the log-shifted integrand."""
    # integral of gauss * (mix/gauss)^c with c = alpha (forward) or 1 - alpha (reverse)
    c = 1.0 - alpha if reverse else alpha
    lo = -(alpha - 1.0) * k - _PAD
    hi = alpha * k + _PAD
    peaks = [0.0, k, alpha * k, -(alpha - 1.0) * k]

    def log_f(x):
        return _log_gauss(x) + c * _log_mix_over_gauss(x, q, k)

    grid = np.linspace(lo, hi, 20001)
    vals = log_f(grid)
    shift = float(vals.max())
    peaks.append(float(grid[int(vals.argmax())]))
    integral = _quad(lambda x: math.exp(log_f(x) - shift), lo, hi, peaks)
    return max(0.0, (math.log(integral) + shift) / (alpha - 1.0))


def _kl(q: float, k: float, reverse: bool) -> float:
    """KL(gauss || mix), or KL(mix || gauss) when `reverse`."""
    lo, hi = -_PAD, k + _PAD
    if reverse:
        def f(x):
            lr = float(_log_mix_over_gauss(x, q, k))
            return math.exp(_log_gauss(x) + lr) * lr
    else:
        def f(x):
            return -math.exp(_log_gauss(x)) * float(_log_mix_over_gauss(x, q, k))
    return max(0.0, _quad(f, lo, hi, [0.0, 0.5 * k, k]))


def kl_sampled_gaussian(q: float, r: float, sigma: float) -> float:
    """KL(N(0, sigma^2) || (1-q) N(0, sigma^2) + q N(r, sigma^2)) by quadrature."""
    _check_step(q, r, sigma)
    return _step_divergences(1.0, q, r / sigma)[1]


def kl_sampled_gaussian_reverse(q: float, r: float, sigma: float) -> float:
    """KL((1-q) N(0, sigma^2) + q N(r, sigma^2) || N(0, sigma^2)) by quadrature."""
    _check_step(q, r, sigma)
    return _step_divergences(1.0, q, r / sigma)[0]


def renyi_sampled_gaussian(alpha: float, q: float, r: float, sigma: float, reverse: bool = False) -> float:
    """D_alpha(mix || gauss) for any real alpha > 1 by quadrature; `reverse` gives D_alpha(gauss || mix)."""
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    _check_step(q, r, sigma)
    k = r / sigma
    if q == 0.0 or k == 0.0:
        return 0.0
    return _renyi_quadrature(float(alpha), q, k, reverse)


@functools.lru_cache(maxsize=8192)
def _step_divergences(alpha: float, q: float, k: float) -> tuple[float, float]:
    """Per-step (D(mix || gauss), D(gauss || mix)) of order alpha at ratio k = r / sigma.

    Integer orders >= 2 use the binomial formula for D(mix || gauss), which
    dominates the other direction, so it stands in for both.  KL and
    fractional orders evaluate each direction by quadrature.
    """
    if q == 0.0 or k == 0.0:
        return 0.0, 0.0
    if q == 1.0:
        d = k * k / 2.0 if alpha == 1.0 else rdp_gaussian(alpha, k, 1.0)
        return d, d
    if alpha == 1.0:
        return _kl(q, k, reverse=True), _kl(q, k, reverse=False)
    if alpha == int(alpha):
        d = rdp_sampled_gaussian(int(alpha), q, k, 1.0)
        return d, d
    return _renyi_quadrature(alpha, q, k, reverse=False), _renyi_quadrature(alpha, q, k, reverse=True)


def composed_divergence(schedule: MechanismSchedule, alpha: float) -> float:
    """Order-alpha divergence of the whole composition: each direction summed over steps, the larger kept."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    groups = collections.Counter((s.q, s.ratio) for s in validate_schedule(schedule).steps)
    forward = reverse = 0.0
    for (q, k), count in sorted(groups.items()):
        fwd, rev = _step_divergences(float(alpha), q, k)
        forward += count * fwd
        reverse += count * rev
    return max(forward, reverse)


def rdp_curve(
    schedule: MechanismSchedule, orders: Sequence[float] | None = None, alpha_max: int = DEFAULT_ALPHA_MAX
) -> RdpCurve:
    orders = default_orders(alpha_max) if orders is None else tuple(sorted(orders))
    return RdpCurve(orders, tuple(composed_divergence(schedule, a) for a in orders))


def eps_from_rdp(curve: RdpCurve, delta: float = DEFAULT_DELTA) -> EpsDelta:
    """eps = min over orders of eps(alpha) + log(1/delta) / (alpha - 1)."""
    if not curve.alpha_grid:
        raise ValueError("empty RDP curve")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    alphas = np.array(curve.alpha_grid)
    eps = np.array(curve.eps_values) + math.log(1.0 / delta) / (alphas - 1.0)
    i = int(np.argmin(eps))
    return EpsDelta(float(eps[i]), delta, float(alphas[i]))


def pinsker_advantage(schedule: MechanismSchedule, alpha: float = 1.0) -> PinskerBound:
    """min(1, sqrt(D_alpha / 2)); alpha = 1 is the KL (Pinsker) bound, larger orders are looser."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    d = composed_divergence(schedule, alpha)
    return PinskerBound(min(1.0, math.sqrt(d / 2.0)), float(alpha), d)


def best_pinsker_advantage(schedule: MechanismSchedule, orders: Sequence[float] | None = None) -> PinskerBound:
    """Smallest Pinsker bound over the order grid, KL included."""
    orders = (1.0,) + (default_orders() if orders is None else tuple(orders))
    return min((pinsker_advantage(schedule, a) for a in orders), key=lambda b: (b.advantage, b.alpha))


def baseline_advantage_from_eps(ed: EpsDelta) -> float:
    """Advantage implied by (eps, delta)-DP through the accuracy bound (1 - delta) sigmoid(eps) + delta."""
    acc = (1.0 - ed.delta) * float(special.expit(ed.eps)) + ed.delta
    return min(1.0, max(0.0, 2.0 * acc - 1.0))


def precision_bounds(eps: float) -> tuple[float, float]:
    """Range (sigmoid(-eps), sigmoid(eps)) of the posterior membership probability under eps-DP."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return float(special.expit(-eps)), float(special.expit(eps))


def dpsgd_eps(
    noise_multiplier: float, q: float, steps: int, delta: float = DEFAULT_DELTA, alpha_max: int = DEFAULT_ALPHA_MAX
) -> EpsDelta:
    schedule = MechanismSchedule.constant(noise_multiplier, q, 1.0, steps)
    return eps_from_rdp(rdp_curve(schedule, alpha_max=alpha_max), delta)


def noise_multiplier_for_eps(
    target_eps: float,
    q: float,
    steps: int,
    delta: float = DEFAULT_DELTA,
    alpha_max: int = DEFAULT_ALPHA_MAX,
    bracket: tuple[float, float] = (0.2, 100.0),
) -> float:
    """Noise multiplier at which `steps` sampled Gaussian steps reach `target_eps` (eps decreases in it)."""

    def gap(log_z):
        return dpsgd_eps(math.exp(log_z), q, steps, delta, alpha_max).eps - target_eps

    lo, hi = (math.log(b) for b in bracket)
    if gap(lo) < 0 or gap(hi) > 0:
        raise ValueError(f"target eps {target_eps} not attainable for noise multipliers in {bracket}")
    return math.exp(optimize.brentq(gap, lo, hi, xtol=1e-12))
