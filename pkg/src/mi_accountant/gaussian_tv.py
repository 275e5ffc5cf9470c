"""Total variation and weighted total variation (TV_a) between 1-d Gaussians.

TV_a(P, Q) = 1/2 * integral |P(x) - a * Q(x)| dx.  At a = 1 this is the usual
total variation distance.  Closed forms cover the two-Gaussian case; the
quadrature path handles finite Gaussian mixtures and serves as the oracle for
the closed forms.
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Sequence
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize, special, stats

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Half-width of the integration window, in units of the largest component std.
TRUNCATION_SIGMAS = 10.0
_QUAD_EPSABS = 1e-13
_ROOT_SCAN_POINTS = 4001


@dataclasses.dataclass(frozen=True)
class Gaussian1D:
    mean: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclasses.dataclass(frozen=True)
class TvaQuery:
    r: float
    sigma: float
    a: float = 1.0

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("separation r must be nonnegative")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.a > 0:
            raise ValueError("a must be positive")


@dataclasses.dataclass(frozen=True)
class GaussianMixture:
    """Finite mixture of 1-d Gaussians given by component weights, means and stds."""

    weights: tuple[float, ...]
    means: tuple[float, ...]
    sigmas: tuple[float, ...]

    def __post_init__(self):
        for name in ("weights", "means", "sigmas"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        n = len(self.weights)
        if n == 0:
            raise ValueError("empty mixture")
        if len(self.means) != n or len(self.sigmas) != n:
            raise ValueError("weights, means and sigmas must have equal length")
        if any(w < 0 for w in self.weights):
            raise ValueError("mixture weights must be nonnegative")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {math.fsum(self.weights)}, not 1")
        if any(not s > 0 for s in self.sigmas):
            raise ValueError("component sigmas must be positive")

    @classmethod
    def gaussian(cls, mean: float = 0.0, sigma: float = 1.0) -> GaussianMixture:
        return cls((1.0,), (mean,), (sigma,))

    @classmethod
    def subsampled(cls, r: float, sigma: float, q: float) -> GaussianMixture:
        """(1 - q) N(0, sigma^2) + q N(r, sigma^2)."""
        return cls((1.0 - q, q), (0.0, r), (sigma, sigma))

    def pdf(self, x):
        if isinstance(x, float):
            # scalar fast path for the quadrature integrand
            return math.fsum(
                w * _INV_SQRT_2PI / s * math.exp(-0.5 * ((x - m) / s) ** 2)
                for w, m, s in zip(self.weights, self.means, self.sigmas)
                if w > 0
            )
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, m, s in zip(self.weights, self.means, self.sigmas):
            if w > 0:
                out += (w * _INV_SQRT_2PI / s) * np.exp(-0.5 * ((x - m) / s) ** 2)
        return out

    def tail_mass_outside(self, lo: float, hi: float) -> float:
        return sum(
            w * (stats.norm.cdf(lo, m, s) + stats.norm.sf(hi, m, s))
            for w, m, s in zip(self.weights, self.means, self.sigmas)
        )


class Quadrature(NamedTuple):
    value: float
    abserr: float


def tv_gaussian_exact(r: float, sigma: float) -> float:
    """TV(N(0, sigma^2), N(r, sigma^2)) = erf(r / (2 sqrt(2) sigma))."""
    if r < 0 or not sigma > 0:
        raise ValueError("need r >= 0 and sigma > 0")
    return math.erf(r / (2.0 * _SQRT2 * sigma))


def tva_gaussian_closed(query: TvaQuery, constant: float = 0.5) -> float:
    """TV_a(N(0, sigma^2), N(r, sigma^2)) in closed form.

    For a <= 1 the densities cross once, at x* = (r^2 - 2 sigma^2 ln a) / (2r),
    giving  constant * [(1 - a) - erfc(A) + a * erfc(B)]  with
    A = x* / (sqrt(2) sigma) and B = (x* - r) / (sqrt(2) sigma).  The erfc form
    avoids cancellation when both erf terms approach 1.  For a > 1 the
    reflection TV_a(P, Q) = a * TV_{1/a}(Q, P) applies; Q and P swap freely here
    because x -> r - x maps one Gaussian onto the other.

    `constant` is exposed only so a deliberately wrong value can be injected as
    a negative control; the correct value is 1/2.
    """
    r, sigma, a = query.r, query.sigma, query.a
    if a > 1.0:
        return a * tva_gaussian_closed(TvaQuery(r, sigma, 1.0 / a), constant)
    if r == 0.0:
        # removable singularity: both densities coincide
        return constant * (1.0 - a)
    half_k = r / (2.0 * _SQRT2 * sigma)
    # overflows to +/-inf for tiny r, where erfc saturates correctly
    shift = sigma * math.log(a) / (_SQRT2 * r) if a != 1.0 else 0.0
    upper = half_k - shift
    lower = -half_k - shift
    return constant * ((1.0 - a) - special.erfc(upper) + a * special.erfc(lower))


def _sign_changes(f, lo: float, hi: float) -> list[float]:
    xs = np.linspace(lo, hi, _ROOT_SCAN_POINTS)
    ys = np.sign(f(xs))
    # a grid point that lands exactly on a crossing shows up as a 0 between opposite signs
    interior = (ys[1:-1] == 0) & (ys[:-2] * ys[2:] < 0)
    roots = list(xs[1:-1][interior])
    for i in np.nonzero(ys[:-1] * ys[1:] < 0)[0]:
        roots.append(optimize.brentq(f, xs[i], xs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return roots


def tva_quadrature(p: GaussianMixture, q: GaussianMixture, a: float = 1.0) -> Quadrature:
    """1/2 * integral |p(x) - a q(x)| dx by adaptive quadrature.

    The window covers every component mean +/- TRUNCATION_SIGMAS * largest std.
    The integrand is split at the sign changes of p - a*q so each piece is
    smooth.  The returned error adds the quadrature error estimates to a bound
    on the mass lost outside the window.

    Any real `a` is accepted; for a <= 0 there is no sign change.
    """
    sig_max = max(p.sigmas + q.sigmas)
    lo = min(p.means + q.means) - TRUNCATION_SIGMAS * sig_max
    hi = max(p.means + q.means) + TRUNCATION_SIGMAS * sig_max

    def diff(x):
        return p.pdf(x) - a * q.pdf(x)

    def integrand(x):
        return p.pdf(x) - a * q.pdf(x)

    breaks = sorted({lo, hi, *_sign_changes(diff, lo, hi), *(m for m in p.means + q.means if lo < m < hi)})
    total, err = 0.0, 0.0
    for x0, x1 in zip(breaks[:-1], breaks[1:]):
        if x1 <= x0:
            continue
        val, e = integrate.quad(integrand, x0, x1, epsabs=_QUAD_EPSABS, epsrel=0.0, limit=200)
        total += abs(val)
        err += e
    tail = p.tail_mass_outside(lo, hi) + abs(a) * q.tail_mass_outside(lo, hi)
    return Quadrature(0.5 * total, 0.5 * (err + tail))


def check_subsampling_lemma(r: float, sigma: float, q: float, a: float) -> float:
    """|TV_a(X', Y) - q * TV_{(a+q-1)/q}(X, Y)| with X' = (1-q)Y + qX, X = N(r, sigma^2), Y = N(0, sigma^2).

    Both sides are evaluated by quadrature.  The reduced weight (a+q-1)/q may be
    zero or negative; the weighted integral is still well defined there.
    """
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    if not a > 0:
        raise ValueError("a must be positive")
    if r < 0 or not sigma > 0:
        raise ValueError("need r >= 0 and sigma > 0")
    x = GaussianMixture.gaussian(r, sigma)
    y = GaussianMixture.gaussian(0.0, sigma)
    x_mix = GaussianMixture.subsampled(r, sigma, q)
    lhs = tva_quadrature(x_mix, y, a).value
    rhs = q * tva_quadrature(x, y, (a + q - 1.0) / q).value
    return abs(lhs - rhs)


def tva_monotonicity_violation(sigma: float, a: float, radii: Sequence[float]) -> float:
    """Largest decrease of the closed-form TV_a between consecutive radii (0 when nondecreasing)."""
    vals = [tva_gaussian_closed(TvaQuery(r, sigma, a)) for r in radii]
    return max([0.0] + [prev - nxt for prev, nxt in zip(vals[:-1], vals[1:])])
