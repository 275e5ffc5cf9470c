"""Monte Carlo estimate of TV(N(0, sigma), N(r * B(q), sigma)) across T coordinates.

Y is the product of N(0, sigma_i^2) (the sample is absent) and X the product of
(1 - q_i) N(0, sigma_i^2) + q_i N(r_i, sigma_i^2) (the sample is present).
TV(X, Y) = E_{t ~ X}[max(0, 1 - Y(t)/X(t))], and the summand lies in [0, 1], so
a plain average with a Hoeffding interval gives a distribution-free bound.

Internally every coordinate is standardized by its sigma: with k = r / sigma
the per-coordinate log likelihood ratio is log((1 - q) + q exp(k s - k^2 / 2))
for the standardized transcript s, so estimates depend on (q, r / sigma) only.
"""

from __future__ import annotations

import dataclasses
import functools
import math

import numpy as np

from mi_accountant.core import (
    STREAM_MC_FORWARD,
    STREAM_MC_REVERSE,
    Estimate,
    MechanismSchedule,
    chunk_rng,
    chunk_sizes,
    hoeffding_halfwidth,
    parallel_map,
    validate_schedule,
)

# Upper bound on the elements of one (rows x dims) sample block; caps memory for long schedules.
_BLOCK_ELEMENTS = 1 << 22


@dataclasses.dataclass(frozen=True, eq=False)
class CanonicalPair:
    sigma: np.ndarray
    q: np.ndarray
    r: np.ndarray

    @classmethod
    def from_schedule(cls, schedule: MechanismSchedule) -> CanonicalPair:
        sigma, q, r = validate_schedule(schedule).arrays()
        for a in (sigma, q, r):
            a.setflags(write=False)
        return cls(sigma, q, r)

    @property
    def dims(self) -> int:
        return len(self.sigma)

    @functools.cached_property
    def active(self) -> np.ndarray:
        """Coordinates that carry signal; the rest have identical marginals under X and Y."""
        return (self.r > 0) & (self.q > 0)

    def reduced(self) -> tuple[np.ndarray, np.ndarray]:
        """(k, q) for the active coordinates, k = r / sigma."""
        m = self.active
        return self.r[m] / self.sigma[m], self.q[m]


@dataclasses.dataclass(frozen=True)
class McConfig:
    seed: int
    samples: int = 1_000_000
    confidence: float = 0.99
    chunk_size: int = 1 << 16

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError("samples must be a positive integer")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")
        if int(self.chunk_size) != self.chunk_size or self.chunk_size < 1:
            raise ValueError("chunk_size must be a positive integer")


def _log_mixture_ratio(s: np.ndarray, k: np.ndarray, q: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Per-coordinate log((1 - q) + q exp(k s - k^2/2)), evaluated as a log-sum-exp.

    Overwrites `out` (which may alias `s`).
    """
    with np.errstate(divide="ignore"):
        log_q = np.log(q)
        log_1mq = np.log1p(-q)
    u = np.multiply(s, k, out=out)
    u -= 0.5 * k * k
    u += log_q
    return np.logaddexp(log_1mq, u, out=u)


def log_density_ratio(t, pair: CanonicalPair) -> float:
    """log(Y(t) / X(t)) for a transcript t of length T, Y the all-Gaussian world."""
    t = np.asarray(t, dtype=float)
    if t.shape != (pair.dims,):
        raise ValueError(f"transcript has shape {t.shape}, expected ({pair.dims},)")
    m = pair.active
    if not m.any():
        return 0.0
    k, q = pair.reduced()
    return -float(_log_mixture_ratio(t[m] / pair.sigma[m], k, q).sum())


def _block_rows(dims: int, n: int) -> int:
    return max(1, min(n, _BLOCK_ELEMENTS // max(dims, 1)))


def _chunk_sum(task) -> float:
    """Sum of the TV summands over one chunk of samples.

    forward: t ~ X, summand max(0, 1 - Y/X).  reverse: t ~ Y, summand max(0, 1 - X/Y).
    """
    k, q, seed, chunk, n, reverse = task
    rng = chunk_rng(seed, STREAM_MC_REVERSE if reverse else STREAM_MC_FORWARD, chunk)
    d = len(k)
    rows = _block_rows(d, n)
    partial = []
    done = 0
    while done < n:
        b = min(rows, n - done)
        s = rng.standard_normal((b, d))
        if not reverse:
            s += k * (rng.random((b, d)) < q)
        log_x_over_y = _log_mixture_ratio(s, k, q, out=s).sum(axis=1)
        log_ratio = log_x_over_y if reverse else -log_x_over_y
        summand = np.maximum(0.0, -np.expm1(log_ratio))
        assert summand.min() >= 0.0 and summand.max() <= 1.0
        partial.append(float(summand.sum()))
        done += b
    return math.fsum(partial)


def _estimate(schedule: MechanismSchedule, cfg: McConfig, workers: int, reverse: bool) -> Estimate:
    pair = CanonicalPair.from_schedule(schedule)
    halfwidth = hoeffding_halfwidth(cfg.samples, cfg.confidence)
    k, q = pair.reduced()
    if len(k) == 0:
        return Estimate(0.0, halfwidth, cfg.confidence, cfg.samples)
    tasks = [
        (k, q, cfg.seed, i, n, reverse)
        for i, n in enumerate(chunk_sizes(cfg.samples, cfg.chunk_size))
    ]
    # fsum is exactly rounded, so the total is independent of reduction order
    total = math.fsum(parallel_map(_chunk_sum, tasks, workers))
    value = min(1.0, max(0.0, total / cfg.samples))
    return Estimate(value, halfwidth, cfg.confidence, cfg.samples)


def mi_advantage_mc(schedule: MechanismSchedule, cfg: McConfig, workers: int = 1) -> Estimate:
    """Tight membership-inference advantage bound for `schedule`, sampling from the mixture world."""
    return _estimate(schedule, cfg, workers, reverse=False)


def mi_advantage_mc_reverse(schedule: MechanismSchedule, cfg: McConfig, workers: int = 1) -> Estimate:
    """Same quantity estimated by sampling from the Gaussian world; a self-check of the forward estimator."""
    return _estimate(schedule, cfg, workers, reverse=True)
