"""Simulation of the membership security game against the Bayes-optimal adversary.

The challenger flips b; with b = 0 the transcript is N(0, sigma_i^2) per step,
with b = 1 each step is shifted by r_i with probability q_i.  The adversary
guesses b' = 1 iff the transcript is at least as likely under b = 1.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from mi_accountant.core import (
    STREAM_ATTACK,
    MechanismSchedule,
    chunk_rng,
    chunk_sizes,
    hoeffding_halfwidth,
    parallel_map,
)
from mi_accountant.mixture_tv import (
    CanonicalPair,
    _block_rows,
    _log_mixture_ratio,
    log_density_ratio,
)


@dataclasses.dataclass(frozen=True)
class AttackOutcome:
    trials: int
    correct: int
    empirical_advantage: float
    ci_halfwidth: float

    def __post_init__(self):
        if not 0 <= self.correct <= self.trials:
            raise ValueError("correct must lie in [0, trials]")


def sample_transcript(b: int, schedule: MechanismSchedule, rng: np.random.Generator) -> np.ndarray:
    """One transcript of length T from the world selected by bit `b`."""
    if b not in (0, 1):
        raise ValueError("b must be 0 or 1")
    pair = CanonicalPair.from_schedule(schedule)
    t = pair.sigma * rng.standard_normal(pair.dims)
    if b == 1:
        t += pair.r * (rng.random(pair.dims) < pair.q)
    return t


def bayes_guess(t, schedule: MechanismSchedule) -> int:
    """1 iff log(X(t) / Y(t)) >= 0 with X the member world; ties go to 1."""
    return int(-log_density_ratio(t, CanonicalPair.from_schedule(schedule)) >= 0.0)


def _chunk_correct(task) -> int:
    k, q, seed, chunk, n = task
    rng = chunk_rng(seed, STREAM_ATTACK, chunk)
    d = len(k)
    rows = _block_rows(d, n)
    correct = 0
    done = 0
    while done < n:
        m = min(rows, n - done)
        bits = rng.integers(0, 2, size=m)
        s = rng.standard_normal((m, d))
        s += k * ((rng.random((m, d)) < q) & (bits[:, None] == 1))
        guess = _log_mixture_ratio(s, k, q, out=s).sum(axis=1) >= 0.0
        correct += int(np.count_nonzero(guess == (bits == 1)))
        done += m
    return correct


def run_attack(
    schedule: MechanismSchedule,
    trials: int,
    seed: int,
    confidence: float = 0.99,
    chunk_size: int = 1 << 16,
    workers: int = 1,
) -> AttackOutcome:
    """Plays `trials` independent games and reports 2 * (fraction correct) - 1 with a Hoeffding interval."""
    if int(trials) != trials or trials < 1:
        raise ValueError("trials must be a positive integer")
    pair = CanonicalPair.from_schedule(schedule)
    k, q = pair.reduced()
    if len(k) == 0:
        # log ratio is identically 0, so the guess is always 1 and only b matters
        k, q = np.zeros(1), np.ones(1)
    tasks = [(k, q, seed, i, n) for i, n in enumerate(chunk_sizes(trials, chunk_size))]
    correct = sum(parallel_map(_chunk_correct, tasks, workers))
    return AttackOutcome(
        trials=int(trials),
        correct=correct,
        empirical_advantage=2.0 * correct / trials - 1.0,
        ci_halfwidth=hoeffding_halfwidth(int(trials), confidence, value_range=2.0),
    )
