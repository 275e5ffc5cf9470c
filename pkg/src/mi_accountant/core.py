"""Shared domain types: schedules, estimates, bound reports and the seed policy."""

from __future__ import annotations

import dataclasses
import enum
import math
from collections.abc import Callable, Iterable
from concurrent import futures
from typing import Any, TypeVar

import numpy as np

_T = TypeVar("_T")
_R = TypeVar("_R")


class ScheduleError(ValueError):
    """Raised when a schedule or one of its steps violates an invariant."""


class NeighboringMode(str, enum.Enum):
    ADD_REMOVE = "add_remove"
    REPLACE = "replace"


@dataclasses.dataclass(frozen=True)
class ScheduleStep:
    """One sampled Gaussian release: noise std `sigma`, sampling rate `q`, L2 sensitivity `r`."""

    sigma: float
    q: float = 1.0
    r: float = 1.0

    @property
    def ratio(self) -> float:
        """Sensitivity-to-noise ratio r / sigma; every bound depends on the step only through it and q."""
        return self.r / self.sigma


@dataclasses.dataclass(frozen=True)
class MechanismSchedule:
    steps: tuple[ScheduleStep, ...]
    neighboring_mode: NeighboringMode = NeighboringMode.ADD_REMOVE

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "neighboring_mode", NeighboringMode(self.neighboring_mode))

    @classmethod
    def constant(
        cls,
        sigma: float,
        q: float = 1.0,
        r: float = 1.0,
        steps: int = 1,
        neighboring_mode: NeighboringMode | str = NeighboringMode.ADD_REMOVE,
    ) -> MechanismSchedule:
        return cls((ScheduleStep(sigma, q, r),) * int(steps), NeighboringMode(neighboring_mode))

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def is_homogeneous(self) -> bool:
        """True when every step has the same (q, r/sigma), i.e. the composition theorems apply verbatim."""
        return len({(s.q, s.ratio) for s in self.steps}) <= 1

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (sigma, q, r) as float arrays of length T."""
        sigma = np.array([s.sigma for s in self.steps], dtype=float)
        q = np.array([s.q for s in self.steps], dtype=float)
        r = np.array([s.r for s in self.steps], dtype=float)
        return sigma, q, r


def validate_schedule(schedule: MechanismSchedule) -> MechanismSchedule:
    """Returns `schedule` unchanged if valid; raises ScheduleError naming the first bad step otherwise."""
    if len(schedule.steps) == 0:
        raise ScheduleError("schedule empty")
    for i, step in enumerate(schedule.steps):
        if not isinstance(step, ScheduleStep):
            raise ScheduleError(f"step {i}: expected ScheduleStep, got {type(step).__name__}")
        if not (math.isfinite(step.sigma) and step.sigma > 0):
            raise ScheduleError(f"step {i}: sigma must be positive (got {step.sigma!r})")
        if not (0.0 <= step.q <= 1.0):
            raise ScheduleError(f"step {i}: q must lie in [0, 1] (got {step.q!r})")
        if not (math.isfinite(step.r) and step.r >= 0):
            raise ScheduleError(f"step {i}: r must be nonnegative (got {step.r!r})")
    return schedule


def normalize_dpsgd(clipping: float, noise_multiplier: float, q: float, steps: int) -> MechanismSchedule:
    """Maps DP-SGD hyperparameters to a sensitivity-normalized schedule.

    Clipping at C with noise std C*z has ratio 1/z, so the result is `steps`
    copies of (sigma=z, q, r=1) regardless of C.
    """
    if not clipping > 0:
        raise ScheduleError(f"clipping must be positive (got {clipping!r})")
    if not noise_multiplier > 0:
        raise ScheduleError(f"noise_multiplier must be positive (got {noise_multiplier!r})")
    if int(steps) != steps or steps <= 0:
        raise ScheduleError(f"steps must be a positive integer (got {steps!r})")
    return validate_schedule(MechanismSchedule.constant(float(noise_multiplier), float(q), 1.0, int(steps)))


def hoeffding_halfwidth(samples: int, confidence: float, value_range: float = 1.0) -> float:
    """Two-sided Hoeffding half-width for the mean of `samples` draws bounded in an interval of length `value_range`."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    return value_range * math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * samples))


@dataclasses.dataclass(frozen=True)
class Estimate:
    value: float
    ci_halfwidth: float
    confidence: float
    samples: int

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"estimate value {self.value} outside [0, 1]")
        if self.ci_halfwidth < 0:
            raise ValueError("ci_halfwidth must be nonnegative")

    @property
    def lower(self) -> float:
        return max(0.0, self.value - self.ci_halfwidth)

    @property
    def upper(self) -> float:
        return min(1.0, self.value + self.ci_halfwidth)


# Seed policy. Every random stream is addressed by (seed, stream tag, chunk index),
# so results never depend on how chunks are scheduled across workers.
STREAM_MC_FORWARD = 0
STREAM_MC_REVERSE = 1
STREAM_ATTACK = 2


def chunk_rng(seed: int, stream: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(chunk))))


def derive_seed(seed: int, *keys: int) -> int:
    """Derives an independent 63-bit seed from `seed` and integer keys (used for sweep points)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def chunk_sizes(total: int, chunk_size: int) -> list[int]:
    full, rest = divmod(int(total), int(chunk_size))
    return [chunk_size] * full + ([rest] if rest else [])


def parallel_map(fn: Callable[[_T], _R], tasks: Iterable[_T], workers: int = 1) -> list[_R]:
    """Ordered map, optionally across `workers` processes."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


@dataclasses.dataclass(frozen=True)
class ScheduleSummary:
    steps: int
    neighboring_mode: str
    sigma_min: float
    sigma_max: float
    q_min: float
    q_max: float
    r_min: float
    r_max: float
    # "theorem" for homogeneous schedules, "contribution-claim" for per-step heterogeneous ones
    provenance: str

    @classmethod
    def of(cls, schedule: MechanismSchedule) -> ScheduleSummary:
        sigma, q, r = schedule.arrays()
        return cls(
            steps=len(schedule),
            neighboring_mode=schedule.neighboring_mode.value,
            sigma_min=float(sigma.min()),
            sigma_max=float(sigma.max()),
            q_min=float(q.min()),
            q_max=float(q.max()),
            r_min=float(r.min()),
            r_max=float(r.max()),
            provenance="theorem" if schedule.is_homogeneous else "contribution-claim",
        )


def double_for_replace(value: float) -> tuple[float, bool]:
    """Converts an add/remove advantage bound to the replace relation: (min(1, 2v), vacuous flag)."""
    doubled = 2.0 * value
    return min(1.0, doubled), doubled > 1.0


@dataclasses.dataclass(frozen=True)
class ReplaceModeBounds:
    adv_tv: float
    adv_tv_ci: float
    adv_pinsker: float
    adv_baseline_eps: float
    tv_vacuous: bool
    pinsker_vacuous: bool
    baseline_vacuous: bool

    @classmethod
    def from_add_remove(
        cls, adv_tv: Estimate, adv_pinsker: float, adv_baseline_eps: float
    ) -> ReplaceModeBounds:
        tv, tv_vac = double_for_replace(adv_tv.value)
        pinsker, pinsker_vac = double_for_replace(adv_pinsker)
        baseline, baseline_vac = double_for_replace(adv_baseline_eps)
        return cls(tv, 2.0 * adv_tv.ci_halfwidth, pinsker, baseline, tv_vac, pinsker_vac, baseline_vac)


JSON_SIGNIFICANT_DIGITS = 9


def round_sig(x: Any, digits: int = JSON_SIGNIFICANT_DIGITS) -> Any:
    """Recursively rounds floats in a JSON-like tree to `digits` significant digits."""
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        return float(f"{x:.{digits}g}") if math.isfinite(x) else x
    if isinstance(x, dict):
        return {k: round_sig(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [round_sig(v, digits) for v in x]
    raise TypeError(f"cannot serialize {type(x).__name__}")


@dataclasses.dataclass(frozen=True)
class BoundReport:
    """All advantage bounds for one schedule, in the add/remove relation unless stated otherwise."""

    schedule: ScheduleSummary
    adv_tv: Estimate
    adv_pinsker: float
    pinsker_alpha: float
    pinsker_vacuous: bool
    adv_baseline_eps: float
    eps: float
    delta: float
    eps_alpha: float
    replace: ReplaceModeBounds | None = None
    metadata: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        for name in ("adv_pinsker", "adv_baseline_eps"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    def to_dict(self) -> dict:
        return round_sig(dataclasses.asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> BoundReport:
        d = dict(d)
        d["schedule"] = ScheduleSummary(**d["schedule"])
        d["adv_tv"] = Estimate(**d["adv_tv"])
        if d.get("replace") is not None:
            d["replace"] = ReplaceModeBounds(**d["replace"])
        return cls(**d)

    def rounded(self) -> BoundReport:
        """The report exactly as it survives a JSON round trip."""
        return BoundReport.from_dict(self.to_dict())

