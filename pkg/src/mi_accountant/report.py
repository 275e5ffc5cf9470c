"""Assembles bound reports, parameter sweeps and lemma checks, and serializes them."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import time
from collections.abc import Sequence

import numpy as np

from mi_accountant import __version__
from mi_accountant.attack import run_attack
from mi_accountant.core import (
    BoundReport,
    MechanismSchedule,
    NeighboringMode,
    ReplaceModeBounds,
    ScheduleSummary,
    derive_seed,
    round_sig,
    validate_schedule,
)
from mi_accountant.gaussian_tv import (
    GaussianMixture,
    TvaQuery,
    check_subsampling_lemma,
    tva_gaussian_closed,
    tva_monotonicity_violation,
    tva_quadrature,
)
from mi_accountant.mixture_tv import McConfig, mi_advantage_mc
from mi_accountant.rdp import (
    DEFAULT_ALPHA_MAX,
    DEFAULT_DELTA,
    baseline_advantage_from_eps,
    best_pinsker_advantage,
    default_orders,
    eps_from_rdp,
    rdp_curve,
)


def build_bound_report(
    schedule: MechanismSchedule,
    cfg: McConfig,
    delta: float = DEFAULT_DELTA,
    alpha_max: int = DEFAULT_ALPHA_MAX,
    workers: int = 1,
    timing: bool = False,
) -> BoundReport:
    start = time.perf_counter()
    validate_schedule(schedule)
    orders = default_orders(alpha_max)
    adv_tv = mi_advantage_mc(schedule, cfg, workers)
    pinsker = best_pinsker_advantage(schedule, orders)
    ed = eps_from_rdp(rdp_curve(schedule, orders), delta)
    baseline = baseline_advantage_from_eps(ed)
    replace = None
    if schedule.neighboring_mode is NeighboringMode.REPLACE:
        replace = ReplaceModeBounds.from_add_remove(adv_tv, pinsker.advantage, baseline)
    metadata = {
        "version": __version__,
        "seed": cfg.seed,
        "samples": cfg.samples,
        "confidence": cfg.confidence,
        "chunk_size": cfg.chunk_size,
        "alpha_max": alpha_max,
        "baseline": "sigmoid accuracy bound (surrogate for the prior-work eps conversion)",
    }
    if timing:
        metadata["runtime_seconds"] = time.perf_counter() - start
    return BoundReport(
        schedule=ScheduleSummary.of(schedule),
        adv_tv=adv_tv,
        adv_pinsker=pinsker.advantage,
        pinsker_alpha=pinsker.alpha,
        pinsker_vacuous=pinsker.vacuous,
        adv_baseline_eps=baseline,
        eps=ed.eps,
        delta=delta,
        eps_alpha=ed.alpha,
        replace=replace,
        metadata=metadata,
    )


def report_to_json(report: BoundReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def report_from_json(text: str) -> BoundReport:
    return BoundReport.from_dict(json.loads(text))


def report_to_csv(report: BoundReport) -> str:
    """Flattens the report into a two-row CSV (header, values)."""
    flat = {}

    def walk(prefix, node):
        if isinstance(node, dict):
            for k, v in node.items():
                walk(f"{prefix}{k}.", v)
        else:
            flat[prefix[:-1]] = "" if node is None else node

    walk("", report.to_dict())
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(flat), lineterminator="\n")
    writer.writeheader()
    writer.writerow(flat)
    return buf.getvalue()


SWEEP_PARAMETERS = ("sigma", "noise_multiplier", "q", "r", "steps")


@dataclasses.dataclass(frozen=True)
class SweepAxis:
    parameter: str
    start: float
    stop: float
    count: int
    log: bool = False

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}; choose from {SWEEP_PARAMETERS}")
        if not self.start < self.stop:
            raise ValueError("sweep axis needs min < max")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError("sweep axis needs count >= 2")
        if self.log and self.start <= 0:
            raise ValueError("log spacing needs a positive minimum")

    def values(self) -> list[float]:
        if self.log:
            pts = np.geomspace(self.start, self.stop, int(self.count))
        else:
            pts = np.linspace(self.start, self.stop, int(self.count))
        return [float(v) for v in pts]


@dataclasses.dataclass(frozen=True)
class SweepRow:
    swept_value: float
    eps: float
    adv_tv: float
    adv_tv_ci: float
    adv_pinsker: float
    adv_baseline: float
    empirical_adv: float | None = None
    empirical_adv_ci: float | None = None


SWEEP_CSV_COLUMNS = tuple(f.name for f in dataclasses.fields(SweepRow))


def sweep_schedule(base: MechanismSchedule, parameter: str, value: float) -> MechanismSchedule:
    """`base` (which must be homogeneous) with one parameter replaced on every step."""
    if len({s for s in base.steps}) != 1:
        raise ValueError("sweeps need a schedule whose steps are all identical")
    step = base.steps[0]
    sigma, q, r, steps = step.sigma, step.q, step.r, len(base)
    if parameter in ("sigma", "noise_multiplier"):
        # after sensitivity normalization the noise multiplier is sigma / r
        sigma = value * r if parameter == "noise_multiplier" else value
    elif parameter == "q":
        q = value
    elif parameter == "r":
        r = value
    elif parameter == "steps":
        steps = int(round(value))
    return validate_schedule(MechanismSchedule.constant(sigma, q, r, steps, base.neighboring_mode))


def run_sweep(
    base: MechanismSchedule,
    axis: SweepAxis,
    cfg: McConfig,
    delta: float = DEFAULT_DELTA,
    alpha_max: int = DEFAULT_ALPHA_MAX,
    trials: int = 0,
    workers: int = 1,
) -> list[SweepRow]:
    """One row per axis point; point i uses seeds derived from (cfg.seed, i)."""
    rows = []
    for i, value in enumerate(axis.values()):
        schedule = sweep_schedule(base, axis.parameter, value)
        point_cfg = dataclasses.replace(cfg, seed=derive_seed(cfg.seed, i))
        report = build_bound_report(schedule, point_cfg, delta, alpha_max, workers)
        emp = emp_ci = None
        if trials:
            outcome = run_attack(
                schedule, trials, derive_seed(cfg.seed, i), cfg.confidence, cfg.chunk_size, workers
            )
            emp, emp_ci = outcome.empirical_advantage, outcome.ci_halfwidth
        rows.append(
            SweepRow(
                swept_value=value,
                eps=report.eps,
                adv_tv=report.adv_tv.value,
                adv_tv_ci=report.adv_tv.ci_halfwidth,
                adv_pinsker=report.adv_pinsker,
                adv_baseline=report.adv_baseline_eps,
                empirical_adv=emp,
                empirical_adv_ci=emp_ci,
            )
        )
    return rows


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_CSV_COLUMNS)
    for row in rows:
        values = round_sig([getattr(row, c) for c in SWEEP_CSV_COLUMNS])
        writer.writerow(["" if v is None else v for v in values])
    return buf.getvalue()


def sweep_to_json(rows: Sequence[SweepRow]) -> str:
    return json.dumps([round_sig(dataclasses.asdict(r)) for r in rows], indent=2) + "\n"


# Lemma-check grids and tolerances.
LEMMA_TOLERANCE = 1e-8
LEMMA_R = (0.5, 1.0, 2.0)
LEMMA_SIGMA = (0.5, 1.0, 2.0)
LEMMA_Q = (0.1, 0.5, 1.0)
LEMMA_A = (0.25, 0.5, 0.95, 1.0)
CLOSED_FORM_A = tuple(i / 10 for i in range(1, 11))
CLOSED_FORM_R = (0.0,) + tuple(i / 4 for i in range(1, 17))
MONOTONE_R = tuple(i / 10 for i in range(1, 51))


@dataclasses.dataclass(frozen=True)
class LemmaCheck:
    name: str
    points: int
    max_discrepancy: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.tolerance


def run_lemma_checks(closed_form_constant: float = 0.5) -> list[LemmaCheck]:
    """Numerical checks of the sub-sampling identity, the TV_a closed form and its monotonicity in r."""
    sub = [
        check_subsampling_lemma(r, s, q, a)
        for r in LEMMA_R
        for s in LEMMA_SIGMA
        for q in LEMMA_Q
        for a in LEMMA_A
    ]
    closed_grid = sorted(
        {(r, s, a) for r in CLOSED_FORM_R + LEMMA_R for s in LEMMA_SIGMA for a in CLOSED_FORM_A + LEMMA_A}
    )
    closed = [
        abs(
            tva_gaussian_closed(TvaQuery(r, s, a), closed_form_constant)
            - tva_quadrature(GaussianMixture.gaussian(0.0, s), GaussianMixture.gaussian(r, s), a).value
        )
        for r, s, a in closed_grid
    ]
    mono_a = sorted(set(CLOSED_FORM_A + LEMMA_A))
    mono = [tva_monotonicity_violation(s, a, MONOTONE_R) for s in LEMMA_SIGMA for a in mono_a]
    swap = [
        abs(
            tva_quadrature(GaussianMixture.subsampled(r, s, q), GaussianMixture.gaussian(0.0, s)).value
            - tva_quadrature(GaussianMixture.gaussian(0.0, s), GaussianMixture.subsampled(r, s, q)).value
        )
        for r in LEMMA_R
        for s in LEMMA_SIGMA
        for q in LEMMA_Q
    ]
    return [
        LemmaCheck("subsampling_identity", len(sub), max(sub), LEMMA_TOLERANCE),
        LemmaCheck("closed_form_vs_quadrature", len(closed), max(closed), LEMMA_TOLERANCE),
        LemmaCheck("monotone_in_r", len(mono), max(mono), 0.0),
        LemmaCheck("tv_symmetry", len(swap), max(swap), 1e-10),
    ]


def lemma_checks_to_dict(checks: Sequence[LemmaCheck]) -> dict:
    return round_sig(
        {
            "passed": all(c.passed for c in checks),
            "checks": [dict(dataclasses.asdict(c), passed=c.passed) for c in checks],
        }
    )


def lemma_checks_to_csv(checks: Sequence[LemmaCheck]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("name", "points", "max_discrepancy", "tolerance", "passed"))
    for c in checks:
        writer.writerow((c.name, c.points, round_sig(c.max_discrepancy), c.tolerance, c.passed))
    return buf.getvalue()

