"""Command-line entry point: `mi-accountant bound|sweep|attack|lemma-check`.

Exit codes: 0 success, 1 computation failure (or failed lemma check), 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from mi_accountant.attack import run_attack
from mi_accountant.core import (
    MechanismSchedule,
    NeighboringMode,
    ScheduleError,
    ScheduleStep,
    ScheduleSummary,
    normalize_dpsgd,
    round_sig,
    validate_schedule,
)
from mi_accountant.mixture_tv import McConfig
from mi_accountant.rdp import DEFAULT_ALPHA_MAX, DEFAULT_DELTA
from mi_accountant.report import (
    SweepAxis,
    build_bound_report,
    lemma_checks_to_csv,
    lemma_checks_to_dict,
    report_to_csv,
    report_to_json,
    run_lemma_checks,
    run_sweep,
    sweep_to_csv,
    sweep_to_json,
)

log = logging.getLogger("mi_accountant")

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2
COMMANDS = ("bound", "sweep", "attack", "lemma-check")
CONFIG_KEYS = {
    "schedule", "dpsgd", "samples", "trials", "seed", "delta", "confidence",
    "alpha_max", "sweep", "neighboring_mode", "chunk_size",
}


class ConfigError(Exception):
    pass


@dataclasses.dataclass
class RunConfig:
    command: str
    schedule: MechanismSchedule | None = None
    samples: int = 1_000_000
    trials: int = 0
    seed: int | None = None
    delta: float = DEFAULT_DELTA
    confidence: float = 0.99
    alpha_max: int = DEFAULT_ALPHA_MAX
    chunk_size: int = 1 << 16
    output_format: str = "json"
    out: Path | None = None
    sweep: SweepAxis | None = None
    workers: int = 1
    timing: bool = False
    closed_form_constant: float = 0.5

    def mc_config(self) -> McConfig:
        return McConfig(seed=self.seed, samples=self.samples, confidence=self.confidence, chunk_size=self.chunk_size)


def _field(cfg: dict, key: str, kind, where: str, positive: bool = False):
    value = cfg[key]
    ok = isinstance(value, kind) and not isinstance(value, bool)
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if not ok or (positive and value <= 0):
        expected = ("positive " if positive else "") + ("integer" if kind is int else "number")
        raise ConfigError(f"{where}: field '{key}': expected {expected}, got {value!r}")
    return value


def _schedule_from_config(node, where: str, mode: str) -> MechanismSchedule:
    """Accepts a list of steps or a {sigma, q, r, steps} mapping."""
    if isinstance(node, list):
        steps = []
        for i, item in enumerate(node):
            if not isinstance(item, dict) or "sigma" not in item:
                raise ConfigError(f"{where}: field 'schedule[{i}]': expected an object with sigma, q, r")
            unknown = set(item) - {"sigma", "q", "r"}
            if unknown:
                raise ConfigError(f"{where}: field 'schedule[{i}]': unknown keys {sorted(unknown)}")
            steps.append(
                ScheduleStep(
                    float(_field(item, "sigma", float, where)),
                    float(_field(item, "q", float, where)) if "q" in item else 1.0,
                    float(_field(item, "r", float, where)) if "r" in item else 1.0,
                )
            )
        return MechanismSchedule(tuple(steps), mode)
    if isinstance(node, dict):
        unknown = set(node) - {"sigma", "q", "r", "steps"}
        if unknown or "sigma" not in node:
            raise ConfigError(f"{where}: field 'schedule': expected sigma, q, r, steps")
        steps = _field(node, "steps", int, where) if "steps" in node else 1
        return MechanismSchedule.constant(
            float(_field(node, "sigma", float, where)),
            float(_field(node, "q", float, where)) if "q" in node else 1.0,
            float(_field(node, "r", float, where)) if "r" in node else 1.0,
            steps,
            mode,
        )
    raise ConfigError(f"{where}: field 'schedule': expected a list of steps or an object")


def load_config_file(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e.strerror}") from e
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown top-level keys {sorted(unknown)}")
    return cfg


def _schedule_source(args, file_cfg: dict, where: str, mode: str) -> MechanismSchedule | None:
    inline = any(getattr(args, k) is not None for k in ("sigma", "q", "r", "steps"))
    in_file = [k for k in ("schedule", "dpsgd") if k in file_cfg]
    if inline + len(in_file) > 1:
        raise ConfigError("exactly one schedule source is allowed (inline flags, 'schedule' or 'dpsgd')")
    if inline:
        if args.sigma is None:
            raise ConfigError("--sigma is required for an inline schedule")
        return MechanismSchedule.constant(
            args.sigma, 1.0 if args.q is None else args.q, 1.0 if args.r is None else args.r,
            1 if args.steps is None else args.steps, mode,
        )
    if "schedule" in file_cfg:
        return _schedule_from_config(file_cfg["schedule"], where, mode)
    if "dpsgd" in file_cfg:
        d = file_cfg["dpsgd"]
        needed = {"clipping", "noise_multiplier", "q", "steps"}
        if not isinstance(d, dict) or set(d) != needed:
            raise ConfigError(f"{where}: field 'dpsgd': expected exactly {sorted(needed)}")
        s = normalize_dpsgd(
            _field(d, "clipping", float, where),
            _field(d, "noise_multiplier", float, where),
            _field(d, "q", float, where),
            _field(d, "steps", int, where),
        )
        return dataclasses.replace(s, neighboring_mode=NeighboringMode(mode))
    return None


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merges the optional config file with command-line flags (flags win)."""
    file_cfg, where = {}, "command line"
    if args.config is not None:
        file_cfg, where = load_config_file(args.config), str(args.config)
    mode = args.mode or file_cfg.get("neighboring_mode", "add_remove")
    try:
        mode = NeighboringMode(mode).value
    except ValueError:
        raise ConfigError(f"{where}: field 'neighboring_mode': expected add_remove or replace") from None

    cfg = RunConfig(command=args.command, output_format=args.format, out=args.out,
                    workers=args.workers, timing=args.timing)
    if args.command == "lemma-check":
        cfg.closed_form_constant = args.debug_closed_form_constant
        return cfg

    cfg.schedule = _schedule_source(args, file_cfg, where, mode)
    if cfg.schedule is None:
        raise ConfigError("no schedule given: use --sigma/--q/--r/--steps or a config file")
    validate_schedule(cfg.schedule)

    for key, kind, positive in (
        ("samples", int, True), ("trials", int, False), ("seed", int, False), ("delta", float, True),
        ("confidence", float, True), ("alpha_max", int, True), ("chunk_size", int, True),
    ):
        if key in file_cfg:
            setattr(cfg, key, _field(file_cfg, key, kind, where, positive))
        flag = getattr(args, key, None)
        if flag is not None:
            setattr(cfg, key, flag)
    if cfg.seed is None:
        raise ConfigError("a seed is required (--seed or 'seed' in the config file)")
    if not 0 < cfg.delta < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {cfg.delta}")
    if not 0 < cfg.confidence < 1:
        raise ConfigError(f"confidence must lie in (0, 1), got {cfg.confidence}")
    if cfg.alpha_max < 2:
        raise ConfigError("alpha_max must be >= 2")
    if cfg.samples < 1 or cfg.trials < 0:
        raise ConfigError("samples must be >= 1 and trials >= 0")

    if args.command == "attack" and cfg.trials < 1:
        raise ConfigError("attack needs --trials >= 1")
    if args.command == "sweep":
        axis = dict(file_cfg.get("sweep") or {})
        for key in ("param", "min", "max", "count"):
            flag = getattr(args, f"sweep_{key}")
            if flag is not None:
                axis[key] = flag
        if args.sweep_log:
            axis["log"] = True
        missing = {"param", "min", "max", "count"} - set(axis)
        if missing:
            raise ConfigError(f"sweep axis incomplete, missing {sorted(missing)}")
        try:
            cfg.sweep = SweepAxis(axis["param"], float(axis["min"]), float(axis["max"]),
                                  axis["count"], bool(axis.get("log", False)))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{where}: field 'sweep': {e}") from None
    elif "sweep" in file_cfg or args.sweep_param is not None:
        raise ConfigError("a sweep axis is only valid for the sweep command")
    return cfg


def execute(cfg: RunConfig) -> tuple[str, int]:
    """Runs the configured command; returns (output text, exit code)."""
    fmt = cfg.output_format
    if cfg.command == "lemma-check":
        checks = run_lemma_checks(cfg.closed_form_constant)
        passed = all(c.passed for c in checks)
        text = lemma_checks_to_csv(checks) if fmt == "csv" else json.dumps(lemma_checks_to_dict(checks), indent=2) + "\n"
        return text, EXIT_OK if passed else EXIT_FAILURE
    if cfg.command == "bound":
        report = build_bound_report(cfg.schedule, cfg.mc_config(), cfg.delta, cfg.alpha_max, cfg.workers, cfg.timing)
        return (report_to_csv(report) if fmt == "csv" else report_to_json(report)), EXIT_OK
    if cfg.command == "sweep":
        rows = run_sweep(cfg.schedule, cfg.sweep, cfg.mc_config(), cfg.delta, cfg.alpha_max, cfg.trials, cfg.workers)
        return (sweep_to_csv(rows) if fmt == "csv" else sweep_to_json(rows)), EXIT_OK
    outcome = run_attack(cfg.schedule, cfg.trials, cfg.seed, cfg.confidence, cfg.chunk_size, cfg.workers)
    record = dict(dataclasses.asdict(outcome), seed=cfg.seed,
                  schedule=dataclasses.asdict(ScheduleSummary.of(cfg.schedule)))
    if fmt == "csv":
        header = ("trials", "correct", "empirical_advantage", "ci_halfwidth", "seed")
        values = round_sig([record[h] for h in header])
        return ",".join(header) + "\n" + ",".join(str(v) for v in values) + "\n", EXIT_OK
    return json.dumps(round_sig(record), indent=2) + "\n", EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mi-accountant",
        description="Membership-inference advantage bounds for compositions of sampled Gaussian mechanisms.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="JSON config file")
    sched = parser.add_argument_group("inline schedule (T identical steps)")
    sched.add_argument("--sigma", type=float, help="noise std per step")
    sched.add_argument("--q", type=float, help="sampling rate per step (default 1)")
    sched.add_argument("--r", type=float, help="L2 sensitivity per step (default 1)")
    sched.add_argument("--steps", type=int, help="number of steps T (default 1)")
    sched.add_argument("--mode", choices=[m.value for m in NeighboringMode], help="neighboring relation")
    parser.add_argument("--samples", type=int, help="Monte Carlo samples (default 1e6)")
    parser.add_argument("--trials", type=int, help="attack games (attack, or sweep with empirical columns)")
    parser.add_argument("--seed", type=int, help="random seed (required)")
    parser.add_argument("--delta", type=float, help="delta for eps reporting (default 1e-5)")
    parser.add_argument("--confidence", type=float, help="confidence of the Hoeffding intervals (default 0.99)")
    parser.add_argument("--alpha-max", dest="alpha_max", type=int, help="largest integer RDP order (default 256)")
    parser.add_argument("--chunk-size", dest="chunk_size", type=int, help="samples per seeded chunk")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--out", type=Path, help="write output here instead of stdout")
    parser.add_argument("--workers", type=int, default=1, help="worker processes, 0 for all cores (results do not depend on it)")
    parser.add_argument("--timing", action="store_true", help="add runtime to the report metadata")
    parser.add_argument("--verbose", "-v", action="store_true")
    sweep = parser.add_argument_group("sweep axis")
    sweep.add_argument("--sweep-param", choices=("sigma", "noise_multiplier", "q", "r", "steps"))
    sweep.add_argument("--sweep-min", type=float)
    sweep.add_argument("--sweep-max", type=float)
    sweep.add_argument("--sweep-count", type=int)
    sweep.add_argument("--sweep-log", action="store_true", help="log-spaced points")
    parser.add_argument("--debug-closed-form-constant", type=float, default=0.5, help=argparse.SUPPRESS)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        args.workers = os.cpu_count() or 1
    try:
        cfg = resolve_config(args)
    except (ConfigError, ScheduleError) as e:
        print(f"mi-accountant: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text, code = execute(cfg)
    except Exception as e:  # noqa: BLE001 - any computation failure maps to exit code 1
        log.debug("computation failed", exc_info=True)
        print(f"mi-accountant: computation failed: {e}", file=sys.stderr)
        return EXIT_FAILURE
    if cfg.out is not None:
        cfg.out.write_text(text)
    else:
        sys.stdout.write(text)
    return code
