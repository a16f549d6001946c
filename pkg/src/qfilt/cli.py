"""Command-line front end: noise sweeps, single optimizations, verification.

Subcommands:

* ``sweep``    — run a task over a noise grid, write a CSV of results
* ``optimize`` — one optimization, dumped as a reproducible JSON file
* ``verify``   — print the closed-form vs simulation residual table
* ``ansatz``   — print the conjectured optimal encoding matrices

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import analytic, metrics
from .analytic import ClosedFormMetric, UnsupportedFormula
from .channels import NoiseKind, NoiseSpec, RobustnessSpec
from .objectives import ObjectiveSpec, SweepTask, evaluate_encoding, make_objective
from .optimizer import OptimizationResult, OptimizerConfig, optimize

CSV_HEADER = [
    "task",
    "kind",
    "n",
    "q",
    "q_a",
    "s",
    "value",
    "probability",
    "source",
    "restarts",
    "iterations",
    "seed",
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    min: float
    max: float
    points: int

    def values(self) -> list[float]:
        if self.points == 1:
            return [self.min]
        return [float(v) for v in np.linspace(self.min, self.max, self.points)]


@dataclass(frozen=True)
class SweepConfig:
    task: SweepTask
    kind: NoiseKind
    q_grid: GridSpec
    n_list: tuple[int, ...]
    out: str
    optimizer: OptimizerConfig
    q_a_grid: GridSpec | None = None
    s_grid: GridSpec | None = None
    fixed_q: float | None = None  # channel strength while sweeping q_a or s


def _default_q_grid(kind: NoiseKind) -> GridSpec:
    lo = 0.0 if kind is NoiseKind.DEPHASING else 1.0 / 3.0
    return GridSpec(lo, 1.0, 21)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _parse_grid(obj, name: str, lo: float, hi: float) -> GridSpec:
    if isinstance(obj, (int, float)):
        obj = {"min": float(obj), "max": float(obj), "points": 1}
    _require(isinstance(obj, dict), f"{name} must be a number or {{min,max,points}}")
    try:
        grid = GridSpec(float(obj["min"]), float(obj["max"]), int(obj.get("points", 1)))
    except KeyError as exc:
        raise ConfigError(f"{name} is missing key {exc}") from exc
    _require(grid.points >= 1, f"{name} needs at least one point")
    _require(
        lo - 1e-12 <= grid.min <= grid.max <= hi + 1e-12,
        f"{name} range [{grid.min}, {grid.max}] outside [{lo}, {hi}]",
    )
    return grid


def _parse_optimizer(obj: dict | None, seed_override: int | None, threads: int) -> OptimizerConfig:
    obj = dict(obj or {})
    if seed_override is not None:
        obj["seed"] = seed_override
    obj.setdefault("n_jobs", threads if threads > 0 else -1)
    try:
        return OptimizerConfig(**obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad optimizer config: {exc}") from exc


def load_sweep_config(path: str, seed_override: int | None, threads: int, out_override: str | None) -> SweepConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        task = SweepTask(raw["task"])
        kind = NoiseKind(raw["noise"]["kind"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad task/noise section: {exc}") from exc
    q_lo = 0.0 if kind is NoiseKind.DEPHASING else 1.0 / 3.0
    if "q" in raw["noise"]:
        q_grid = _parse_grid(raw["noise"]["q"], "noise.q", q_lo, 1.0)
    else:
        q_grid = _default_q_grid(kind)
    n_list = tuple(raw.get("n", [0, 1]))
    _require(all(n in (0, 1, 2, 3) for n in n_list), "n values must lie in 0..3")
    _require(len(n_list) > 0, "need at least one ancilla count")
    rob = raw.get("robustness") or {}
    q_a_grid = _parse_grid(rob["q_a"], "robustness.q_a", 1.0 / 3.0, 1.0) if "q_a" in rob else None
    s_grid = _parse_grid(rob["s"], "robustness.s", 0.0, 1.0) if "s" in rob else None
    _require(
        not (q_a_grid and s_grid), "sweep one robustness knob at a time (q_a or s)"
    )
    fixed_q = float(rob.get("fixed_q", 0.7)) if (q_a_grid or s_grid) else None
    if fixed_q is not None:
        _require(q_lo - 1e-12 <= fixed_q <= 1.0 + 1e-12, f"robustness.fixed_q outside [{q_lo}, 1]")
    out = out_override or raw.get("out")
    _require(bool(out), "output path required (config key 'out' or --out)")
    if (q_a_grid or s_grid) and task is not SweepTask.FIDELITY:
        raise ConfigError("robustness sweeps are defined for the fidelity task")
    return SweepConfig(
        task=task,
        kind=kind,
        q_grid=q_grid,
        n_list=n_list,
        out=out,
        optimizer=_parse_optimizer(raw.get("optimizer"), seed_override, threads),
        q_a_grid=q_a_grid,
        s_grid=s_grid,
        fixed_q=fixed_q,
    )


def _fmt(x: float | int | None) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return format(x, ".12g")


def _closed_form_value(
    task: SweepTask, n: int, noise: NoiseSpec
) -> tuple[float, float] | None:
    """Closed-form (value, probability) for a sweep row, if the paper has one."""
    try:
        if task is SweepTask.QFI:
            if noise.kind is not NoiseKind.DEPOLARIZING:
                return None
            return analytic.closed_form_qfi(n, noise.q), 1.0
        prob = analytic.closed_form(ClosedFormMetric.P, n, noise)
        if task is SweepTask.FIDELITY:
            return analytic.closed_form(ClosedFormMetric.F, n, noise), prob
        if task is SweepTask.CHSH_FIXED:
            return analytic.closed_form(ClosedFormMetric.BETA_FIX, n, noise), prob
        return None  # no published closed form for angle-optimized CHSH
    except UnsupportedFormula:
        return None


def _ansatz_value(
    task: SweepTask,
    n: int,
    noise: NoiseSpec,
    robustness: RobustnessSpec | None,
    opt_cfg: OptimizerConfig,
) -> tuple[float, float] | None:
    """Simulated (value, probability) of the conjectured encoding, if any."""
    if n not in (1, 2):
        return None
    if task is SweepTask.QFI:
        if noise.kind is not NoiseKind.DEPOLARIZING or n != 1:
            return None
        spec = ObjectiveSpec(task, n, noise, robustness)
        encoding = analytic.qfi_ansatz_encoding(n, spec.theta)
        return evaluate_encoding(spec, encoding)
    encoding = analytic.ansatz_unitary(n, noise.kind)
    spec = ObjectiveSpec(task, n, noise, robustness)
    if task is not SweepTask.CHSH_OPT:
        return evaluate_encoding(spec, encoding)
    # the encoding is fixed; optimize only the eight measurement angles,
    # warm-started from the fixed settings
    settings0 = metrics.fixed_settings(noise).as_array()

    def objective(angles: np.ndarray) -> tuple[float, float]:
        return evaluate_encoding(spec, encoding, metrics.MeasurementSettings.from_array(angles))

    angle_cfg = replace(
        opt_cfg, method=None, restarts=2, max_iters=400, init_params=settings0, n_jobs=1
    )
    result = optimize(objective, 8, angle_cfg)
    return result.best_value, result.best_probability


def _optimized_row(
    task: SweepTask,
    n: int,
    noise: NoiseSpec,
    robustness: RobustnessSpec | None,
    opt_cfg: OptimizerConfig,
) -> tuple[float, float, int, int]:
    spec = ObjectiveSpec(task, n, noise, robustness)
    fn, dim = make_objective(spec)
    result = optimize(fn, dim, opt_cfg)
    return result.best_value, result.best_probability, opt_cfg.restarts, result.iterations_used


def run_sweep(cfg: SweepConfig) -> list[dict]:
    rows: list[dict] = []
    rob_values: list[tuple[float | None, float | None]]
    if cfg.q_a_grid:
        rob_values = [(qa, None) for qa in cfg.q_a_grid.values()]
    elif cfg.s_grid:
        rob_values = [(None, s) for s in cfg.s_grid.values()]
    else:
        rob_values = [(None, None)]
    q_values = [cfg.fixed_q] if cfg.fixed_q is not None else cfg.q_grid.values()

    def add(n, q, q_a, s, value, prob, source, restarts=None, iters=None, seed=None):
        rows.append(
            {
                "task": cfg.task.value,
                "kind": cfg.kind.value,
                "n": n,
                "q": _fmt(q),
                "q_a": _fmt(q_a),
                "s": _fmt(s),
                "value": _fmt(value),
                "probability": _fmt(prob),
                "source": source,
                "restarts": _fmt(restarts),
                "iterations": _fmt(iters),
                "seed": _fmt(seed),
            }
        )

    for n in sorted(cfg.n_list):
        for q in q_values:
            noise = NoiseSpec(cfg.kind, q)
            for q_a, s in rob_values:
                rob = None
                if q_a is not None or s is not None:
                    if n == 0:
                        rob = None  # no ancillas to prepare or swap with
                    else:
                        rob = RobustnessSpec(q_a=q_a, s=s)
                value, prob, restarts, iters = _optimized_row(
                    cfg.task, n, noise, rob, cfg.optimizer
                )
                add(n, q, q_a, s, value, prob, "optimized", restarts, iters, cfg.optimizer.seed)
                ansatz = _ansatz_value(cfg.task, n, noise, rob, cfg.optimizer)
                if ansatz is not None:
                    add(n, q, q_a, s, ansatz[0], ansatz[1], "ansatz")
                robust_trivial = (q_a is None or q_a == 1.0) and (s is None or s == 1.0)
                if robust_trivial:
                    closed = _closed_form_value(cfg.task, n, noise)
                    if closed is not None:
                        add(n, q, q_a, s, closed[0], closed[1], "closed_form")
    rows.sort(
        key=lambda r: (
            r["n"],
            float(r["q"]),
            float(r["q_a"] or -1.0),
            float(r["s"] or -1.0),
            r["source"],
        )
    )
    return rows


def cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config, args.seed, args.threads, args.out)
    rows = run_sweep(cfg)
    with open(cfg.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


def cmd_optimize(args) -> int:
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    try:
        task = SweepTask(raw["task"])
        noise = NoiseSpec(NoiseKind(raw["noise"]["kind"]), float(raw["noise"]["q"]))
        n = int(raw["n"])
        rob = raw.get("robustness")
        robustness = (
            RobustnessSpec(q_a=rob.get("q_a"), s=rob.get("s")) if rob else None
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad optimize config: {exc}") from exc
    opt_cfg = _parse_optimizer(raw.get("optimizer"), args.seed, args.threads)
    spec = ObjectiveSpec(task, n, noise, robustness)
    fn, dim = make_objective(spec)
    result = optimize(fn, dim, opt_cfg)
    payload = {
        "config": {
            "task": task.value,
            "noise": {"kind": noise.kind.value, "q": noise.q},
            "n": n,
            "robustness": rob,
            "optimizer": {
                "method": opt_cfg.method.value if opt_cfg.method else None,
                "max_iters": opt_cfg.max_iters,
                "step": opt_cfg.step,
                "fd_step": opt_cfg.fd_step,
                "restarts": opt_cfg.restarts,
                "seed": opt_cfg.seed,
                "tol": opt_cfg.tol,
            },
        },
        "result": result_to_dict(result),
    }
    out = args.out or raw.get("out")
    if not out:
        raise ConfigError("output path required (config key 'out' or --out)")
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"best value {result.best_value:.9f} (probability {result.best_probability:.9f}) -> {out}")
    return 0


def result_to_dict(result: OptimizationResult) -> dict:
    return {
        "best_params": [float(x) for x in result.best_params],
        "best_value": result.best_value,
        "best_probability": result.best_probability,
        "iterations_used": result.iterations_used,
        "restart_values": [float(x) for x in result.restart_values],
        "seed": result.seed,
    }


def cmd_verify(args) -> int:
    rows = analytic.residual_report(points=args.points)
    width = max(len(r.metric) for r in rows)
    print(f"{'metric':<{width}}  n  kind          max residual")
    failed = False
    for r in rows:
        if r.max_residual is None:
            status = "unsupported"
        else:
            status = f"{r.max_residual:.3e}"
            if r.max_residual >= 1e-10:
                status += "  FAIL"
                failed = True
        print(f"{r.metric:<{width}}  {r.n_ancillas}  {r.kind:<12}  {status}")
    print("verification " + ("FAILED" if failed else "passed"))
    return 1 if failed else 0


def cmd_ansatz(args) -> int:
    np.set_printoptions(precision=4, suppress=True, linewidth=120)
    print("one ancilla (both channels): computational basis -> Bell basis")
    print(analytic.ansatz_unitary(1, NoiseKind.DEPHASING))
    print("\ntwo ancillas, dephasing: Fourier transform per parity sector")
    print(analytic.ansatz_unitary(2, NoiseKind.DEPHASING))
    print("\ntwo ancillas, depolarizing: parity encoding with signed odd sector")
    print(analytic.ansatz_unitary(2, NoiseKind.DEPOLARIZING))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfilt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=False, help="JSON config path")
        p.add_argument("--out", help="output path (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="optimizer seed override")
        p.add_argument(
            "--threads",
            type=int,
            default=int(os.environ.get("QFILT_THREADS", "1")),
            help="parallel restart workers, 0 = all cores (env QFILT_THREADS)",
        )

    p_sweep = sub.add_parser("sweep", help="run a noise-grid sweep to CSV")
    common(p_sweep)
    p_opt = sub.add_parser("optimize", help="single-point optimization to JSON")
    common(p_opt)
    p_verify = sub.add_parser("verify", help="closed form vs simulation residuals")
    p_verify.add_argument("--points", type=int, default=50, help="grid points per check")
    sub.add_parser("ansatz", help="print the conjectured optimal encodings")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            if not args.config:
                raise ConfigError("sweep requires --config")
            return cmd_sweep(args)
        if args.command == "optimize":
            if not args.config:
                raise ConfigError("optimize requires --config")
            return cmd_optimize(args)
        if args.command == "verify":
            return cmd_verify(args)
        return cmd_ansatz(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
