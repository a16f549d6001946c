"""Multi-start maximization over circuit parameters.

Two methods: finite-difference gradient ascent with a multiplicative
accept/reject step adaptation (the configured step is the starting step),
and SPSA with a geometrically decaying gain. Restarts draw their starting
points from independent, deterministically seeded RNG streams, so results
are reproducible bit-for-bit regardless of how restarts are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np
from joblib import Parallel, delayed

from .filtration import PostSelectionImpossible

Objective = Callable[[np.ndarray], tuple[float, float]]

STEP_GROW = 1.2
STEP_SHRINK = 0.5
STEP_FLOOR = 1e-12


class Method(str, Enum):
    GRADIENT_ASCENT = "gradient-ascent"
    SPSA = "spsa"


def default_method(dim: int) -> Method:
    """Gradient ascent while 2*dim evaluations per step stay affordable."""
    return Method.GRADIENT_ASCENT if dim <= 72 else Method.SPSA


@dataclass(frozen=True)
class OptimizerConfig:
    method: Method | None = None  # None picks by dimension
    max_iters: int = 5000
    step: float = 0.05
    fd_step: float = 1e-5
    restarts: int = 8
    seed: int = 0
    tol: float = 1e-8
    patience: int = 100  # iterations without a tol-sized improvement before stopping
    spsa_decay: float = 0.999
    spsa_perturbation: float = 0.1
    n_jobs: int = 1
    init_params: np.ndarray | None = None  # warm start applied to restart 0

    def __post_init__(self):
        if self.method is not None:
            object.__setattr__(self, "method", Method(self.method))
        if self.init_params is not None:
            object.__setattr__(self, "init_params", np.asarray(self.init_params, dtype=float))
        if min(self.max_iters, self.restarts, self.patience) < 1:
            raise ValueError("iteration, restart and patience counts must be positive")
        if min(self.step, self.fd_step, self.tol) <= 0:
            raise ValueError("step sizes and tolerance must be positive")


@dataclass(frozen=True)
class OptimizationResult:
    best_params: np.ndarray
    best_value: float
    best_probability: float
    iterations_used: int  # iterations consumed by the winning restart
    restart_values: np.ndarray  # one entry per restart, -inf for failed restarts
    seed: int


def _safe_eval(objective: Objective, params: np.ndarray) -> tuple[float, float]:
    try:
        value, prob = objective(params)
    except PostSelectionImpossible:
        return -math.inf, 0.0
    if not np.isfinite(value):
        return -math.inf, 0.0
    return float(value), float(prob)


def _batch_eval(objective: Objective, block: np.ndarray) -> np.ndarray:
    """Objective values for a block of parameter vectors; -inf marks failures.

    Uses the objective's vectorized ``batch`` method when it has one.
    """
    batch = getattr(objective, "batch", None)
    if batch is not None:
        values, _ = batch(block)
        return np.where(np.isfinite(values), values, -np.inf)
    return np.array([_safe_eval(objective, row)[0] for row in block])


def gradient_fd(
    objective: Objective, params: np.ndarray, fd_step: float
) -> np.ndarray:
    """Central-difference gradient of the objective value.

    Coordinates whose probes are non-finite contribute 0 instead of
    propagating the failure.
    """
    p = np.asarray(params, dtype=float)
    dim = p.shape[0]
    probes = np.repeat(p[None, :], 2 * dim, axis=0)
    idx = np.arange(dim)
    probes[2 * idx, idx] += fd_step
    probes[2 * idx + 1, idx] -= fd_step
    values = _batch_eval(objective, probes)
    up, dn = values[0::2], values[1::2]
    ok = np.isfinite(up) & np.isfinite(dn)
    return np.where(ok, (up - dn) / (2.0 * fd_step), 0.0)


@dataclass
class _RestartOutcome:
    value: float
    params: np.ndarray
    probability: float
    iterations: int
    failed: bool = False


class _BestTracker:
    """Monotone best-so-far with plateau detection."""

    def __init__(self, tol: float, patience: int):
        self.value = -math.inf
        self.params: np.ndarray | None = None
        self.probability = 0.0
        self.tol = tol
        self.patience = patience
        self._last_improve = 0

    def offer(self, iteration: int, value: float, params: np.ndarray, prob: float) -> None:
        if value > self.value:
            if value > self.value + self.tol:
                self._last_improve = iteration
            self.value = value
            self.params = params.copy()
            self.probability = prob

    def plateaued(self, iteration: int) -> bool:
        return iteration - self._last_improve >= self.patience


def _init_point(cfg: OptimizerConfig, restart: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    if cfg.init_params is not None and restart == 0:
        if cfg.init_params.shape != (dim,):
            raise ValueError("init_params dimension mismatch")
        return cfg.init_params.copy()
    return rng.uniform(0.0, 2.0 * np.pi, size=dim)


def _run_gradient_ascent(
    objective: Objective, dim: int, cfg: OptimizerConfig, restart: int
) -> _RestartOutcome:
    rng = np.random.default_rng(cfg.seed + restart)
    p = _init_point(cfg, restart, dim, rng)
    value, prob = _safe_eval(objective, p)
    if not math.isfinite(value):
        return _RestartOutcome(-math.inf, p, 0.0, 0, failed=True)
    best = _BestTracker(cfg.tol, cfg.patience)
    best.offer(0, value, p, prob)
    step = cfg.step
    iteration = 0
    for iteration in range(1, cfg.max_iters + 1):
        grad = gradient_fd(objective, p, cfg.fd_step)
        candidate = p + step * grad
        cand_value, cand_prob = _safe_eval(objective, candidate)
        if cand_value > value:
            p, value, prob = candidate, cand_value, cand_prob
            step *= STEP_GROW
        else:
            step *= STEP_SHRINK
            if step < STEP_FLOOR:
                break
        best.offer(iteration, value, p, prob)
        if best.plateaued(iteration):
            break
    return _RestartOutcome(best.value, best.params, best.probability, iteration)


def _run_spsa(
    objective: Objective, dim: int, cfg: OptimizerConfig, restart: int
) -> _RestartOutcome:
    rng = np.random.default_rng(cfg.seed + restart)
    p = _init_point(cfg, restart, dim, rng)
    value, prob = _safe_eval(objective, p)
    best = _BestTracker(cfg.tol, cfg.patience)
    if math.isfinite(value):
        best.offer(0, value, p, prob)
    gain = cfg.step
    c = cfg.spsa_perturbation
    found_finite = math.isfinite(value)
    iteration = 0
    has_batch = getattr(objective, "batch", None) is not None
    for iteration in range(1, cfg.max_iters + 1):
        delta = rng.integers(0, 2, size=dim) * 2.0 - 1.0
        up_p = p + c * delta
        dn_p = p - c * delta
        if has_batch:
            pair_v, pair_prob = objective.batch(np.stack([up_p, dn_p]))
            up, dn = float(pair_v[0]), float(pair_v[1])
            up_prob, dn_prob = float(pair_prob[0]), float(pair_prob[1])
        else:
            up, up_prob = _safe_eval(objective, up_p)
            dn, dn_prob = _safe_eval(objective, dn_p)
        if math.isfinite(up):
            best.offer(iteration, up, up_p, up_prob)
            found_finite = True
        if math.isfinite(dn):
            best.offer(iteration, dn, dn_p, dn_prob)
            found_finite = True
        if math.isfinite(up) and math.isfinite(dn):
            # delta entries are +-1 so dividing by delta_i is multiplying by it
            p = p + gain * ((up - dn) / (2.0 * c)) * delta
        gain *= cfg.spsa_decay
        if found_finite and best.plateaued(iteration):
            break
    if not found_finite:
        return _RestartOutcome(-math.inf, p, 0.0, iteration, failed=True)
    value, prob = _safe_eval(objective, p)
    if math.isfinite(value):
        best.offer(iteration, value, p, prob)
    return _RestartOutcome(best.value, best.params, best.probability, iteration)


def optimize(objective: Objective, dim: int, cfg: OptimizerConfig) -> OptimizationResult:
    """Maximize the objective over ``dim`` parameters with multi-start.

    The objective maps a parameter vector to (value, probability);
    post-selection failures score -inf. With dim == 0 the objective is
    evaluated once (the no-ancilla baseline has nothing to tune).
    """
    if dim == 0:
        value, prob = _safe_eval(objective, np.zeros(0))
        if not math.isfinite(value):
            raise RuntimeError("zero-dimensional objective is infeasible")
        return OptimizationResult(
            best_params=np.zeros(0),
            best_value=value,
            best_probability=prob,
            iterations_used=0,
            restart_values=np.array([value]),
            seed=cfg.seed,
        )
    method = cfg.method or default_method(dim)
    runner = _run_gradient_ascent if method is Method.GRADIENT_ASCENT else _run_spsa
    if cfg.n_jobs != 1:
        outcomes = Parallel(n_jobs=cfg.n_jobs)(
            delayed(runner)(objective, dim, cfg, r) for r in range(cfg.restarts)
        )
    else:
        outcomes = [runner(objective, dim, cfg, r) for r in range(cfg.restarts)]
    if all(o.failed for o in outcomes):
        raise RuntimeError("every restart failed to find a finite objective value")
    winner = max(range(cfg.restarts), key=lambda r: (outcomes[r].value, -r))
    best = outcomes[winner]
    return OptimizationResult(
        best_params=best.params,
        best_value=best.value,
        best_probability=best.probability,
        iterations_used=best.iterations,
        restart_values=np.array([o.value for o in outcomes]),
        seed=cfg.seed,
    )


def chain(
    objective: Objective, dim: int, stages: list[OptimizerConfig]
) -> OptimizationResult:
    """Run optimizer stages in sequence, warm-starting each from the last best."""
    if not stages:
        raise ValueError("need at least one stage")
    result = optimize(objective, dim, stages[0])
    for cfg in stages[1:]:
        result_next = optimize(objective, dim, replace(cfg, init_params=result.best_params))
        if result_next.best_value >= result.best_value:
            result = result_next
    return result
