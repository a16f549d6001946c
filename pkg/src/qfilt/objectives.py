"""Objective functions tying circuits, pipelines and metrics together.

Each sweep task maps a flat parameter vector to (value, probability):

* fidelity / chsh-fixed / qfi consume the circuit parameters only
  (15/72/312 for n = 1/2/3; zero parameters for the bare channel);
* chsh-opt appends the eight measurement angles to the circuit vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import filtration as flt
from . import metrics
from .analytic import QFI_PROBE_THETA
from .channels import NoiseSpec, RobustnessSpec
from .filtration import FiltrationPipeline, PipelineConfig, Task
from .gates import _kron22, minimal_two_qubit, param_count, qsd_unitary
from .qstate import density, ket, phi_plus, tensor


class SweepTask(str, Enum):
    FIDELITY = "fidelity"
    CHSH_FIXED = "chsh-fixed"
    CHSH_OPT = "chsh-opt"
    QFI = "qfi"

    @property
    def pipeline_task(self) -> Task:
        if self is SweepTask.QFI:
            return Task.QFI
        if self is SweepTask.FIDELITY:
            return Task.FIDELITY
        return Task.CHSH


@dataclass(frozen=True)
class ObjectiveSpec:
    """Everything needed to evaluate one figure of merit at one grid point."""

    task: SweepTask
    n_ancillas: int
    noise: NoiseSpec
    robustness: RobustnessSpec | None = None
    theta: float = QFI_PROBE_THETA

    def __post_init__(self):
        object.__setattr__(self, "task", SweepTask(self.task))

    @property
    def circuit_dim(self) -> int:
        return 0 if self.n_ancillas == 0 else param_count(self.n_ancillas + 1)

    @property
    def dim(self) -> int:
        return self.circuit_dim + (8 if self.task is SweepTask.CHSH_OPT else 0)

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            n_ancillas=self.n_ancillas,
            noise=self.noise,
            robustness=self.robustness,
            task=self.task.pipeline_task,
        )


def _chsh_terms(settings: metrics.MeasurementSettings) -> list[tuple[float, np.ndarray]]:
    return [
        (
            float((-1) ** (x * y)),
            tensor(settings.observable(0, x), settings.observable(1, y)),
        )
        for x in range(2)
        for y in range(2)
    ]


def _qfi_inputs(theta: float, n_ancillas: int) -> tuple[np.ndarray, np.ndarray]:
    psi = flt.theta_state(theta)
    dpsi = flt.theta_state_derivative(theta)
    rho = density(psi)
    drho = np.outer(dpsi, psi.conj()) + np.outer(psi, dpsi.conj())
    if n_ancillas > 0:
        anc = density(ket("0" * n_ancillas))
        rho = tensor(rho, anc)
        drho = tensor(drho, anc)
    return rho, drho


class ObjectiveFn:
    """Callable objective; a class (not a closure) so it pickles for workers."""

    def __init__(self, spec: ObjectiveSpec):
        self.spec = spec
        self.pipeline = FiltrationPipeline(spec.pipeline_config())
        if spec.task is SweepTask.QFI:
            self.input_vec = None
            self.rho_in, self.drho_in = _qfi_inputs(spec.theta, spec.n_ancillas)
        else:
            self.input_vec = flt.fidelity_input(spec.n_ancillas)
            self.rho_fid_in = density(self.input_vec)
        self.target = phi_plus()
        self.fixed_observables = None
        if spec.task is SweepTask.CHSH_FIXED:
            settings = metrics.fixed_settings(spec.noise)
            self.fixed_observables = _chsh_terms(settings)

    def encoding(self, params: np.ndarray) -> np.ndarray:
        """Circuit unitary for a parameter vector or a stacked (B, dim) block."""
        n = self.spec.n_ancillas
        if n == 0:
            return np.eye(2, dtype=complex)
        circuit_params = params[..., : self.spec.circuit_dim]
        if n == 1:
            return minimal_two_qubit(circuit_params)
        return qsd_unitary(circuit_params, n + 1)

    def __call__(self, params: np.ndarray) -> tuple[float, float]:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.spec.dim,):
            raise ValueError(f"objective expects {self.spec.dim} parameters")
        u = self.encoding(params)
        task = self.spec.task
        if task is SweepTask.QFI:
            lifted = self.pipeline.lift(u)
            rho = self.pipeline.propagate(self.rho_in, lifted)
            drho = self.pipeline.propagate(self.drho_in, lifted)
            return metrics.qfi(rho, drho), 1.0
        outcome = self.pipeline.run(u, self.input_vec)
        rho = outcome.state.mat
        if task is SweepTask.FIDELITY:
            value = float(np.real(self.target.conj() @ rho @ self.target))
            return value, outcome.probability
        if task is SweepTask.CHSH_FIXED:
            terms = self.fixed_observables
        else:
            settings = metrics.MeasurementSettings.from_array(params[self.spec.circuit_dim :])
            terms = _chsh_terms(settings)
        value = abs(sum(sign * np.real(np.trace(m @ rho)) for sign, m in terms))
        return float(value), outcome.probability

    def batch(self, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate a (B, dim) block of parameter vectors in one vectorized pass.

        Post-selection failures yield -inf values instead of raising. The
        math is identical to the scalar path (asserted by the test suite).
        """
        p = np.asarray(params, dtype=float)
        if p.ndim != 2 or p.shape[1] != self.spec.dim:
            raise ValueError(f"expected a (B, {self.spec.dim}) parameter block")
        b = p.shape[0]
        task = self.spec.task
        u = self.encoding(p) if self.spec.n_ancillas > 0 else np.broadcast_to(
            np.eye(2, dtype=complex), (b, 2, 2)
        )
        lifted = self.pipeline.lift(u)
        if task is SweepTask.QFI:
            rho = self.pipeline.propagate(self.rho_in, lifted)
            drho = self.pipeline.propagate(self.drho_in, lifted)
            return metrics.qfi_stack(rho, drho), np.ones(b)
        out = self.pipeline.propagate(self.rho_fid_in, lifted)
        stride = 2**self.spec.n_ancillas
        block = out[..., ::stride, ::stride]
        probs = np.real(np.trace(block, axis1=-2, axis2=-1))
        valid = probs >= flt.PROBABILITY_FLOOR
        safe = np.where(valid, probs, 1.0)
        states = block / safe[:, None, None]
        if task is SweepTask.FIDELITY:
            values = np.real(
                np.einsum("i,bij,j->b", self.target.conj(), states, self.target)
            )
        else:
            if task is SweepTask.CHSH_FIXED:
                terms = self.fixed_observables
            else:
                angles = p[:, self.spec.circuit_dim :]
                m0 = metrics.chsh_observable(angles[:, 0:2], angles[:, 4:6])  # (B,2,2,2)
                m1 = metrics.chsh_observable(angles[:, 2:4], angles[:, 6:8])
                terms = [
                    (float((-1) ** (x * y)), _kron22(m0[:, x], m1[:, y]))
                    for x in range(2)
                    for y in range(2)
                ]
            total = np.zeros(b)
            for sign, m in terms:
                sub = "bij,bji->b" if m.ndim == 3 else "ij,bji->b"
                total += sign * np.real(np.einsum(sub, m, states))
            values = np.abs(total)
        return np.where(valid, values, -np.inf), np.where(valid, probs, 0.0)


def make_objective(spec: ObjectiveSpec) -> tuple[ObjectiveFn, int]:
    """Objective callable plus its parameter-space dimension."""
    return ObjectiveFn(spec), spec.dim


def evaluate_encoding(
    spec: ObjectiveSpec,
    encoding: np.ndarray,
    settings: metrics.MeasurementSettings | None = None,
) -> tuple[float, float]:
    """Value and probability of a fixed encoding under a spec's pipeline.

    CHSH tasks default to the fixed settings of the channel; pass
    ``settings`` to evaluate other measurement angles.
    """
    if spec.task is SweepTask.QFI:
        cfg = spec.pipeline_config()
        rho, drho = flt.derivative_pipeline(cfg, encoding, spec.theta)
        return metrics.qfi(rho, drho), 1.0
    pipeline = FiltrationPipeline(spec.pipeline_config())
    outcome = pipeline.run(
        np.asarray(encoding, dtype=complex), flt.fidelity_input(spec.n_ancillas)
    )
    if spec.task is SweepTask.FIDELITY:
        return metrics.entanglement_fidelity(outcome).value, outcome.probability
    if settings is None:
        settings = metrics.fixed_settings(spec.noise)
    return metrics.chsh_value(outcome, settings), outcome.probability
