"""End-to-end filtration pipelines: encode, noise, decode, post-select.

Layouts by task:

* fidelity / CHSH: reference qubit 0, signal qubit 1, ancillas 2..n+1.
  Input |Φ+>_(RS) ⊗ |0...0>, encoding acts on signal+ancillas, the channel
  hits signal and ancillas (never the reference), decode inverts the
  encoding, and the ancillas are post-selected on |0...0>.
* QFI: signal qubit 0, ancillas 1..n. Input |ψ_θ> ⊗ |0...0>; no reference,
  no post-selection, and the decoding unitary is omitted by default (the
  figure of merit is invariant under θ-independent unitaries).

Optional imperfections: a depolarizing channel on each ancilla right after
preparation, and a stochastic signal-ancilla SWAP applied before the
encoding and again after the decoding (two independent draws, evaluated as
exact mixtures rather than sampled).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import cos, sin

import numpy as np

from . import channels as ch
from .channels import NoiseKind, NoiseSpec, RobustnessSpec
from .gates import ParamCircuit, as_unitary
from .qstate import DensityMatrix, PureState, density, herm, ket, phi_plus, tensor

PROBABILITY_FLOOR = 1e-15


class Task(str, Enum):
    FIDELITY = "fidelity"
    CHSH = "chsh"
    QFI = "qfi"


class PostSelectionImpossible(RuntimeError):
    """Raised when the all-zeros ancilla outcome has vanishing probability."""

    def __init__(self, raw_trace: float):
        super().__init__(f"post-selection probability {raw_trace} below {PROBABILITY_FLOOR}")
        self.raw_trace = raw_trace


@dataclass(frozen=True)
class PipelineConfig:
    """What to simulate: ancilla count, channels, task and post-selection."""

    n_ancillas: int
    noise: NoiseSpec
    robustness: RobustnessSpec | None = None
    task: Task = Task.FIDELITY
    post_select: bool | None = None
    decode: bool | None = None

    def __post_init__(self):
        if not 0 <= self.n_ancillas <= 3:
            raise ValueError("supported ancilla counts are 0..3")
        object.__setattr__(self, "task", Task(self.task))
        if self.post_select is None:
            object.__setattr__(self, "post_select", self.task is not Task.QFI)
        if self.decode is None:
            object.__setattr__(self, "decode", self.task is not Task.QFI)
        if self.task is Task.QFI and self.post_select:
            raise ValueError("the QFI pipeline keeps all measurement outcomes")
        if self.task is not Task.QFI and not self.post_select:
            raise ValueError("fidelity/CHSH pipelines are defined on the post-selected state")

    @property
    def has_reference(self) -> bool:
        return self.task is not Task.QFI

    @property
    def total_qubits(self) -> int:
        return self.n_ancillas + 1 + (1 if self.has_reference else 0)

    @property
    def signal_qubit(self) -> int:
        return 1 if self.has_reference else 0

    @property
    def ancilla_qubits(self) -> tuple[int, ...]:
        first = self.signal_qubit + 1
        return tuple(range(first, first + self.n_ancillas))


@dataclass(frozen=True)
class FiltrationOutcome:
    """Post-selected output state, success probability and bookkeeping."""

    state: DensityMatrix
    probability: float
    raw_trace: float


def theta_state(theta: float) -> np.ndarray:
    """One-qubit probe |ψ_θ> = cos(θ/2)|0> + sin(θ/2)|1>."""
    return np.array([cos(theta / 2), sin(theta / 2)], dtype=complex)


def theta_state_derivative(theta: float) -> np.ndarray:
    """d/dθ of the probe state."""
    return 0.5 * np.array([-sin(theta / 2), cos(theta / 2)], dtype=complex)


def fidelity_input(n_ancillas: int) -> np.ndarray:
    """|Φ+>_(RS) ⊗ |0>^n, the input for fidelity and CHSH tasks."""
    if n_ancillas == 0:
        return phi_plus()
    return tensor(
        phi_plus().reshape(-1, 1), ket("0" * n_ancillas).reshape(-1, 1)
    ).ravel()


def qfi_input(theta: float, n_ancillas: int) -> np.ndarray:
    """|ψ_θ> ⊗ |0>^n, the input for the QFI task."""
    if n_ancillas == 0:
        return theta_state(theta)
    return tensor(
        theta_state(theta).reshape(-1, 1), ket("0" * n_ancillas).reshape(-1, 1)
    ).ravel()


class FiltrationPipeline:
    """Reusable engine for one configuration.

    Embedded Kraus operators and swap permutations are precomputed once so
    repeated evaluation with different encodings (the optimizer hot loop)
    only pays for the matrix products.
    """

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        n_tot = cfg.total_qubits
        noisy = [cfg.signal_qubit, *cfg.ancilla_qubits]
        noise_ops = ch.kraus_set(cfg.noise).ops
        self._noise_full = [
            [ch.embed_one_qubit(k, q, n_tot) for k in noise_ops] for q in noisy
        ]
        self._prep_full = None
        self._swap_s = None
        rob = cfg.robustness
        if rob is not None and rob.q_a is not None and cfg.n_ancillas > 0:
            prep_ops = ch.kraus_set(NoiseSpec(NoiseKind.DEPOLARIZING, rob.q_a)).ops
            self._prep_full = [
                [ch.embed_one_qubit(k, q, n_tot) for k in prep_ops]
                for q in cfg.ancilla_qubits
            ]
        if rob is not None and rob.s is not None and cfg.n_ancillas > 0:
            self._swap_perms = [
                ch.swap_permutation(n_tot, cfg.signal_qubit, a) for a in cfg.ancilla_qubits
            ]
            self._swap_s = rob.s

    def lift(self, encoding: np.ndarray) -> np.ndarray:
        """Embed the signal+ancilla unitary into the full space.

        Broadcasts over leading axes of a stacked encoding.
        """
        if not self.cfg.has_reference:
            return encoding
        d = encoding.shape[-1]
        full = np.zeros(encoding.shape[:-2] + (2 * d, 2 * d), dtype=complex)
        full[..., :d, :d] = encoding
        full[..., d:, d:] = encoding
        return full

    def _swap_mix(self, rho: np.ndarray) -> np.ndarray:
        out = self._swap_s * rho
        w = (1.0 - self._swap_s) / len(self._swap_perms)
        for perm in self._swap_perms:
            out = out + w * rho[..., perm[:, None], perm[None, :]]
        return out

    def propagate(self, op: np.ndarray, encoding_full: np.ndarray) -> np.ndarray:
        """Push any input operator through the (linear) pre-measurement map.

        Both the operator and the lifted encoding may carry leading batch
        axes; the output broadcasts accordingly.
        """
        dagger = np.conj(np.swapaxes(encoding_full, -1, -2))
        out = op
        if self._prep_full is not None:
            for ops in self._prep_full:
                out = ch.apply_kraus_full(out, ops)
        if self._swap_s is not None:
            out = self._swap_mix(out)
        out = encoding_full @ out @ dagger
        for ops in self._noise_full:
            out = ch.apply_kraus_full(out, ops)
        if self.cfg.decode:
            out = dagger @ out @ encoding_full
        if self._swap_s is not None:
            out = self._swap_mix(out)
        return herm(out)

    def run(self, encoding: np.ndarray, input_vec: np.ndarray) -> FiltrationOutcome:
        rho = self.propagate(density(input_vec), self.lift(encoding))
        if not self.cfg.post_select or self.cfg.n_ancillas == 0:
            return FiltrationOutcome(
                state=DensityMatrix(rho, num_qubits=self.cfg.total_qubits),
                probability=1.0,
                raw_trace=1.0,
            )
        # ancillas occupy the trailing (least significant) index bits, so the
        # all-zeros block is a strided slice
        stride = 2**self.cfg.n_ancillas
        block = rho[::stride, ::stride]
        prob = float(np.trace(block).real)
        if prob < PROBABILITY_FLOOR:
            raise PostSelectionImpossible(prob)
        state = DensityMatrix(herm(block) / prob, num_qubits=2)
        return FiltrationOutcome(state=state, probability=prob, raw_trace=prob)


def run_filtration(
    cfg: PipelineConfig,
    circuit: ParamCircuit | np.ndarray,
    input_state: PureState | np.ndarray,
) -> FiltrationOutcome:
    """Run the configured pipeline for one encoding and input state.

    ``circuit`` may be a ParamCircuit or an explicit unitary on
    n_ancillas + 1 qubits (identity for the n=0 baseline).
    """
    encoding = as_unitary(circuit, cfg.n_ancillas + 1)
    vec = input_state.vec if isinstance(input_state, PureState) else np.asarray(input_state)
    if vec.shape[0] != 2**cfg.total_qubits:
        raise ValueError(
            f"input state has dimension {vec.shape[0]}, pipeline needs {2**cfg.total_qubits}"
        )
    return FiltrationPipeline(cfg).run(encoding, vec)


def derivative_pipeline(
    cfg: PipelineConfig,
    circuit: ParamCircuit | np.ndarray,
    theta: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Output state and its θ-derivative for the QFI task.

    The derivative of the input projector is pushed through the same linear
    map as the state itself, so no finite differencing is involved.
    """
    if cfg.task is not Task.QFI:
        raise ValueError("derivative_pipeline is only defined for the QFI task")
    encoding = as_unitary(circuit, cfg.n_ancillas + 1)
    pipe = FiltrationPipeline(cfg)
    psi = theta_state(theta)
    dpsi = theta_state_derivative(theta)
    rho_in = density(psi)
    drho_in = np.outer(dpsi, psi.conj()) + np.outer(psi, dpsi.conj())
    if cfg.n_ancillas > 0:
        anc = density(ket("0" * cfg.n_ancillas))
        rho_in = tensor(rho_in, anc)
        drho_in = tensor(drho_in, anc)
    lifted = pipe.lift(encoding)
    return pipe.propagate(rho_in, lifted), pipe.propagate(drho_in, lifted)
