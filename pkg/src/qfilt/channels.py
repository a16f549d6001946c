"""Exact one-qubit noise channels and the stochastic-SWAP cross-talk mixture.

Dephasing with strength q in [0, 1] uses the Kraus pair
{sqrt(p)*I, sqrt(1-p)*Z} with p = (1+q)/2; q is the factor multiplying the
off-diagonal coherences. The equivalent continuous random-phase picture
(a random Z-phase with first moment q) is represented by this two-operator
set; the two agree channel-wise for phase distributions with vanishing sine
moment, which is assumed throughout.

Depolarizing with strength q in [1/3, 1] uses
{sqrt(p)*I, sqrt((1-p)/3)*X, ..., Y, ..., Z} with p = (1+3q)/4, i.e. the
state survives with probability q and is replaced by I/2 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .qstate import PAULIS, SIGMA_0, SIGMA_Z, herm, num_qubits_of

KRAUS_COMPLETENESS_ATOL = 1e-14


class NoiseKind(str, Enum):
    DEPHASING = "dephasing"
    DEPOLARIZING = "depolarizing"


def _q_range(kind: NoiseKind) -> tuple[float, float]:
    return (0.0, 1.0) if kind is NoiseKind.DEPHASING else (1.0 / 3.0, 1.0)


@dataclass(frozen=True)
class NoiseSpec:
    """Channel kind plus its survival parameter q."""

    kind: NoiseKind
    q: float

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        lo, hi = _q_range(self.kind)
        if not lo - 1e-12 <= self.q <= hi + 1e-12:
            raise ValueError(f"{self.kind.value} strength q={self.q} outside [{lo}, {hi}]")

    @property
    def p(self) -> float:
        """No-error Kraus weight: (1+q)/2 for dephasing, (1+3q)/4 for depolarizing."""
        if self.kind is NoiseKind.DEPHASING:
            return (1.0 + self.q) / 2.0
        return (1.0 + 3.0 * self.q) / 4.0


@dataclass(frozen=True)
class RobustnessSpec:
    """Imperfect-implementation knobs.

    q_a: depolarizing strength applied to each ancilla right after
    preparation (None = perfect preparation). s: probability that no
    signal-ancilla SWAP occurs at the encode and decode stages
    (None = no cross-talk modelled).
    """

    q_a: float | None = None
    s: float | None = None

    def __post_init__(self):
        if self.q_a is not None and not 1.0 / 3.0 - 1e-12 <= self.q_a <= 1.0 + 1e-12:
            raise ValueError(f"ancilla preparation q_a={self.q_a} outside [1/3, 1]")
        if self.s is not None and not 0.0 <= self.s <= 1.0 + 1e-12:
            raise ValueError(f"no-swap probability s={self.s} outside [0, 1]")


@dataclass(frozen=True)
class KrausSet:
    """One-qubit Kraus operators with probabilistic weights folded in."""

    ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.ops)
        object.__setattr__(self, "ops", ops)
        total = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(total - np.eye(2))) > KRAUS_COMPLETENESS_ATOL:
            raise ValueError("Kraus set is not trace preserving")


def kraus_set(spec: NoiseSpec) -> KrausSet:
    """Kraus operators of the channel described by ``spec``."""
    p = spec.p
    if spec.kind is NoiseKind.DEPHASING:
        return KrausSet((np.sqrt(p) * SIGMA_0, np.sqrt(1.0 - p) * SIGMA_Z))
    w = np.sqrt(max(1.0 - p, 0.0) / 3.0)
    return KrausSet((np.sqrt(p) * SIGMA_0, w * PAULIS[1], w * PAULIS[2], w * PAULIS[3]))


def embed_one_qubit(op: np.ndarray, qubit: int, total_qubits: int) -> np.ndarray:
    """Lift a 2x2 operator to the full space, acting on the given qubit."""
    if not 0 <= qubit < total_qubits:
        raise ValueError(f"qubit {qubit} out of range for {total_qubits} qubits")
    left = 2**qubit
    right = 2 ** (total_qubits - 1 - qubit)
    full = np.zeros((2**total_qubits, 2**total_qubits), dtype=complex)
    f = full.reshape(left, 2, right, left, 2, right)
    idx = np.arange(left)
    jdx = np.arange(right)
    for a in range(2):
        for b in range(2):
            if op[a, b] != 0:
                f[idx[:, None], a, jdx[None, :], idx[:, None], b, jdx[None, :]] = op[a, b]
    return full


def apply_kraus_full(rho: np.ndarray, full_ops: list[np.ndarray]) -> np.ndarray:
    """Sum_k K rho K† for already-embedded operators, re-Hermitized."""
    out = np.zeros_like(rho)
    for k in full_ops:
        out += k @ rho @ k.conj().T
    return herm(out)


def apply_local(rho: np.ndarray, kraus: KrausSet, qubit: int) -> np.ndarray:
    """Apply a one-qubit channel to the given qubit of a multi-qubit state."""
    n = num_qubits_of(np.asarray(rho).shape[0])
    full = [embed_one_qubit(k, qubit, n) for k in kraus.ops]
    return apply_kraus_full(np.asarray(rho, dtype=complex), full)


def apply_iid(rho: np.ndarray, kraus: KrausSet, qubits: list[int] | tuple[int, ...]) -> np.ndarray:
    """Apply the same one-qubit channel independently to each listed qubit."""
    out = np.asarray(rho, dtype=complex)
    for q in qubits:
        out = apply_local(out, kraus, q)
    return out


def swap_permutation(total_qubits: int, i: int, j: int) -> np.ndarray:
    """Basis-index permutation implementing SWAP(i, j)."""
    idx = np.arange(2**total_qubits)
    bi = (idx >> (total_qubits - 1 - i)) & 1
    bj = (idx >> (total_qubits - 1 - j)) & 1
    flip = bi ^ bj
    return idx ^ (flip << (total_qubits - 1 - i)) ^ (flip << (total_qubits - 1 - j))


def swap_mixture(
    rho: np.ndarray, s: float, signal: int, ancillas: list[int] | tuple[int, ...]
) -> np.ndarray:
    """Cross-talk model: with probability s nothing happens, otherwise the
    signal is exchanged with one ancilla, each with probability (1-s)/n."""
    if not 0.0 <= s <= 1.0 + 1e-12:
        raise ValueError(f"no-swap probability s={s} outside [0, 1]")
    rho = np.asarray(rho, dtype=complex)
    ancillas = list(ancillas)
    if not ancillas:
        if s < 1.0:
            raise ValueError("cross-talk with s<1 needs at least one ancilla")
        return rho
    n = num_qubits_of(rho.shape[0])
    out = s * rho
    w = (1.0 - s) / len(ancillas)
    for a in ancillas:
        perm = swap_permutation(n, signal, a)
        out = out + w * rho[np.ix_(perm, perm)]
    return out
