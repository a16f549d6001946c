"""Parameterized unitary synthesis.

Two recipes are provided: a 15-parameter minimal two-qubit circuit (four
single-qubit Euler unitaries, three CNOTs and three middle rotations) and a
recursive Shannon-style decomposition for three and four qubits built from
four smaller unitaries interleaved with multiplexed Rz/Ry/Rz rotations.

Parameter layout is depth-first and documented per function so a flat vector
of radians always reproduces the same matrix bit-for-bit; parameter vectors
serialize as flat JSON arrays. Global phase is never constrained.

All builders broadcast over leading axes: passing a (B, 15) parameter block
yields a (B, 4, 4) stack of unitaries, which is what makes finite-difference
gradients affordable in pure numpy.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .qstate import num_qubits_of, tensor

# CNOT in the qubit-0-most-significant convention.
CNOT_01 = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)  # control qubit 0, target qubit 1
CNOT_10 = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)  # control qubit 1, target qubit 0

_ID2 = np.eye(2, dtype=complex)


class Axis(str, Enum):
    X = "x"
    Y = "y"
    Z = "z"


class Recipe(str, Enum):
    MINIMAL_2Q = "minimal2q"
    QSD = "qsd"


def param_count(num_qubits: int) -> int:
    """Parameters consumed by the synthesis recipe: 15, 72, 312 for N=2,3,4."""
    if num_qubits == 2:
        return 15
    if num_qubits in (3, 4):
        return 4 * param_count(num_qubits - 1) + 3 * 2 ** (num_qubits - 1)
    raise ValueError(f"unsupported qubit count {num_qubits}")


def rotation(axis: Axis | str, angle) -> np.ndarray:
    """exp(-i*angle*sigma_axis/2); broadcasts over the angle's shape."""
    axis = Axis(axis)
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    out = np.zeros(angle.shape + (2, 2), dtype=complex)
    if axis is Axis.Y:
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
        out[..., 1, 1] = c
    elif axis is Axis.Z:
        out[..., 0, 0] = c - 1j * s
        out[..., 1, 1] = c + 1j * s
    else:
        out[..., 0, 0] = c
        out[..., 1, 1] = c
        out[..., 0, 1] = -1j * s
        out[..., 1, 0] = -1j * s
    return out


def one_qubit_unitary(alpha, beta, gamma) -> np.ndarray:
    """Euler-decomposed SU(2) element Rz(alpha) @ Ry(beta) @ Rz(gamma)."""
    alpha, beta, gamma = np.broadcast_arrays(
        np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float), np.asarray(gamma, dtype=float)
    )
    cb, sb = np.cos(beta / 2), np.sin(beta / 2)
    ea = np.exp(-0.5j * (alpha + gamma))
    ed = np.exp(-0.5j * (alpha - gamma))
    out = np.empty(np.shape(alpha) + (2, 2), dtype=complex)
    out[..., 0, 0] = ea * cb
    out[..., 0, 1] = -ed * sb
    out[..., 1, 0] = ed.conj() * sb
    out[..., 1, 1] = ea.conj() * cb
    return out


def _kron22(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # 2x2 (x) 2x2 with broadcasting over leading axes
    shape = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    out = np.empty(shape + (4, 4), dtype=complex)
    out[..., 0:2, 0:2] = a[..., 0:1, 0:1] * b
    out[..., 0:2, 2:4] = a[..., 0:1, 1:2] * b
    out[..., 2:4, 0:2] = a[..., 1:2, 0:1] * b
    out[..., 2:4, 2:4] = a[..., 1:2, 1:2] * b
    return out


def minimal_two_qubit(params: np.ndarray) -> np.ndarray:
    """Universal two-qubit unitary from 15 angles.

    Circuit, left to right: (U1 x U2), CNOT(ctrl=1,tgt=0), (Rz x Ry),
    CNOT(ctrl=0,tgt=1), (I x Ry), CNOT(ctrl=1,tgt=0), (U3 x U4).
    Layout: U1, U2 Euler triples (6), the middle Rz/Ry/Ry angles (3),
    then U3, U4 Euler triples (6).
    """
    p = np.asarray(params, dtype=float)
    if p.shape[-1:] != (15,):
        raise ValueError(f"minimal_two_qubit expects 15 parameters, got shape {p.shape}")
    u1 = one_qubit_unitary(p[..., 0], p[..., 1], p[..., 2])
    u2 = one_qubit_unitary(p[..., 3], p[..., 4], p[..., 5])
    mid = _kron22(rotation(Axis.Z, p[..., 6]), rotation(Axis.Y, p[..., 7]))
    ry2 = _kron22(_ID2, rotation(Axis.Y, p[..., 8]))
    u3 = one_qubit_unitary(p[..., 9], p[..., 10], p[..., 11])
    u4 = one_qubit_unitary(p[..., 12], p[..., 13], p[..., 14])
    out = CNOT_10 @ _kron22(u1, u2)
    out = CNOT_01 @ (mid @ out)
    out = CNOT_10 @ (ry2 @ out)
    return _kron22(u3, u4) @ out


@dataclass(frozen=True)
class MultiplexedRotation:
    """Control-state-indexed single-qubit rotation."""

    axis: Axis
    angles: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "axis", Axis(self.axis))
        if a.ndim != 1:
            raise ValueError("angles must be a flat vector")
        n = a.shape[0]
        if n < 1 or (n & (n - 1)):
            raise ValueError("angle count must be a power of two")

    @property
    def num_controls(self) -> int:
        return self.angles.shape[0].bit_length() - 1


def multiplexed_rotation_matrix(
    mr: MultiplexedRotation,
    total_qubits: int,
    target: int,
    controls: list[int] | tuple[int, ...],
) -> np.ndarray:
    """Embed a multiplexed rotation on arbitrary target/control qubits.

    For each computational state c of the controls (read in listed order,
    first entry most significant) the target qubit is rotated by angles[c].
    """
    controls = list(controls)
    qubits = [target, *controls]
    if len(set(qubits)) != len(qubits):
        raise ValueError("target and control indices must be disjoint")
    if min(qubits) < 0 or max(qubits) >= total_qubits:
        raise ValueError("qubit index out of range")
    if mr.angles.shape[0] != 2 ** len(controls):
        raise ValueError(
            f"need {2 ** len(controls)} angles for {len(controls)} controls, "
            f"got {mr.angles.shape[0]}"
        )
    dim = 2**total_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for c, angle in enumerate(mr.angles):
        factors = []
        for q in range(total_qubits):
            if q == target:
                factors.append(rotation(mr.axis, angle))
            elif q in controls:
                bit = (c >> (len(controls) - 1 - controls.index(q))) & 1
                proj = np.zeros((2, 2), dtype=complex)
                proj[bit, bit] = 1.0
                factors.append(proj)
            else:
                factors.append(_ID2)
        out += tensor(*factors)
    return out


def _mux_on_last(axis: Axis, angles: np.ndarray) -> np.ndarray:
    # multiplexed rotation targeting the last qubit, controlled on all others:
    # block diagonal in this bit convention
    m = angles.shape[-1]
    rots = rotation(axis, angles)
    out = np.zeros(angles.shape[:-1] + (2 * m, 2 * m), dtype=complex)
    for c in range(m):
        out[..., 2 * c : 2 * c + 2, 2 * c : 2 * c + 2] = rots[..., c, :, :]
    return out


def _kron_id2_right(v: np.ndarray) -> np.ndarray:
    # V (x) I_2 without the generic kron machinery
    d = v.shape[-1]
    out = np.zeros(v.shape[:-2] + (2 * d, 2 * d), dtype=complex)
    out[..., 0::2, 0::2] = v
    out[..., 1::2, 1::2] = v
    return out


def qsd_unitary(params: np.ndarray, num_qubits: int) -> np.ndarray:
    """Recursive Shannon decomposition for N=3 or 4 qubits.

    Circuit, left to right: V1, multiplexed Rz, V2, multiplexed Ry, V3,
    multiplexed Rz, V4 where each Vi acts on the first N-1 qubits (base case
    the minimal two-qubit circuit) and each multiplexed rotation targets the
    last qubit with 2^(N-1) angles. Layout is depth-first in that order,
    giving 4*p(N-1) + 3*2^(N-1) parameters.
    """
    p = np.asarray(params, dtype=float)
    expected = param_count(num_qubits)
    if p.shape[-1:] != (expected,):
        raise ValueError(
            f"qsd_unitary N={num_qubits} expects {expected} parameters, got shape {p.shape}"
        )
    sub = param_count(num_qubits - 1)
    build = minimal_two_qubit if num_qubits == 3 else (lambda q: qsd_unitary(q, 3))
    m = 2 ** (num_qubits - 1)
    i = 0
    out = None
    for slot in range(7):
        if slot % 2 == 0:  # V1..V4
            block = _kron_id2_right(build(p[..., i : i + sub]))
            i += sub
        else:  # Rz, Ry, Rz
            axis = Axis.Y if slot == 3 else Axis.Z
            block = _mux_on_last(axis, p[..., i : i + m])
            i += m
        out = block if out is None else block @ out
    return out


@dataclass(frozen=True)
class ParamCircuit:
    """A parameter vector plus the synthesis recipe producing its unitary."""

    num_qubits: int
    params: np.ndarray
    recipe: Recipe = None  # type: ignore[assignment]

    def __post_init__(self):
        p = np.asarray(self.params, dtype=float)
        object.__setattr__(self, "params", p)
        if self.recipe is None:
            object.__setattr__(
                self, "recipe", Recipe.MINIMAL_2Q if self.num_qubits == 2 else Recipe.QSD
            )
        expected = param_count(self.num_qubits)
        if p.shape != (expected,):
            raise ValueError(
                f"{self.num_qubits}-qubit circuit needs {expected} parameters, got {p.shape}"
            )

    def unitary(self) -> np.ndarray:
        return circuit_unitary(self)


def circuit_unitary(circuit: ParamCircuit) -> np.ndarray:
    """Synthesize the unitary matrix of a parameterized circuit."""
    if circuit.recipe is Recipe.MINIMAL_2Q:
        return minimal_two_qubit(circuit.params)
    return qsd_unitary(circuit.params, circuit.num_qubits)


def as_unitary(u: ParamCircuit | np.ndarray, num_qubits: int | None = None) -> np.ndarray:
    """Accept either a ParamCircuit or an explicit unitary matrix."""
    if isinstance(u, ParamCircuit):
        mat = circuit_unitary(u)
    else:
        mat = np.asarray(u, dtype=complex)
    if num_qubits is not None and mat.shape[0] != 2**num_qubits:
        raise ValueError(
            f"unitary acts on {num_qubits_of(mat.shape[0])} qubits, expected {num_qubits}"
        )
    return mat
