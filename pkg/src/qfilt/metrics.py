"""Figures of merit: entanglement fidelity, CHSH value, quantum Fisher information."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import atan, pi

import numpy as np

from .channels import NoiseKind, NoiseSpec
from .filtration import FiltrationOutcome
from .qstate import DensityMatrix, eig_hermitian, phi_plus, tensor

TSIRELSON = 2.0 * np.sqrt(2.0)
SLD_EPS = 1e-12


class MetricKind(str, Enum):
    FIDELITY = "fidelity"
    CHSH_FIXED = "chsh-fixed"
    CHSH_OPT = "chsh-opt"
    QFI = "qfi"


@dataclass(frozen=True)
class MetricValue:
    value: float
    probability: float
    kind: MetricKind

    def __post_init__(self):
        object.__setattr__(self, "kind", MetricKind(self.kind))
        v = self.value
        if self.kind is MetricKind.FIDELITY and not -1e-9 <= v <= 1.0 + 1e-9:
            raise ValueError(f"fidelity {v} outside [0, 1]")
        if self.kind in (MetricKind.CHSH_FIXED, MetricKind.CHSH_OPT) and not (
            -1e-9 <= v <= TSIRELSON + 1e-9
        ):
            raise ValueError(f"CHSH value {v} outside [0, 2*sqrt(2)]")
        if self.kind is MetricKind.QFI and v < -1e-10:
            raise ValueError(f"QFI {v} is negative")


def _as_matrix(state: FiltrationOutcome | DensityMatrix | np.ndarray) -> np.ndarray:
    if isinstance(state, FiltrationOutcome):
        return state.state.mat
    if isinstance(state, DensityMatrix):
        return state.mat
    return np.asarray(state, dtype=complex)


def entanglement_fidelity(state: FiltrationOutcome | DensityMatrix | np.ndarray) -> MetricValue:
    """Overlap <Φ+|ρ|Φ+> of a two-qubit state with the maximally entangled input."""
    rho = _as_matrix(state)
    if rho.shape != (4, 4):
        raise ValueError("entanglement fidelity is defined on two-qubit states")
    target = phi_plus()
    value = float(np.real(target.conj() @ rho @ target))
    prob = state.probability if isinstance(state, FiltrationOutcome) else 1.0
    return MetricValue(value=value, probability=prob, kind=MetricKind.FIDELITY)


@dataclass(frozen=True)
class MeasurementSettings:
    """The eight CHSH angles theta[i][j], phi[i][j] for party i, setting j."""

    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=float)
        p = np.asarray(self.phi, dtype=float)
        if t.shape != (2, 2) or p.shape != (2, 2):
            raise ValueError("theta and phi must be 2x2 angle tables")
        object.__setattr__(self, "theta", t)
        object.__setattr__(self, "phi", p)

    def observable(self, party: int, setting: int) -> np.ndarray:
        return chsh_observable(self.theta[party, setting], self.phi[party, setting])

    def as_array(self) -> np.ndarray:
        """Flat layout [θ00, θ01, θ10, θ11, φ00, φ01, φ10, φ11]."""
        return np.concatenate([self.theta.ravel(), self.phi.ravel()])

    @classmethod
    def from_array(cls, angles: np.ndarray) -> "MeasurementSettings":
        a = np.asarray(angles, dtype=float)
        if a.shape != (8,):
            raise ValueError("expected 8 angles")
        return cls(theta=a[:4].reshape(2, 2), phi=a[4:].reshape(2, 2))


def chsh_observable(theta, phi) -> np.ndarray:
    """Dichotomic observable cosθ σz + sinθ (cosφ σx + sinφ σy); eigenvalues ±1.

    Broadcasts over the angle shapes.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    off = np.exp(1j * phi) * st
    out = np.empty(np.broadcast_shapes(theta.shape, phi.shape) + (2, 2), dtype=complex)
    out[..., 0, 0] = ct
    out[..., 0, 1] = off.conj()
    out[..., 1, 0] = off
    out[..., 1, 1] = -ct
    return out


def chsh_value(
    rho_ab: FiltrationOutcome | DensityMatrix | np.ndarray, settings: MeasurementSettings
) -> float:
    """|Σ_{x,y} (-1)^{xy} Tr(M_{0,x} ⊗ M_{1,y} ρ)| for a two-qubit state."""
    rho = _as_matrix(rho_ab)
    if rho.shape != (4, 4):
        raise ValueError("CHSH is defined on two-qubit states")
    total = 0.0
    for x in range(2):
        for y in range(2):
            m = tensor(settings.observable(0, x), settings.observable(1, y))
            total += (-1) ** (x * y) * np.real(np.trace(m @ rho))
    return float(abs(total))


def fixed_settings(noise: NoiseSpec) -> MeasurementSettings:
    """Angles maximizing the bare-channel (no ancilla) CHSH value.

    For depolarizing noise these are the standard Tsirelson settings; for
    dephasing the second party's polar angles tilt to arctan(q).
    """
    t = atan(noise.q) if noise.kind is NoiseKind.DEPHASING else pi / 4
    theta = np.array([[0.0, pi / 2], [t, t]])
    phi = np.array([[0.0, 0.0], [0.0, pi]])
    return MeasurementSettings(theta=theta, phi=phi)


def sld(rho: np.ndarray, drho: np.ndarray, eps: float = SLD_EPS) -> np.ndarray:
    """Symmetric logarithmic derivative solving dρ = (Lρ + ρL)/2.

    Solved in the eigenbasis of ρ; eigenvalue pairs with λ_l + λ_m <= eps
    are dropped (kernel directions carry no information).
    """
    rho = np.asarray(rho, dtype=complex)
    drho = np.asarray(drho, dtype=complex)
    for name, m in (("rho", rho), ("drho", drho)):
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ValueError(f"{name} must be Hermitian")
    vals, vecs = eig_hermitian(rho)
    d = vecs.conj().T @ drho @ vecs
    denom = vals[:, None] + vals[None, :]
    keep = denom > eps
    lmat = np.zeros_like(d)
    lmat[keep] = 2.0 * d[keep] / denom[keep]
    return vecs @ lmat @ vecs.conj().T


def qfi(rho: np.ndarray, drho: np.ndarray, eps: float = SLD_EPS) -> float:
    """Quantum Fisher information Tr(L² ρ)."""
    l = sld(rho, drho, eps)
    return float(np.real(np.trace(l @ l @ np.asarray(rho, dtype=complex))))


def qfi_stack(rho: np.ndarray, drho: np.ndarray, eps: float = SLD_EPS) -> np.ndarray:
    """Vectorized twin of :func:`qfi` over leading batch axes.

    Kept numerically identical to the scalar route (same eigenbasis
    construction and truncation rule); the scalar function remains the
    reference implementation.
    """
    rho = np.asarray(rho, dtype=complex)
    drho = np.asarray(drho, dtype=complex)
    sym = (rho + np.conj(np.swapaxes(rho, -1, -2))) / 2
    vals, vecs = np.linalg.eigh(sym)
    vecs_dag = np.conj(np.swapaxes(vecs, -1, -2))
    d = vecs_dag @ drho @ vecs
    denom = vals[..., :, None] + vals[..., None, :]
    lmat = np.zeros_like(d)
    keep = denom > eps
    lmat[keep] = 2.0 * d[keep] / denom[keep]
    l = vecs @ lmat @ vecs_dag
    return np.real(np.trace(l @ l @ rho, axis1=-2, axis2=-1))
