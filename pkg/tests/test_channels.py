import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qfilt.channels import (
    KrausSet,
    NoiseKind,
    NoiseSpec,
    RobustnessSpec,
    apply_iid,
    apply_local,
    embed_one_qubit,
    kraus_set,
    swap_mixture,
    swap_permutation,
)
from qfilt.gates import one_qubit_unitary
from qfilt.qstate import SIGMA_0, SIGMA_Z, density, herm, ket, phi_plus, tensor


def random_state(rng, num_qubits):
    d = 2**num_qubits
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_pure(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


class TestNoiseSpec:
    def test_parameter_maps(self):
        assert NoiseSpec(NoiseKind.DEPHASING, 0.6).p == pytest.approx(0.8)
        assert NoiseSpec(NoiseKind.DEPOLARIZING, 1 / 3).p == pytest.approx(0.5)

    @given(st.floats(0.0, 1.0, allow_nan=False))
    @settings(max_examples=40, deadline=None)
    def test_dephasing_kraus_complete_for_any_strength(self, q):
        ops = kraus_set(NoiseSpec(NoiseKind.DEPHASING, q)).ops
        total = sum(k.conj().T @ k for k in ops)
        assert np.max(np.abs(total - np.eye(2))) < 1e-14

    @given(st.floats(1 / 3, 1.0, allow_nan=False))
    @settings(max_examples=40, deadline=None)
    def test_depolarizing_kraus_complete_for_any_strength(self, q):
        ops = kraus_set(NoiseSpec(NoiseKind.DEPOLARIZING, q)).ops
        total = sum(k.conj().T @ k for k in ops)
        assert np.max(np.abs(total - np.eye(2))) < 1e-14

    def test_range_validation(self):
        with pytest.raises(ValueError):
            NoiseSpec(NoiseKind.DEPHASING, 1.2)
        with pytest.raises(ValueError):
            NoiseSpec(NoiseKind.DEPOLARIZING, 0.2)
        with pytest.raises(ValueError):
            RobustnessSpec(q_a=0.1)
        with pytest.raises(ValueError):
            RobustnessSpec(s=-0.2)


class TestKrausSet:
    def test_dephasing_no_noise_is_identity_channel(self):
        ops = kraus_set(NoiseSpec(NoiseKind.DEPHASING, 1.0)).ops
        assert len(ops) == 2
        assert_allclose(ops[0], SIGMA_0, atol=1e-15)
        assert_allclose(ops[1], np.zeros((2, 2)), atol=1e-15)

    def test_completeness_enforced(self):
        with pytest.raises(ValueError):
            KrausSet((SIGMA_0, SIGMA_Z))

    def test_full_dephasing_kills_coherences(self):
        ks = kraus_set(NoiseSpec(NoiseKind.DEPHASING, 0.0))
        rho = density(np.array([1, 1]) / np.sqrt(2))
        out = apply_local(rho, ks, 0)
        assert_allclose(out, np.diag([0.5, 0.5]).astype(complex), atol=1e-14)

    def test_depolarizing_lower_edge_scales_bloch_by_third(self):
        ks = kraus_set(NoiseSpec(NoiseKind.DEPOLARIZING, 1 / 3))
        rng = np.random.default_rng(0)
        rho = random_state(rng, 1)
        out = apply_local(rho, ks, 0)
        # Bloch vector shrinks by exactly q = 1/3
        assert_allclose(out - np.eye(2) / 2, (rho - np.eye(2) / 2) / 3, atol=1e-14)


class TestApplyLocal:
    def test_identity_channel(self):
        ks = kraus_set(NoiseSpec(NoiseKind.DEPOLARIZING, 1.0))
        rng = np.random.default_rng(1)
        rho = random_state(rng, 2)
        assert np.max(np.abs(apply_local(rho, ks, 1) - rho)) < 1e-14

    def test_dephasing_action_on_bell_state(self):
        q = 0.55
        ks = kraus_set(NoiseSpec(NoiseKind.DEPHASING, q))
        rho = density(phi_plus())
        out = apply_local(rho, ks, 1)
        z1 = tensor(SIGMA_0, SIGMA_Z)
        tau = (rho + z1 @ rho @ z1) / 2
        assert_allclose(out, q * rho + (1 - q) * tau, atol=1e-14)

    def test_depolarizing_action_on_pure_state(self):
        q = 0.62
        ks = kraus_set(NoiseSpec(NoiseKind.DEPOLARIZING, q))
        rng = np.random.default_rng(2)
        psi = random_pure(rng)
        out = apply_local(density(psi), ks, 0)
        assert_allclose(out, q * density(psi) + (1 - q) * SIGMA_0 / 2, atol=1e-14)

    def test_embedding_acts_on_requested_qubit(self):
        ks = kraus_set(NoiseSpec(NoiseKind.DEPHASING, 0.0))
        plus = np.array([1, 1]) / np.sqrt(2)
        rho = tensor(density(plus), density(ket("0")))
        out = apply_local(rho, ks, 1)  # qubit 1 is already diagonal
        assert_allclose(out, rho, atol=1e-14)
        out0 = apply_local(rho, ks, 0)
        assert_allclose(out0, tensor(np.eye(2) / 2, density(ket("0"))), atol=1e-14)


class TestApplyIid:
    def test_order_independence(self):
        rng = np.random.default_rng(3)
        rho = random_state(rng, 3)
        ks = kraus_set(NoiseSpec(NoiseKind.DEPOLARIZING, 0.7))
        a = apply_iid(rho, ks, [0, 1, 2])
        b = apply_iid(rho, ks, [2, 0, 1])
        assert np.max(np.abs(a - b)) < 1e-13

    def test_two_qubit_dephasing_coherence_is_q_squared(self):
        # off-diagonal <00|rho|11> of the Bell state picks up one factor of q per qubit
        q = 0.6
        ks = kraus_set(NoiseSpec(NoiseKind.DEPHASING, q))
        out = apply_iid(density(phi_plus()), ks, [0, 1])
        assert out[0, 3] == pytest.approx(q * q / 2, abs=1e-14)
        assert out[0, 0] == pytest.approx(0.5, abs=1e-14)

    def test_no_noise_is_identity(self):
        rng = np.random.default_rng(4)
        rho = random_state(rng, 2)
        ks = kraus_set(NoiseSpec(NoiseKind.DEPHASING, 1.0))
        assert np.max(np.abs(apply_iid(rho, ks, [0, 1]) - rho)) < 1e-14


class TestSwapMixture:
    def test_s_one_is_identity(self):
        rng = np.random.default_rng(5)
        rho = random_state(rng, 2)
        assert_allclose(swap_mixture(rho, 1.0, 0, [1]), rho, atol=1e-15)

    def test_s_zero_single_ancilla_swaps_exactly(self):
        rng = np.random.default_rng(6)
        a, b = random_state(rng, 1), random_state(rng, 1)
        rho = tensor(a, b)
        assert_allclose(swap_mixture(rho, 0.0, 0, [1]), tensor(b, a), atol=1e-14)

    def test_three_ancilla_weights(self):
        # s = 0.7 over three ancillas leaves 0.1 per swap branch
        rng = np.random.default_rng(7)
        rho = random_state(rng, 4)
        out = swap_mixture(rho, 0.7, 0, [1, 2, 3])
        expect = 0.7 * rho
        for a in (1, 2, 3):
            perm = swap_permutation(4, 0, a)
            expect = expect + 0.1 * rho[np.ix_(perm, perm)]
        assert_allclose(out, expect, atol=1e-14)

    def test_empty_ancillas_with_cross_talk_rejected(self):
        with pytest.raises(ValueError):
            swap_mixture(np.eye(2) / 2, 0.5, 0, [])

    def test_trace_preserved(self):
        rng = np.random.default_rng(8)
        rho = random_state(rng, 3)
        out = swap_mixture(rho, 0.4, 0, [1, 2])
        assert abs(np.trace(out) - 1.0) < 1e-13


class TestChannelProperties:
    @pytest.mark.parametrize(
        "spec",
        [NoiseSpec(NoiseKind.DEPHASING, 0.35), NoiseSpec(NoiseKind.DEPOLARIZING, 0.55)],
    )
    def test_trace_and_positivity_preserved(self, spec):
        rng = np.random.default_rng(9)
        ks = kraus_set(spec)
        for _ in range(500):
            rho = random_state(rng, 2)
            out = apply_local(rho, ks, rng.integers(0, 2))
            assert abs(np.trace(out).real - 1.0) < 1e-13
            assert np.linalg.eigvalsh(herm(out)).min() > -1e-10

    def test_dephasing_fixes_computational_diagonal(self):
        ks = kraus_set(NoiseSpec(NoiseKind.DEPHASING, 0.3))
        rho = np.diag([0.2, 0.1, 0.4, 0.3]).astype(complex)
        out = apply_iid(rho, ks, [0, 1])
        assert np.max(np.abs(out - rho)) < 1e-14

    def test_depolarizing_unitary_covariance(self):
        rng = np.random.default_rng(10)
        ks = kraus_set(NoiseSpec(NoiseKind.DEPOLARIZING, 0.6))
        for _ in range(20):
            u = one_qubit_unitary(*rng.uniform(0, 2 * np.pi, 3))
            rho = random_state(rng, 1)
            left = apply_local(u @ rho @ u.conj().T, ks, 0)
            right = u @ apply_local(rho, ks, 0) @ u.conj().T
            assert np.max(np.abs(left - right)) < 1e-12

    def test_kraus_matches_pauli_unitary_averaging(self):
        from qfilt.qstate import PAULIS

        spec = NoiseSpec(NoiseKind.DEPOLARIZING, 0.48)
        p = spec.p
        weights = [p, (1 - p) / 3, (1 - p) / 3, (1 - p) / 3]
        rng = np.random.default_rng(11)
        rho = random_state(rng, 1)
        mixed = sum(w * v @ rho @ v.conj().T for w, v in zip(weights, PAULIS))
        out = apply_local(rho, kraus_set(spec), 0)
        assert np.max(np.abs(out - mixed)) < 1e-14

    def test_embed_one_qubit_matches_tensor(self):
        rng = np.random.default_rng(12)
        op = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        eye = np.eye(2, dtype=complex)
        assert_allclose(embed_one_qubit(op, 0, 3), tensor(op, eye, eye), atol=1e-15)
        assert_allclose(embed_one_qubit(op, 1, 3), tensor(eye, op, eye), atol=1e-15)
        assert_allclose(embed_one_qubit(op, 2, 3), tensor(eye, eye, op), atol=1e-15)
