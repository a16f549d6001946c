import numpy as np
import pytest

from qfilt.analytic import ansatz_unitary, closed_form, closed_form_qfi, qfi_ansatz_encoding
from qfilt.channels import NoiseKind, NoiseSpec, RobustnessSpec
from qfilt.objectives import ObjectiveSpec, SweepTask, evaluate_encoding, make_objective


class TestObjectiveSpec:
    def test_dimensions(self):
        noise = NoiseSpec(NoiseKind.DEPHASING, 0.5)
        assert ObjectiveSpec(SweepTask.FIDELITY, 0, noise).dim == 0
        assert ObjectiveSpec(SweepTask.FIDELITY, 1, noise).dim == 15
        assert ObjectiveSpec(SweepTask.FIDELITY, 2, noise).dim == 72
        assert ObjectiveSpec(SweepTask.FIDELITY, 3, noise).dim == 312
        assert ObjectiveSpec(SweepTask.CHSH_OPT, 1, noise).dim == 23
        assert ObjectiveSpec(SweepTask.CHSH_OPT, 0, noise).dim == 8

    def test_pipeline_task_mapping(self):
        noise = NoiseSpec(NoiseKind.DEPOLARIZING, 0.7)
        assert ObjectiveSpec(SweepTask.QFI, 1, noise).pipeline_config().post_select is False
        assert ObjectiveSpec(SweepTask.CHSH_FIXED, 1, noise).pipeline_config().post_select is True


class TestBatchScalarParity:
    @pytest.mark.parametrize("task", list(SweepTask))
    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_batch_matches_scalar(self, task, n):
        kind = NoiseKind.DEPOLARIZING if task is SweepTask.QFI else NoiseKind.DEPHASING
        rob = RobustnessSpec(q_a=0.8, s=0.9) if (task is SweepTask.FIDELITY and n > 0) else None
        spec = ObjectiveSpec(task, n, NoiseSpec(kind, 0.6), robustness=rob)
        fn, dim = make_objective(spec)
        rng = np.random.default_rng(17)
        block = rng.uniform(0, 2 * np.pi, (6, dim))
        bv, bp = fn.batch(block)
        for i in range(6):
            sv, sp = fn(block[i])
            assert bv[i] == pytest.approx(sv, abs=1e-12)
            assert bp[i] == pytest.approx(sp, abs=1e-12)

    def test_batch_shape_validation(self):
        fn, dim = make_objective(
            ObjectiveSpec(SweepTask.FIDELITY, 1, NoiseSpec(NoiseKind.DEPHASING, 0.5))
        )
        with pytest.raises(ValueError):
            fn.batch(np.zeros((3, dim + 1)))
        with pytest.raises(ValueError):
            fn(np.zeros(dim + 2))


class TestEvaluateEncoding:
    def test_fidelity_of_ansatz(self):
        noise = NoiseSpec(NoiseKind.DEPHASING, 0.8)
        spec = ObjectiveSpec(SweepTask.FIDELITY, 1, noise)
        value, prob = evaluate_encoding(spec, ansatz_unitary(1, noise.kind))
        assert value == pytest.approx(closed_form("F", 1, noise), abs=1e-12)
        assert prob == pytest.approx(closed_form("P", 1, noise), abs=1e-12)

    def test_chsh_fixed_of_ansatz(self):
        noise = NoiseSpec(NoiseKind.DEPOLARIZING, 0.9)
        spec = ObjectiveSpec(SweepTask.CHSH_FIXED, 1, noise)
        value, _ = evaluate_encoding(spec, ansatz_unitary(1, noise.kind))
        assert value == pytest.approx(closed_form("beta-fix", 1, noise), abs=1e-12)

    def test_qfi_of_aligned_ansatz(self):
        spec = ObjectiveSpec(SweepTask.QFI, 1, NoiseSpec(NoiseKind.DEPOLARIZING, 0.66))
        value, prob = evaluate_encoding(spec, qfi_ansatz_encoding(1, spec.theta))
        assert prob == 1.0
        assert value == pytest.approx(closed_form_qfi(1, 0.66), abs=1e-12)

    def test_objective_call_at_zero_dim(self):
        noise = NoiseSpec(NoiseKind.DEPOLARIZING, 0.7)
        fn, dim = make_objective(ObjectiveSpec(SweepTask.FIDELITY, 0, noise))
        value, prob = fn(np.zeros(0))
        assert value == pytest.approx((1 + 3 * 0.7) / 4, abs=1e-13)
        assert prob == 1.0
