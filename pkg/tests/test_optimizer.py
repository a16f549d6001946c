import numpy as np
import pytest

from qfilt.analytic import closed_form
from qfilt.channels import NoiseKind, NoiseSpec
from qfilt.filtration import PostSelectionImpossible
from qfilt.objectives import ObjectiveSpec, SweepTask, make_objective
from qfilt.optimizer import (
    Method,
    OptimizerConfig,
    chain,
    default_method,
    gradient_fd,
    optimize,
)


def quadratic_objective(center):
    def fn(p):
        return -float(np.sum((p - center) ** 2)), 1.0

    return fn


class TestGradientFd:
    def test_quadratic_gradient(self):
        center = np.array([0.3, -1.2, 2.5])
        fn = quadratic_objective(center)
        p = np.array([1.0, 1.0, 1.0])
        grad = gradient_fd(fn, p, 1e-5)
        expected = -2 * (p - center)
        assert np.max(np.abs(grad - expected)) < 1e-6

    def test_constant_objective(self):
        grad = gradient_fd(lambda p: (3.5, 1.0), np.ones(4), 1e-5)
        assert np.array_equal(grad, np.zeros(4))

    def test_failed_probe_zeroes_coordinate(self):
        def fn(p):
            if p[0] > 1.0:
                raise PostSelectionImpossible(0.0)
            return float(p[0] + p[1]), 1.0

        grad = gradient_fd(fn, np.array([1.0, 0.0]), 1e-2)
        assert grad[0] == 0.0
        assert grad[1] == pytest.approx(1.0, abs=1e-9)

    def test_matches_higher_order_stencil_on_fidelity(self):
        fn, dim = make_objective(
            ObjectiveSpec(SweepTask.FIDELITY, 1, NoiseSpec(NoiseKind.DEPHASING, 0.5))
        )
        rng = np.random.default_rng(0)
        h = 1e-3

        def stencil(p, i):
            e = np.zeros(dim)
            e[i] = 1.0
            f = lambda x: fn(x)[0]
            return (
                -f(p + 2 * h * e) + 8 * f(p + h * e) - 8 * f(p - h * e) + f(p - 2 * h * e)
            ) / (12 * h)

        for _ in range(10):
            p = rng.uniform(0, 2 * np.pi, dim)
            grad = gradient_fd(fn, p, 1e-5)
            for i in rng.choice(dim, size=3, replace=False):
                assert grad[i] == pytest.approx(stencil(p, i), abs=1e-4)


class TestOptimize:
    def test_recovers_quadratic_maximum(self):
        center = np.full(5, 2.0)
        cfg = OptimizerConfig(seed=1, restarts=3, max_iters=2000, tol=1e-12)
        result = optimize(quadratic_objective(center), 5, cfg)
        assert np.max(np.abs(result.best_params - center)) < 1e-4
        assert result.best_value == pytest.approx(0.0, abs=1e-8)

    def test_deterministic_given_config(self):
        fn, dim = make_objective(
            ObjectiveSpec(SweepTask.FIDELITY, 1, NoiseSpec(NoiseKind.DEPHASING, 0.4))
        )
        cfg = OptimizerConfig(seed=9, restarts=2, max_iters=60)
        a = optimize(fn, dim, cfg)
        b = optimize(fn, dim, cfg)
        assert np.array_equal(a.best_params, b.best_params)
        assert a.best_value == b.best_value
        assert np.array_equal(a.restart_values, b.restart_values)
        assert a.iterations_used == b.iterations_used

    def test_parallel_restarts_match_sequential(self):
        fn, dim = make_objective(
            ObjectiveSpec(SweepTask.FIDELITY, 1, NoiseSpec(NoiseKind.DEPHASING, 0.4))
        )
        seq = optimize(fn, dim, OptimizerConfig(seed=9, restarts=2, max_iters=40))
        par = optimize(fn, dim, OptimizerConfig(seed=9, restarts=2, max_iters=40, n_jobs=2))
        assert np.array_equal(seq.best_params, par.best_params)
        assert np.array_equal(seq.restart_values, par.restart_values)

    def test_restart_streams_derived_from_seed_plus_index(self):
        fn, dim = make_objective(
            ObjectiveSpec(SweepTask.FIDELITY, 1, NoiseSpec(NoiseKind.DEPHASING, 0.6))
        )
        two = optimize(fn, dim, OptimizerConfig(seed=30, restarts=2, max_iters=30))
        shifted = optimize(fn, dim, OptimizerConfig(seed=31, restarts=1, max_iters=30))
        assert two.restart_values[1] == shifted.restart_values[0]

    def test_best_value_is_max_of_restart_values(self):
        fn, dim = make_objective(
            ObjectiveSpec(SweepTask.FIDELITY, 1, NoiseSpec(NoiseKind.DEPOLARIZING, 0.8))
        )
        result = optimize(fn, dim, OptimizerConfig(seed=2, restarts=4, max_iters=50))
        assert result.best_value == pytest.approx(np.max(result.restart_values), abs=0)
        assert len(result.restart_values) == 4

    def test_best_value_monotone_in_iteration_budget(self):
        # identical seeds make longer runs exact extensions of shorter ones,
        # so the recorded best must be non-decreasing in the budget
        fn, dim = make_objective(
            ObjectiveSpec(SweepTask.FIDELITY, 1, NoiseSpec(NoiseKind.DEPHASING, 0.7))
        )
        values = [
            optimize(fn, dim, OptimizerConfig(seed=8, restarts=1, max_iters=k)).best_value
            for k in (5, 20, 60, 150)
        ]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_zero_dimensional_baseline(self):
        q = 0.42
        fn, dim = make_objective(
            ObjectiveSpec(SweepTask.FIDELITY, 0, NoiseSpec(NoiseKind.DEPHASING, q))
        )
        assert dim == 0
        result = optimize(fn, dim, OptimizerConfig(seed=0))
        assert result.best_value == pytest.approx((1 + q) / 2, abs=1e-13)
        assert result.iterations_used == 0

    def test_all_failures_raise(self):
        def hopeless(p):
            raise PostSelectionImpossible(0.0)

        with pytest.raises(RuntimeError):
            optimize(hopeless, 3, OptimizerConfig(seed=0, restarts=2, max_iters=5))

    def test_method_defaults_by_dimension(self):
        assert default_method(15) is Method.GRADIENT_ASCENT
        assert default_method(72) is Method.GRADIENT_ASCENT
        assert default_method(312) is Method.SPSA

    def test_spsa_improves_on_quadratic(self):
        center = np.full(4, 1.0)
        cfg = OptimizerConfig(
            method=Method.SPSA, seed=3, restarts=2, max_iters=3000, step=0.05
        )
        result = optimize(quadratic_objective(center), 4, cfg)
        assert result.best_value > -0.05

    def test_warm_start_used_by_first_restart(self):
        center = np.full(3, 0.5)
        init = center + 1e-3
        cfg = OptimizerConfig(seed=4, restarts=1, max_iters=50, init_params=init)
        result = optimize(quadratic_objective(center), 3, cfg)
        assert result.best_value > -1e-5

    def test_chain_warm_starts_stages(self):
        center = np.full(4, 3.0)
        stages = [
            OptimizerConfig(method=Method.SPSA, seed=5, restarts=2, max_iters=400),
            OptimizerConfig(seed=6, restarts=1, max_iters=500, tol=1e-12),
        ]
        result = chain(quadratic_objective(center), 4, stages)
        assert result.best_value == pytest.approx(0.0, abs=1e-6)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            OptimizerConfig(restarts=0)
        with pytest.raises(ValueError):
            OptimizerConfig(step=-1.0)


class TestOptimizationRecovery:
    def test_one_ancilla_dephasing_reaches_ansatz_value(self):
        noise = NoiseSpec(NoiseKind.DEPHASING, 0.5)
        fn, dim = make_objective(ObjectiveSpec(SweepTask.FIDELITY, 1, noise))
        result = optimize(fn, dim, OptimizerConfig(seed=42, restarts=3))
        assert result.best_value >= closed_form("F", 1, noise) - 1e-3
        assert result.best_probability == pytest.approx(
            closed_form("P", 1, noise), abs=1e-3
        )

    def test_chsh_opt_beats_fixed_settings(self):
        noise = NoiseSpec(NoiseKind.DEPHASING, 0.5)
        fn, dim = make_objective(ObjectiveSpec(SweepTask.CHSH_OPT, 1, noise))
        assert dim == 15 + 8
        result = optimize(fn, dim, OptimizerConfig(seed=7, restarts=3))
        assert result.best_value >= closed_form("beta-fix", 1, noise) - 1e-3

    def test_monotone_best_value_across_ancilla_counts(self):
        # more ancillas can only help at the optimum
        cfg = OptimizerConfig(seed=11, restarts=3)
        for kind, grid in (
            (NoiseKind.DEPHASING, (0.2, 0.4, 0.55, 0.7, 0.9)),
            (NoiseKind.DEPOLARIZING, (0.4, 0.55, 0.7, 0.8, 0.9)),
        ):
            for q in grid:
                values = []
                for n in (0, 1, 2):
                    fn, dim = make_objective(
                        ObjectiveSpec(SweepTask.FIDELITY, n, NoiseSpec(kind, q))
                    )
                    values.append(optimize(fn, dim, cfg).best_value)
                assert values[1] >= values[0] - 1e-3
                assert values[2] >= values[1] - 1e-3
