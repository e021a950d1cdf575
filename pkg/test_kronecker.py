#!/usr/bin/env python3
"""
Testes da inferência GP em grade: produto de Kronecker, gradiente conjugado
e equivalência com o GP denso.
"""
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

import numpy as np
import pytest
from scipy.stats import norm

from gp.cg import conjugate_gradient, default_max_iters
from gp.dense import Dataset, dense_gp_predict, fit_dense_gp, log_marginal_likelihood
from gp.grid import GridAxes, normalize_axis
from gp.kernels import RationalQuadratic, SpectralMixture, per_axis_product
from gp.kronecker import (
    KronGPModel,
    axis_gram_factors,
    grid_gp_fit,
    grid_gp_predict,
    kron_eigendecomposition,
    kron_log_determinant,
    kron_log_marginal_likelihood,
    kron_matvec,
    optimize_grid_hyperparameters,
    subsample_observations,
)
from utils.errors import ConvergenceError, InvalidArgumentError, ModelStateError


def _axes(shape):
    return GridAxes(tuple(np.linspace(0.0, 1.0, n) for n in shape))


def _random_kernels(rng):
    frequency = (
        SpectralMixture((rng.uniform(0.3, 1.0),), (rng.uniform(0.0, 1.0),), (rng.uniform(0.5, 3.0),))
        if rng.uniform() < 0.5
        else RationalQuadratic(rng.uniform(0.5, 2.0), rng.uniform(0.2, 1.0), rng.uniform(0.5, 5.0))
    )
    return (
        frequency,
        RationalQuadratic(rng.uniform(0.5, 2.0), rng.uniform(0.2, 1.0), rng.uniform(0.5, 5.0)),
        RationalQuadratic(rng.uniform(0.5, 2.0), rng.uniform(0.2, 1.0), rng.uniform(0.5, 5.0)),
    )


def _dense_oracle(axes, mask, targets, kernels, noise, query):
    observed = np.flatnonzero(mask.ravel())
    model = fit_dense_gp(Dataset(axes.points(observed), targets), per_axis_product(kernels), noise)
    return dense_gp_predict(model, query)


class TestGridAxes:
    def test_normalization(self):
        np.testing.assert_allclose(normalize_axis([3.4e9, 3.5e9, 3.6e9]), [0.0, 0.5, 1.0])
        np.testing.assert_array_equal(normalize_axis([7.0]), [0.0])

    def test_from_grid_shape_and_points(self):
        axes = GridAxes.from_grid(np.linspace(3.4e9, 3.6e9, 5), 4, 3)
        assert axes.shape == (5, 4, 3) and axes.size == 60
        np.testing.assert_allclose(axes.points([0, 59]), [[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])

    def test_irregular_axes_allowed_but_must_increase(self):
        GridAxes((np.array([0.0, 0.1, 1.0]), np.array([0.0, 1.0]), np.array([0.0])))
        with pytest.raises(InvalidArgumentError):
            GridAxes((np.array([0.0, 0.0]), np.array([0.0]), np.array([0.0])))


class TestKronMatvec:
    def test_identity_factors(self):
        v = np.arange(6.0)
        np.testing.assert_array_equal(kron_matvec([np.eye(2), np.eye(3)], v), v)

    def test_scalar_factor(self):
        np.testing.assert_array_equal(kron_matvec([np.array([[2.0]])], np.array([3.0])), [6.0])

    def test_matches_materialized_product(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            dims = rng.integers(1, 6, size=3)
            factors = [rng.standard_normal((d, d)) for d in dims]
            v = rng.standard_normal(int(np.prod(dims)))
            dense = np.kron(np.kron(factors[0], factors[1]), factors[2])
            np.testing.assert_allclose(kron_matvec(factors, v), dense @ v, atol=1e-10)

    def test_rectangular_factors(self):
        rng = np.random.default_rng(1)
        factors = [rng.standard_normal((2, 3)), rng.standard_normal((4, 2))]
        v = rng.standard_normal(6)
        np.testing.assert_allclose(kron_matvec(factors, v), np.kron(*factors) @ v, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            kron_matvec([np.eye(2), np.eye(3)], np.ones(5))


class TestKronEigendecomposition:
    def test_diagonal_case(self):
        eigen = kron_eigendecomposition([np.diag([1.0, 2.0]), np.array([[3.0]])])
        np.testing.assert_allclose(np.sort(eigen.product_eigenvalues()), [3.0, 6.0])

    def test_matches_direct_eigendecomposition(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((3, 3))
        b = rng.standard_normal((2, 2))
        A, B = a @ a.T + np.eye(3), b @ b.T + np.eye(2)
        eigen = kron_eigendecomposition([A, B])
        direct = np.linalg.eigvalsh(np.kron(A, B))
        np.testing.assert_allclose(np.sort(eigen.product_eigenvalues()), direct, atol=1e-10)

    def test_identity_factors(self):
        eigen = kron_eigendecomposition([np.eye(2), np.eye(3)])
        np.testing.assert_allclose(eigen.product_eigenvalues(), 1.0)

    def test_non_symmetric_factor(self):
        with pytest.raises(InvalidArgumentError):
            kron_eigendecomposition([np.array([[1.0, 2.0], [0.0, 1.0]])])


class TestConjugateGradient:
    def test_solves_spd_system(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((20, 20))
        A = a @ a.T + 20 * np.eye(20)
        b = rng.standard_normal(20)
        result = conjugate_gradient(lambda v: A @ v, b, tol=1e-10)
        np.testing.assert_allclose(result.solution, np.linalg.solve(A, b), atol=1e-8)
        assert result.residual <= 1e-10
        assert 0 < result.iterations <= 20

    def test_ill_conditioned_system_reaches_true_residual(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((30, 30))
        A = a @ a.T + 1e-2 * np.eye(30)
        b = rng.standard_normal(30)
        result = conjugate_gradient(lambda v: A @ v, b, tol=1e-8, max_iters=2000)
        assert result.residual <= 1e-8
        assert result.iterations < 200
        np.testing.assert_allclose(np.linalg.norm(A @ result.solution - b) / np.linalg.norm(b), result.residual)

    def test_warm_start_at_solution_needs_no_iterations(self):
        A = np.diag([1.0, 2.0, 4.0])
        b = np.array([1.0, 1.0, 1.0])
        result = conjugate_gradient(lambda v: A @ v, b, x0=np.linalg.solve(A, b))
        assert result.iterations == 0
        assert result.residual <= 1e-12

    def test_zero_rhs(self):
        result = conjugate_gradient(lambda v: 2.0 * v, np.zeros(4))
        assert result.iterations == 0 and np.all(result.solution == 0.0)

    def test_non_convergence_carries_residual(self):
        A = np.diag(np.logspace(0, 8, 50))
        with pytest.raises(ConvergenceError) as info:
            conjugate_gradient(lambda v: A @ v, np.ones(50), tol=1e-12, max_iters=3)
        assert info.value.residual > 1e-12
        assert info.value.iterations == 3

    def test_default_iteration_cap(self):
        assert default_max_iters(100) == 100
        assert default_max_iters(64) == 80

    def test_default_cap_follows_grid_size(self):
        A = np.diag(np.logspace(0, 6, 16))
        with pytest.raises(ConvergenceError) as info:
            conjugate_gradient(lambda v: A @ v, np.ones(16), tol=1e-14, grid_size=1)
        assert info.value.iterations == default_max_iters(1)


class TestGridFit:
    def test_full_grid_matches_dense_on_random_draws(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            shape = tuple(int(v) for v in rng.integers(2, [6, 5, 4]))
            axes = _axes(shape)
            kernels = _random_kernels(rng)
            noise = float(rng.uniform(1e-3, 1e-1))
            mask = np.ones(shape, dtype=bool)
            targets = rng.standard_normal(axes.size)
            model = grid_gp_fit(axes, mask, targets, kernels, noise)
            assert model.diagnostics.solver == "eigen"
            mean, _ = grid_gp_predict(model)
            expected, _ = _dense_oracle(axes, mask, targets, kernels, noise, axes.points())
            assert np.max(np.abs(mean.ravel() - expected)) <= 1e-6

    def test_masked_grid_matches_dense(self):
        rng = np.random.default_rng(6)
        for _ in range(5):
            axes = _axes((4, 4, 4))
            kernels = _random_kernels(rng)
            mask = np.zeros(64, dtype=bool)
            mask[rng.choice(64, size=32, replace=False)] = True
            mask = mask.reshape(4, 4, 4)
            targets = rng.standard_normal(32)
            model = grid_gp_fit(axes, mask, targets, kernels, 0.05, cg_tol=1e-8, cg_max_iters=500)
            assert model.diagnostics.solver == "cg"
            assert model.diagnostics.residual <= 1e-8
            mean, _ = grid_gp_predict(model)
            expected, _ = _dense_oracle(axes, mask, targets, kernels, 0.05, axes.points())
            assert np.max(np.abs(mean.ravel() - expected)) <= 1e-4

    def test_cg_on_full_grid_matches_eigen(self):
        rng = np.random.default_rng(7)
        axes = _axes((3, 4, 2))
        kernels = _random_kernels(rng)
        targets = rng.standard_normal(axes.size)
        mask = np.ones(axes.shape, dtype=bool)
        eigen = grid_gp_fit(axes, mask, targets, kernels, 1e-2)
        cg = grid_gp_fit(axes, mask, targets, kernels, 1e-2, cg_tol=1e-10, cg_max_iters=1000, solver="cg")
        np.testing.assert_allclose(grid_gp_predict(cg)[0], grid_gp_predict(eigen)[0], atol=1e-5)

    def test_single_observation_closed_form(self):
        axes = _axes((3, 3, 2))
        kernels = (RationalQuadratic(1.0, 0.5, 1.0), RationalQuadratic(2.0, 0.3, 2.0), RationalQuadratic(0.5, 1.0, 1.0))
        mask = np.zeros(axes.shape, dtype=bool)
        mask[1, 2, 0] = True
        noise, y = 0.1, 0.8
        model = grid_gp_fit(axes, mask, [y], kernels, noise)
        mean, _ = grid_gp_predict(model)
        product = per_axis_product(kernels)
        x_obs = axes.points([np.ravel_multi_index((1, 2, 0), axes.shape)])
        expected = product(axes.points(), x_obs)[:, 0] * y / (product(x_obs)[0, 0] + noise)
        np.testing.assert_allclose(mean.ravel(), expected, atol=1e-10)

    def test_point_query_reproduces_observations(self):
        rng = np.random.default_rng(8)
        axes = _axes((3, 3, 2))
        kernels = (RationalQuadratic(1.0, 0.3, 1.0),) * 3
        targets = rng.standard_normal(axes.size)
        model = grid_gp_fit(axes, np.ones(axes.shape, dtype=bool), targets, kernels, 1e-10)
        mean, _ = grid_gp_predict(model, axes.points())
        np.testing.assert_allclose(mean, targets, atol=1e-5)

    def test_constant_targets_are_smoothed(self):
        rng = np.random.default_rng(9)
        axes = _axes((6, 6, 4))
        mask = rng.uniform(size=axes.shape) < 0.8
        kernels = (RationalQuadratic(1.0, 2.0, 1.0),) * 3
        model = grid_gp_fit(axes, mask, np.full(int(mask.sum()), 0.7), kernels, 1e-4, cg_tol=1e-6, cg_max_iters=2000)
        mean, _ = grid_gp_predict(model)
        np.testing.assert_allclose(mean[~mask], 0.7, rtol=0.05)

    def test_point_variance_matches_dense(self):
        rng = np.random.default_rng(10)
        axes = _axes((3, 4, 3))
        kernels = _random_kernels(rng)
        mask = rng.uniform(size=axes.shape) < 0.5
        mask[0, 0, 0] = True
        targets = rng.standard_normal(int(mask.sum()))
        model = grid_gp_fit(axes, mask, targets, kernels, 0.1, cg_tol=1e-10, cg_max_iters=1000)
        query = rng.uniform(size=(7, 3))
        mean, variance = grid_gp_predict(model, query, return_variance=True, cg_tol=1e-10)
        expected_mean, expected_variance = _dense_oracle(axes, mask, targets, kernels, 0.1, query)
        np.testing.assert_allclose(mean, expected_mean, atol=1e-6)
        np.testing.assert_allclose(variance, expected_variance, atol=1e-6)
        assert np.all(variance <= per_axis_product(kernels).diag(query) + 1e-10)

    def test_full_grid_variance_shape(self):
        axes = _axes((2, 3, 2))
        kernels = (RationalQuadratic(),) * 3
        model = grid_gp_fit(axes, np.ones(axes.shape, dtype=bool), np.ones(axes.size), kernels, 1e-2)
        _, variance = grid_gp_predict(model, return_variance=True)
        assert variance.shape == axes.shape and np.all(variance >= 0.0)

    def test_invalid_observations(self):
        axes = _axes((2, 2, 2))
        kernels = (RationalQuadratic(),) * 3
        with pytest.raises(InvalidArgumentError):
            grid_gp_fit(axes, np.zeros(axes.shape, dtype=bool), [], kernels, 1e-2)
        mask = np.zeros(axes.shape, dtype=bool)
        mask[0, 0, 0] = True
        with pytest.raises(InvalidArgumentError):
            grid_gp_fit(axes, mask, [1.0, 2.0], kernels, 1e-2)
        with pytest.raises(InvalidArgumentError):
            grid_gp_fit(axes, mask, [1.0], kernels, 1e-2, solver="eigen")

    def test_cg_budget_exhausted(self):
        rng = np.random.default_rng(11)
        axes = _axes((5, 5, 4))
        mask = rng.uniform(size=axes.shape) < 0.5
        kernels = (RationalQuadratic(1.0, 0.5, 1.0),) * 3
        with pytest.raises(ConvergenceError):
            grid_gp_fit(axes, mask, rng.standard_normal(int(mask.sum())), kernels, 1e-6, cg_tol=1e-12, cg_max_iters=2)

    def test_unfitted_model(self):
        axes = _axes((2, 2, 2))
        kernels = (RationalQuadratic(),) * 3
        model = KronGPModel(
            axes, kernels, axis_gram_factors(axes, kernels), np.ones(axes.shape, dtype=bool), np.zeros(8), 1e-2
        )
        with pytest.raises(ModelStateError):
            grid_gp_predict(model)
        with pytest.raises(ModelStateError):
            kron_log_marginal_likelihood(model)


class TestKronLogMarginalLikelihood:
    def test_full_grid_matches_dense(self):
        rng = np.random.default_rng(12)
        axes = _axes((4, 4, 2))
        kernels = _random_kernels(rng)
        targets = rng.standard_normal(axes.size)
        model = grid_gp_fit(axes, np.ones(axes.shape, dtype=bool), targets, kernels, 0.05)
        expected = log_marginal_likelihood(Dataset(axes.points(), targets), per_axis_product(kernels), 0.05)
        assert abs(kron_log_marginal_likelihood(model) - expected) <= 1e-6

    def test_log_determinant_grows_with_noise(self):
        rng = np.random.default_rng(13)
        axes = _axes((3, 3, 3))
        mask = rng.uniform(size=axes.shape) < 0.6
        mask[0, 0, 0] = True
        targets = rng.standard_normal(int(mask.sum()))
        kernels = (RationalQuadratic(),) * 3
        small = grid_gp_fit(axes, mask, targets, kernels, 0.01, cg_max_iters=1000)
        large = grid_gp_fit(axes, mask, targets, kernels, 0.1, cg_max_iters=1000)
        assert kron_log_determinant(large) > kron_log_determinant(small)

    def test_single_point_is_gaussian_log_pdf(self):
        axes = GridAxes((np.zeros(1), np.zeros(1), np.zeros(1)))
        kernels = (RationalQuadratic(2.0, 1.0, 1.0), RationalQuadratic(1.5, 1.0, 1.0), RationalQuadratic(1.0, 1.0, 1.0))
        model = grid_gp_fit(axes, np.ones((1, 1, 1), dtype=bool), [0.4], kernels, 0.2)
        expected = norm(0.0, np.sqrt(3.0 + 0.2)).logpdf(0.4)
        assert abs(kron_log_marginal_likelihood(model) - expected) <= 1e-10


class TestGridHyperparameters:
    def _problem(self, seed=14):
        rng = np.random.default_rng(seed)
        axes = _axes((6, 5, 8))
        kernels = (RationalQuadratic(1.0, 0.4, 1.0),) * 3
        K = per_axis_product(kernels)(axes.points()) + 1e-4 * np.eye(axes.size)
        truth = np.linalg.cholesky(K) @ rng.standard_normal(axes.size)
        mask = rng.uniform(size=axes.shape) < 0.3
        return axes, mask, truth[mask.ravel()]

    def test_subsample_stays_inside_window(self):
        axes, mask, targets = self._problem()
        data = subsample_observations(axes, mask, targets, subsample=20, window_z=3, seed=0)
        assert len(data) <= 20
        z = np.round(data.inputs[:, 2] * 7).astype(int)
        assert z.max() - z.min() <= 2

    def test_subsample_is_deterministic(self):
        axes, mask, targets = self._problem()
        a = subsample_observations(axes, mask, targets, subsample=15, window_z=4, seed=3)
        b = subsample_observations(axes, mask, targets, subsample=15, window_z=4, seed=3)
        np.testing.assert_array_equal(a.inputs, b.inputs)

    def test_subsample_strategy_returns_axis_kernels(self):
        axes, mask, targets = self._problem()
        initial = (RationalQuadratic(1.0, 1.0, 1.0),) * 3
        kernels, noise, fit = optimize_grid_hyperparameters(
            axes, mask, targets, initial, 1e-3, strategy="subsample", subsample=60, window_z=8, restarts=1, max_iters=30
        )
        assert len(kernels) == 3 and all(k.active_dims is None for k in kernels)
        assert 1e-8 <= noise <= 1.0
        assert fit.log_marginal_likelihood >= fit.initial_log_marginal_likelihood

    def test_kronecker_strategy_improves_likelihood(self):
        axes, mask, targets = self._problem()
        initial = (RationalQuadratic(1.0, 1.0, 1.0),) * 3
        _, _, fit = optimize_grid_hyperparameters(
            axes, mask, targets, initial, 1e-2, strategy="kronecker", restarts=0, max_iters=5,
            cg_tol=1e-6, cg_max_iters=2000,
        )
        assert fit.log_marginal_likelihood >= fit.initial_log_marginal_likelihood

    def test_unknown_strategy(self):
        axes, mask, targets = self._problem()
        with pytest.raises(InvalidArgumentError):
            optimize_grid_hyperparameters(axes, mask, targets, (RationalQuadratic(),) * 3, 1e-2, strategy="grid")
