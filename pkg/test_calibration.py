#!/usr/bin/env python3
"""
Testes do procedimento de calibração: plano de amostragem, medições,
ajuste dos GPs ℜ/ℑ, correção DBF e seleção de códigos ABF.
"""
import itertools
import sys
from dataclasses import dataclass
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

import numpy as np
import pytest

from antenna.geometry import AngleGrid, beam_pattern, make_uniform_rect_array
from calibration import (
    FitOptions,
    OracleDistortion,
    calibrate_abf_nearest,
    calibrate_abf_ratio,
    calibrate_dbf,
    canonical_codebook_indices,
    design_sampling_plan,
    design_validation_mask,
    estimate_distortion,
    estimated_distortion_tensor,
    fit_calibration_model,
    load_model,
    quantize_weights,
    ratio_objective,
    save_model,
    simulate_measurements,
)
from calibration.model import MeasurementGrid, VALIDATION_MEASUREMENT_STREAM
from gp.grid import GridAxes
from gp.kernels import RationalQuadratic
from impairments.codebook import AbfCodebook, make_abf_codebook
from impairments.distortion import DistortionTensor, generate_distortion
from metrics.bpa import bpa_rmse, nrmse
from utils.errors import DegenerateDistortionError, InvalidArgumentError

FREQUENCIES = np.linspace(3.4e9, 3.6e9, 3)
CUTOFFS = (2, 3, 2)


@dataclass(frozen=True)
class FixedSurfaces:
    """Fonte de ŵ^d com superfícies escolhidas pelo teste."""

    codebook: AbfCodebook
    surfaces: np.ndarray

    def distorted_weights(self) -> np.ndarray:
        return self.surfaces


def _axes(n_channels, codebook, frequencies=FREQUENCIES):
    return GridAxes.from_grid(frequencies, n_channels, codebook.size)


def _sharp_kernels():
    # Gram quase identidade em todos os eixos: bem condicionado
    return tuple(RationalQuadratic(1.0, 0.01, 1.0) for _ in range(3))


def _exact_options(noise=1e-10):
    return FitOptions(noise_variance=noise, optimize=False)


class TestSamplingPlan:
    def test_full_fraction_observes_everything(self):
        assert design_sampling_plan((3, 4, 16), 1.0, seed=0).all()

    def test_count_and_determinism(self):
        a = design_sampling_plan((4, 8, 16), 0.2, seed=7)
        b = design_sampling_plan((4, 8, 16), 0.2, seed=7)
        c = design_sampling_plan((4, 8, 16), 0.2, seed=8)
        assert a.sum() == round(0.2 * a.size)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_every_channel_observed(self):
        for seed in range(10):
            mask = design_sampling_plan((4, 16, 4), 0.25, seed=seed)
            assert mask.any(axis=(0, 2)).all()

    def test_broadband_observes_all_frequencies_of_a_pair(self):
        mask = design_sampling_plan((5, 4, 16), 0.25, seed=1, broadband=True)
        assert np.all(mask == mask[0])
        assert mask[0].sum() == 16

    @pytest.mark.parametrize("fraction", [0.0, -0.1, 1.5, 1e-6])
    def test_infeasible_fraction(self, fraction):
        with pytest.raises(InvalidArgumentError):
            design_sampling_plan((3, 4, 16), fraction, seed=0)

    def test_validation_mask_uses_only_unobserved_points(self):
        mask = design_sampling_plan((3, 4, 16), 0.2, seed=2)
        validation = design_validation_mask(mask, 0.5, seed=2)
        assert not np.any(validation & mask)
        assert validation.sum() == round(0.5 * (~mask).sum())
        np.testing.assert_array_equal(validation, design_validation_mask(mask, 0.5, seed=2))
        assert not design_validation_mask(mask, 0.0, seed=2).any()


class TestMeasurements:
    def test_noiseless_measurements_without_distortion_are_codebook_weights(self):
        codebook = make_abf_codebook(2, (0.25, 1.0))
        axes = _axes(4, codebook)
        distortion = generate_distortion(0, axes, 0.0, 0.0, CUTOFFS)
        mask = design_sampling_plan(axes.shape, 0.3, seed=0)
        grid = simulate_measurements(distortion, codebook, mask)
        expected = np.broadcast_to(codebook.weights, axes.shape)[mask]
        np.testing.assert_array_equal(grid.measured, expected)
        assert grid.n_observed == int(mask.sum())

    def test_noise_standard_deviation(self):
        codebook = make_abf_codebook(2, (0.25, 1.0))
        axes = _axes(32, codebook, np.linspace(3.4e9, 3.6e9, 8))
        distortion = generate_distortion(1, axes, 0.1, 0.1, CUTOFFS)
        mask = np.ones(axes.shape, dtype=bool)
        clean = simulate_measurements(distortion, codebook, mask)
        noisy = simulate_measurements(distortion, codebook, mask, noise_std=0.05, seed=3)
        residual = noisy.measured - clean.measured
        assert residual.real.std() == pytest.approx(0.05, rel=0.05)
        assert residual.imag.std() == pytest.approx(0.05, rel=0.05)

    def test_measurement_streams_differ(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        axes = _axes(4, codebook)
        distortion = generate_distortion(1, axes, 0.1, 0.1, CUTOFFS)
        mask = np.ones(axes.shape, dtype=bool)
        a = simulate_measurements(distortion, codebook, mask, noise_std=0.01, seed=3)
        b = simulate_measurements(distortion, codebook, mask, noise_std=0.01, seed=3, stream=VALIDATION_MEASUREMENT_STREAM)
        assert not np.array_equal(a.measured, b.measured)

    def test_negative_noise(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        axes = _axes(2, codebook)
        distortion = generate_distortion(1, axes, 0.1, 0.1, CUTOFFS)
        with pytest.raises(InvalidArgumentError):
            simulate_measurements(distortion, codebook, np.ones(axes.shape, dtype=bool), noise_std=-1.0)

    def test_grid_rejects_mismatched_measurements(self):
        axes = GridAxes.from_grid(FREQUENCIES, 2, 4)
        with pytest.raises(InvalidArgumentError):
            MeasurementGrid(axes, np.ones(axes.shape, dtype=bool), np.ones(3, dtype=complex))


class TestFitCalibrationModel:
    def test_zero_distortion_full_grid_recovers_weights(self):
        codebook = make_abf_codebook(2, (0.25, 1.0))
        axes = _axes(4, codebook)
        distortion = generate_distortion(0, axes, 0.0, 0.0, CUTOFFS)
        grid = simulate_measurements(distortion, codebook, np.ones(axes.shape, dtype=bool))
        model = fit_calibration_model(grid, _sharp_kernels(), "DBF", codebook, options=_exact_options())
        truth = np.broadcast_to(codebook.weights, axes.shape)
        estimate = model.distorted_weights()
        assert nrmse(truth.real, estimate.real) < 1e-6
        assert nrmse(truth.imag, estimate.imag) < 1e-6
        assert model.hyperparameters["re"]["solver"] == "eigen"

    def test_swapping_real_and_imaginary_parts(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        axes = _axes(4, codebook)
        distortion = generate_distortion(5, axes, 0.2, 0.1, CUTOFFS)
        grid = simulate_measurements(distortion, codebook, np.ones(axes.shape, dtype=bool))
        kernels = tuple(RationalQuadratic(1.0, 0.5, 2.0) for _ in range(3))
        options = _exact_options(1e-3)
        model = fit_calibration_model(grid, kernels, "DBF", codebook, options=options)
        swapped_grid = MeasurementGrid(grid.axes, grid.mask, 1j * grid.measured)
        swapped = fit_calibration_model(swapped_grid, kernels, "DBF", codebook, options=options)
        np.testing.assert_allclose(swapped.distorted_weights(), 1j * model.distorted_weights(), atol=1e-12)

    def test_validation_scores_recorded(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        axes = _axes(4, codebook)
        distortion = generate_distortion(2, axes, 0.2, 0.2, CUTOFFS)
        mask = design_sampling_plan(axes.shape, 0.5, seed=2)
        validation_mask = design_validation_mask(mask, 1.0, seed=2)
        grid = simulate_measurements(distortion, codebook, mask)
        validation = simulate_measurements(distortion, codebook, validation_mask)
        kernels = tuple(RationalQuadratic(1.0, 0.5, 2.0) for _ in range(3))
        model = fit_calibration_model(
            grid, kernels, "ABF", codebook, options=FitOptions(noise_variance=1e-2, optimize=False, cg_max_iters=500),
            validation=validation,
        )
        assert model.validation["points"] == int(validation_mask.sum())
        assert model.validation["nrmse_re"] >= 0.0
        assert model.hyperparameters["re"]["solver"] == "cg"

    def test_codebook_size_must_match_grid(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        axes = GridAxes.from_grid(FREQUENCIES, 2, 16)
        grid = MeasurementGrid(axes, np.ones(axes.shape, dtype=bool), np.ones(axes.size, dtype=complex))
        with pytest.raises(InvalidArgumentError):
            fit_calibration_model(grid, _sharp_kernels(), "DBF", codebook, options=_exact_options())

    def test_unknown_mode(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        axes = _axes(2, codebook)
        grid = MeasurementGrid(axes, np.ones(axes.shape, dtype=bool), np.ones(axes.size, dtype=complex))
        with pytest.raises(InvalidArgumentError):
            fit_calibration_model(grid, _sharp_kernels(), "XYZ", codebook, options=_exact_options())


class TestEstimateDistortion:
    def test_oracle_returns_true_distortion(self):
        codebook = make_abf_codebook(2, (0.25, 1.0))
        axes = _axes(4, codebook)
        distortion = generate_distortion(3, axes, 0.2, 0.2, CUTOFFS)
        oracle = OracleDistortion(distortion, codebook)
        assert estimate_distortion(oracle, 1, 2, 5) == pytest.approx(distortion.values[1, 2, 5], abs=1e-12)
        np.testing.assert_allclose(estimated_distortion_tensor(oracle), distortion.values, atol=1e-12)

    def test_index_out_of_range(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        axes = _axes(2, codebook)
        oracle = OracleDistortion(generate_distortion(3, axes, 0.1, 0.1, CUTOFFS), codebook)
        with pytest.raises(InvalidArgumentError):
            estimate_distortion(oracle, 0, 2, 0)


class TestDbfCorrection:
    def test_oracle_calibration_restores_pattern(self):
        rng = np.random.default_rng(0)
        codebook = make_abf_codebook(2, (0.25, 1.0))
        geom = make_uniform_rect_array(2, 2)
        axes = _axes(geom.n_elements, codebook)
        distortion = generate_distortion(4, axes, 0.2, 0.2, CUTOFFS)
        desired = rng.standard_normal(4) + 1j * rng.standard_normal(4)

        correction = calibrate_dbf(desired, OracleDistortion(distortion, codebook))
        f_idx, n_idx = np.meshgrid(np.arange(3), np.arange(4), indexing="ij")
        applied = correction.weights * distortion.values[f_idx, n_idx, correction.indices]
        np.testing.assert_allclose(applied, np.broadcast_to(desired, (3, 4)), atol=1e-12)

        angles = AngleGrid.uniform(30.0)
        ideal = beam_pattern(geom, desired, angles, FREQUENCIES)
        calibrated = beam_pattern(geom, applied, angles, FREQUENCIES)
        assert bpa_rmse(ideal, calibrated) < 1e-10

    def test_canonical_index_scales_peak_to_max_gain(self):
        codebook = make_abf_codebook(2, (0.25, 1.0))
        indices = canonical_codebook_indices(np.array([0.02, -0.02j]), codebook)
        np.testing.assert_allclose(np.abs(codebook.weights[indices]), 1.0)

    def test_degenerate_distortion(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        axes = _axes(2, codebook)
        zeros = DistortionTensor(np.zeros(axes.shape, dtype=complex), axes, FREQUENCIES)
        with pytest.raises(DegenerateDistortionError):
            calibrate_dbf(np.ones(2), OracleDistortion(zeros, codebook))

    def test_desired_shape_checked(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        axes = _axes(2, codebook)
        oracle = OracleDistortion(generate_distortion(1, axes, 0.1, 0.1, CUTOFFS), codebook)
        with pytest.raises(InvalidArgumentError):
            calibrate_dbf(np.ones(3), oracle)


class TestAbfNearest:
    def test_zero_distortion_equals_plain_quantization(self):
        rng = np.random.default_rng(1)
        codebook = make_abf_codebook(3, (0.1, 1.0))
        axes = _axes(6, codebook)
        oracle = OracleDistortion(generate_distortion(0, axes, 0.0, 0.0, CUTOFFS), codebook)
        desired = 0.5 * (rng.standard_normal(6) + 1j * rng.standard_normal(6))
        np.testing.assert_array_equal(calibrate_abf_nearest(desired, oracle), quantize_weights(desired, codebook))

    def test_picks_code_whose_distorted_value_matches(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        permutation = np.array([2, 3, 0, 1])
        surfaces = np.broadcast_to(codebook.weights[permutation], (3, 2, 4)).copy()
        desired = codebook.weights[[0, 3]]
        # o valor w_0 só é realizado comandando o código 2, e w_3 pelo código 1
        chosen = calibrate_abf_nearest(desired, FixedSurfaces(codebook, surfaces))
        np.testing.assert_array_equal(chosen, [2, 1])

    def test_center_evaluation_uses_middle_frequency(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        surfaces = np.broadcast_to(codebook.weights, (3, 1, 4)).copy()
        surfaces[[0, 2]] = -surfaces[[0, 2]]
        source = FixedSurfaces(codebook, surfaces)
        desired = np.array([codebook.weights[2]])
        assert calibrate_abf_nearest(desired, source, evaluation="center")[0] == 2
        with pytest.raises(InvalidArgumentError):
            calibrate_abf_nearest(desired, source, evaluation="edges")


def _random_surfaces(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _exhaustive_minimum(desired, surfaces):
    N, Z = surfaces.shape[1:]
    return min(ratio_objective(path, desired, surfaces) for path in itertools.product(range(Z), repeat=N))


class TestAbfRatio:
    def test_realizable_ratios_are_found_exactly(self):
        rng = np.random.default_rng(2)
        codebook = make_abf_codebook(1, (0.5, 1.0))
        surfaces = _random_surfaces(rng, (3, 6, 4))
        truth = np.array([1, 3, 0, 2, 2, 1])
        desired = 1.7 * surfaces[:, np.arange(6), truth]
        source = FixedSurfaces(codebook, surfaces)
        for method in ("greedy", "viterbi"):
            chosen = calibrate_abf_ratio(desired, source, method=method)
            np.testing.assert_array_equal(chosen, truth)

    def test_viterbi_matches_exhaustive_search(self):
        rng = np.random.default_rng(3)
        codebook = make_abf_codebook(1, (0.5, 1.0))
        for _ in range(5):
            surfaces = _random_surfaces(rng, (2, 4, 4))
            desired = _random_surfaces(rng, (4,))
            chosen = calibrate_abf_ratio(desired, FixedSurfaces(codebook, surfaces), method="viterbi")
            assert ratio_objective(chosen, desired, surfaces) == pytest.approx(
                _exhaustive_minimum(desired, surfaces), rel=1e-9
            )

    def test_greedy_never_beats_exact_optimum(self):
        rng = np.random.default_rng(4)
        codebook = make_abf_codebook(1, (0.5, 1.0))
        for _ in range(5):
            surfaces = _random_surfaces(rng, (2, 5, 4))
            desired = _random_surfaces(rng, (5,))
            source = FixedSurfaces(codebook, surfaces)
            greedy = ratio_objective(calibrate_abf_ratio(desired, source), desired, surfaces)
            exact = ratio_objective(calibrate_abf_ratio(desired, source, method="viterbi"), desired, surfaces)
            assert greedy >= exact - 1e-12

    def test_invariant_to_common_scaling_of_desired_weights(self):
        rng = np.random.default_rng(5)
        codebook = make_abf_codebook(1, (0.5, 1.0))
        surfaces = _random_surfaces(rng, (3, 5, 4))
        desired = _random_surfaces(rng, (5,))
        source = FixedSurfaces(codebook, surfaces)
        np.testing.assert_array_equal(
            calibrate_abf_ratio(desired, source), calibrate_abf_ratio(2.0 * desired, source)
        )

    def test_requires_two_channels(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        source = FixedSurfaces(codebook, np.ones((3, 1, 4), dtype=complex))
        with pytest.raises(InvalidArgumentError):
            calibrate_abf_ratio(np.ones(1), source)

    def test_unknown_method(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        source = FixedSurfaces(codebook, np.ones((3, 2, 4), dtype=complex))
        with pytest.raises(InvalidArgumentError):
            calibrate_abf_ratio(np.ones(2), source, method="annealing")

    def test_zero_desired_weight_rejected(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        source = FixedSurfaces(codebook, np.ones((3, 2, 4), dtype=complex))
        with pytest.raises(InvalidArgumentError):
            calibrate_abf_ratio(np.array([0.0, 1.0]), source)


class TestPersistence:
    def _model(self):
        codebook = make_abf_codebook(1, (0.5, 1.0))
        axes = _axes(4, codebook)
        distortion = generate_distortion(6, axes, 0.2, 0.1, CUTOFFS)
        mask = design_sampling_plan(axes.shape, 0.5, seed=6)
        grid = simulate_measurements(distortion, codebook, mask)
        kernels = tuple(RationalQuadratic(1.0, 0.5, 2.0) for _ in range(3))
        return fit_calibration_model(grid, kernels, "ABF", codebook, options=FitOptions(noise_variance=1e-2, optimize=False, cg_max_iters=500))

    def test_roundtrip(self, tmp_path):
        model = self._model()
        path = save_model(model, tmp_path / "model")
        assert path.suffix == ".npz"
        loaded = load_model(path)
        assert loaded.mode == "ABF"
        assert loaded.codebook.bits == 1
        np.testing.assert_array_equal(loaded.mask, model.mask)
        np.testing.assert_allclose(loaded.distorted_weights(), model.distorted_weights(), atol=1e-12)
        assert loaded.hyperparameters["re"]["noise_variance"] == model.hyperparameters["re"]["noise_variance"]

    def test_unknown_format_version(self, tmp_path):
        path = tmp_path / "old.npz"
        np.savez(path, format_version=99)
        with pytest.raises(InvalidArgumentError):
            load_model(path)
