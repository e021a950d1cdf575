"""
Modelo de calibração: dois GPs de Kronecker independentes, um para ℜ(w^d) e
outro para ℑ(w^d), ajustados sobre a mesma máscara de medições.
"""
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Protocol

import numpy as np
from loguru import logger

from gp.grid import GridAxes
from gp.kernels import Kernel
from gp.kronecker import KronGPModel, grid_gp_fit, grid_gp_predict, optimize_grid_hyperparameters
from impairments.codebook import AbfCodebook
from impairments.distortion import DistortionTensor
from metrics.bpa import nrmse
from utils.errors import DegenerateNormalizationError, InvalidArgumentError

MODES = ("DBF", "ABF")
MEASUREMENT_STREAM = 5
VALIDATION_MEASUREMENT_STREAM = 6


@dataclass(frozen=True)
class MeasurementGrid:
    """Medições complexas w^d nos pontos observados (ordem row-major da máscara)."""

    axes: GridAxes
    mask: np.ndarray
    measured: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        measured = np.asarray(self.measured, dtype=complex).ravel()
        if mask.shape != self.axes.shape:
            raise InvalidArgumentError(f"máscara {mask.shape} não bate com a grade {self.axes.shape}")
        if int(mask.sum()) != measured.size:
            raise InvalidArgumentError(f"{measured.size} medições para {int(mask.sum())} pontos marcados")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "measured", measured)

    @property
    def fraction(self) -> float:
        return float(self.mask.mean())

    @property
    def n_observed(self) -> int:
        return self.measured.size


def true_distorted_weights(distortion: DistortionTensor, codebook: AbfCodebook) -> np.ndarray:
    """Tensor (F, N, Z) com w_z · d(f, n, z) sem ruído."""
    if distortion.values.shape[-1] != codebook.size:
        raise InvalidArgumentError(
            f"eixo Z da distorção ({distortion.values.shape[-1]}) difere do codebook ({codebook.size})"
        )
    return codebook.weights[None, None, :] * distortion.values


def simulate_measurements(
    distortion: DistortionTensor,
    codebook: AbfCodebook,
    mask,
    noise_std: float = 0.0,
    seed: int = 0,
    stream: int = MEASUREMENT_STREAM,
) -> MeasurementGrid:
    """Medições sintéticas w_z·d(f, n, z) + ruído gaussiano de desvio `noise_std` em cada componente."""
    if noise_std < 0:
        raise InvalidArgumentError(f"desvio do ruído negativo: {noise_std}")
    mask = np.asarray(mask, dtype=bool)
    truth = true_distorted_weights(distortion, codebook)[mask]
    if noise_std > 0:
        rng = np.random.default_rng([int(seed), int(stream)])
        truth = truth + noise_std * (rng.standard_normal(truth.size) + 1j * rng.standard_normal(truth.size))
    return MeasurementGrid(distortion.axes, mask, truth)


class DistortedWeightSource(Protocol):
    """Qualquer fonte de ŵ^d(f, n, z): o modelo GP ou o oráculo com a distorção verdadeira."""

    codebook: AbfCodebook

    def distorted_weights(self) -> np.ndarray: ...


@dataclass(frozen=True)
class OracleDistortion:
    """Fonte exata de ŵ^d a partir da distorção verdadeira (calibração ideal)."""

    distortion: DistortionTensor
    codebook: AbfCodebook

    def distorted_weights(self) -> np.ndarray:
        return true_distorted_weights(self.distortion, self.codebook)


@dataclass(frozen=True)
class FitOptions:
    noise_variance: float = 1e-6
    learn_noise: bool = True
    optimize: bool = True
    hyper_strategy: str = "subsample"
    hyper_subsample: int = 400
    hyper_window_z: int = 8
    restarts: int = 3
    max_iters: int = 100
    bounds: dict | None = None
    cg_tol: float = 1e-8
    cg_max_iters: int | None = None
    solver: str = "auto"


@dataclass(frozen=True)
class CalibrationModel:
    gp_re: KronGPModel
    gp_im: KronGPModel
    codebook: AbfCodebook
    mode: str
    frequencies: np.ndarray
    hyperparameters: dict = field(default_factory=dict)
    validation: dict | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"modo desconhecido: {self.mode}")
        if self.gp_re.axes.shape != self.gp_im.axes.shape or not np.array_equal(self.gp_re.mask, self.gp_im.mask):
            raise InvalidArgumentError("modelos ℜ e ℑ precisam compartilhar eixos e máscara")

    @property
    def axes(self) -> GridAxes:
        return self.gp_re.axes

    @property
    def mask(self) -> np.ndarray:
        return self.gp_re.mask

    @cached_property
    def _surfaces(self) -> np.ndarray:
        mean_re, _ = grid_gp_predict(self.gp_re)
        mean_im, _ = grid_gp_predict(self.gp_im)
        return mean_re + 1j * mean_im

    def distorted_weights(self) -> np.ndarray:
        """ŵ^d(f, n, z) na grade inteira."""
        return self._surfaces


def _fit_component(axes, mask, targets, kernels, options: FitOptions, seed: int, label: str):
    noise = options.noise_variance
    report = None
    if options.optimize:
        kernels, noise, fit = optimize_grid_hyperparameters(
            axes, mask, targets, kernels, noise,
            strategy=options.hyper_strategy,
            subsample=options.hyper_subsample,
            window_z=options.hyper_window_z,
            seed=seed,
            bounds=options.bounds,
            max_iters=options.max_iters,
            restarts=options.restarts,
            learn_noise=options.learn_noise,
            cg_tol=options.cg_tol,
            cg_max_iters=options.cg_max_iters,
        )
        report = fit.to_dict()
        logger.info(f"Hiperparâmetros {label}: LML {fit.initial_log_marginal_likelihood:.3f} → {fit.log_marginal_likelihood:.3f}")

    model = grid_gp_fit(axes, mask, targets, kernels, noise, options.cg_tol, options.cg_max_iters, options.solver)
    return model, {
        "kernels": [k.hyperparameters() for k in kernels],
        "noise_variance": noise,
        "optimization": report,
        "solver": model.diagnostics.solver,
        "cg_iterations": model.diagnostics.iterations,
        "cg_residual": model.diagnostics.residual,
    }


def fit_calibration_model(
    grid: MeasurementGrid,
    kernels: tuple[Kernel, ...],
    mode: str,
    codebook: AbfCodebook,
    frequencies=None,
    options: FitOptions | None = None,
    validation: MeasurementGrid | None = None,
    seed: int = 0,
) -> CalibrationModel:
    """
    Ajusta os GPs de ℜ(w^d) e ℑ(w^d) com eixos e máscara compartilhados.

    Com `validation`, registra o NRMSE em pontos não usados no ajuste.
    """
    options = options or FitOptions()
    if grid.n_observed == 0:
        raise InvalidArgumentError("grade de medições vazia")
    if grid.axes.shape[-1] != codebook.size:
        raise InvalidArgumentError(f"eixo Z ({grid.axes.shape[-1]}) difere do codebook ({codebook.size})")

    logger.info(f"Ajustando modelo {mode}: grade {grid.axes.shape}, {grid.n_observed} medições ({grid.fraction:.1%})")
    gp_re, hyper_re = _fit_component(grid.axes, grid.mask, grid.measured.real, kernels, options, seed, "ℜ")
    gp_im, hyper_im = _fit_component(grid.axes, grid.mask, grid.measured.imag, kernels, options, seed, "ℑ")

    frequencies = grid.axes.coordinates[0] if frequencies is None else np.asarray(frequencies, dtype=float)
    model = CalibrationModel(gp_re, gp_im, codebook, mode, frequencies, {"re": hyper_re, "im": hyper_im})

    if validation is not None and validation.n_observed > 0:
        predicted = model.distorted_weights()[validation.mask]
        scores = {
            "nrmse_re": _safe_nrmse(validation.measured.real, predicted.real),
            "nrmse_im": _safe_nrmse(validation.measured.imag, predicted.imag),
            "points": validation.n_observed,
        }
        model = replace(model, validation=scores)
        logger.info(f"NRMSE de validação: ℜ={scores['nrmse_re']}, ℑ={scores['nrmse_im']}")
    return model


def _safe_nrmse(truth, estimate):
    try:
        return nrmse(truth, estimate)
    except DegenerateNormalizationError:
        return None


def estimate_distortion(model: DistortedWeightSource, f_index: int, n_index: int, z_index: int) -> complex:
    """d̂ = ŵ^d(f, n, z) / w_z."""
    surfaces = model.distorted_weights()
    for name, index, size in zip(("f", "n", "z"), (f_index, n_index, z_index), surfaces.shape):
        if not 0 <= int(index) < size:
            raise InvalidArgumentError(f"índice {name}={index} fora de [0, {size})")
    return complex(surfaces[f_index, n_index, z_index] / model.codebook.weights[z_index])


def estimated_distortion_tensor(model: DistortedWeightSource) -> np.ndarray:
    """d̂ em toda a grade."""
    return model.distorted_weights() / model.codebook.weights[None, None, :]
