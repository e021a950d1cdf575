"""
Regressão GP densa e exata, com média a priori zero.

Serve como oráculo de correção para a inferência em grade e como objetivo
de verossimilhança marginal no aprendizado de hiperparâmetros em
subamostras.
"""
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from utils.errors import InvalidArgumentError, NumericalFailureError

from .kernels import Kernel, _as_points, gram_matrix

JITTER_SCHEDULE = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
NEGATIVE_VARIANCE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        inputs = _as_points(self.inputs)
        targets = np.asarray(self.targets, dtype=float).ravel()
        if inputs.shape[0] != targets.size:
            raise InvalidArgumentError(f"{inputs.shape[0]} entradas para {targets.size} alvos")
        if targets.size == 0:
            raise InvalidArgumentError("dataset vazio")
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
            raise InvalidArgumentError("dataset com valores não finitos")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    def __len__(self) -> int:
        return self.targets.size


@dataclass(frozen=True)
class DenseGPModel:
    dataset: Dataset
    kernel: Kernel
    noise_variance: float
    cholesky: np.ndarray
    weights: np.ndarray
    jitter: float = 0.0


def stable_cholesky(matrix: np.ndarray, module: str = "gp.dense") -> tuple[np.ndarray, float]:
    """
    Fator de Cholesky inferior com jitter crescente (1e-10 → 1e-6 da média da diagonal).

    Returns:
        (fator inferior, jitter absoluto adicionado)
    """
    scale = float(np.mean(np.diag(matrix))) if matrix.size else 1.0
    scale = scale if scale > 0 else 1.0
    identity = np.eye(matrix.shape[0])
    for relative in JITTER_SCHEDULE:
        jitter = relative * scale
        try:
            factor, _ = cho_factor(matrix + jitter * identity, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError):
            continue
        if jitter > 0:
            logger.debug(f"Cholesky precisou de jitter {jitter:.2e}")
        return np.tril(factor), jitter
    raise NumericalFailureError(
        f"fatoração de Cholesky falhou mesmo com jitter {JITTER_SCHEDULE[-1]:.0e} da diagonal média",
        module=module,
    )


def _check_noise(noise_variance: float):
    if noise_variance < 0 or not np.isfinite(noise_variance):
        raise InvalidArgumentError(f"variância de ruído inválida: {noise_variance}")


def fit_dense_gp(dataset: Dataset, kernel: Kernel, noise_variance: float) -> DenseGPModel:
    """Fatora K + σ²I e guarda (K + σ²I)⁻¹y."""
    _check_noise(noise_variance)
    K = gram_matrix(kernel, dataset.inputs) + noise_variance * np.eye(len(dataset))
    L, jitter = stable_cholesky(K)
    weights = cho_solve((L, True), dataset.targets)
    return DenseGPModel(dataset, kernel, float(noise_variance), L, weights, jitter)


def dense_gp_predict(model: DenseGPModel, query, return_variance: bool = True):
    """
    Média e variância a posteriori em pontos de consulta.

    Returns:
        (média, variância); variância é None quando return_variance=False
    """
    query = _as_points(query)
    cross = model.kernel(query, model.dataset.inputs)
    mean = cross @ model.weights
    if not return_variance:
        return mean, None

    v = solve_triangular(model.cholesky, cross.T, lower=True)
    variance = model.kernel.diag(query) - np.sum(v ** 2, axis=0)
    most_negative = float(variance.min())
    if most_negative < -NEGATIVE_VARIANCE_TOLERANCE:
        logger.warning(f"Variância a posteriori negativa ({most_negative:.2e}) truncada em zero")
    return mean, np.maximum(variance, 0.0)


def log_marginal_likelihood(dataset: Dataset, kernel: Kernel, noise_variance: float) -> float:
    """−½yᵀ(K+σ²I)⁻¹y − ½log det(K+σ²I) − (m/2)log 2π."""
    model = fit_dense_gp(dataset, kernel, noise_variance)
    data_fit = float(dataset.targets @ model.weights)
    log_det = 2.0 * float(np.sum(np.log(np.diag(model.cholesky))))
    return -0.5 * data_fit - 0.5 * log_det - 0.5 * len(dataset) * np.log(2.0 * np.pi)
