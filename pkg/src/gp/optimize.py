"""
Aprendizado de hiperparâmetros por máxima verossimilhança marginal.

L-BFGS-B (scipy) com gradientes por diferenças finitas no espaço
log-hiperparâmetro, com múltiplos pontos de partida. Como o gradiente não
é analítico, não há verificação contra diferenças centrais.
"""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from loguru import logger
from scipy.optimize import minimize

from utils.errors import InvalidArgumentError, NumericalFailureError

from .dense import Dataset, log_marginal_likelihood
from .kernels import DEFAULT_BOUNDS, Kernel

RESTART_SCALE = 0.5
FAILED_OBJECTIVE = 1e25
IMPROVEMENT_TOLERANCE = 1e-10


@dataclass(frozen=True)
class HyperparameterFit:
    kernel: Kernel
    noise_variance: float
    log_marginal_likelihood: float
    initial_log_marginal_likelihood: float
    improved: bool
    starts: int
    history: tuple[float, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.hyperparameters(),
            "noise_variance": self.noise_variance,
            "log_marginal_likelihood": self.log_marginal_likelihood,
            "initial_log_marginal_likelihood": self.initial_log_marginal_likelihood,
            "improved": self.improved,
        }


def _merged_bounds(bounds: dict | None) -> dict:
    merged = dict(DEFAULT_BOUNDS)
    if bounds:
        merged.update(bounds)
    for name, (lo, hi) in merged.items():
        if name != "sm_mean" and not 0 < lo <= hi:
            raise InvalidArgumentError(f"limites de {name} devem ser positivos: [{lo}, {hi}]")
    return merged


def maximize_marginal_likelihood(
    objective: Callable[[Kernel, float], float],
    kernel: Kernel,
    noise_variance: float,
    bounds: dict | None = None,
    max_iters: int = 100,
    restarts: int = 3,
    learn_noise: bool = True,
    seed: int = 0,
) -> HyperparameterFit:
    """
    Maximiza `objective(kernel, ruído)` a partir do ponto inicial e de `restarts` perturbações dele.

    Retorna o ponto inicial (improved=False) quando nenhuma partida o supera.
    """
    bounds = _merged_bounds(bounds)
    theta0 = kernel.to_vector()
    box = kernel.vector_bounds(bounds)
    if learn_noise:
        theta0 = np.append(theta0, np.log(noise_variance))
        box.append(tuple(np.log(bounds["noise"])))
    lower, upper = np.array(box).T
    if np.any(theta0 < lower - 1e-12) or np.any(theta0 > upper + 1e-12):
        raise InvalidArgumentError("hiperparâmetros iniciais fora dos limites")

    n_kernel = kernel.n_params

    def unpack(theta):
        noise = float(np.exp(theta[n_kernel])) if learn_noise else noise_variance
        return kernel.from_vector(theta[:n_kernel]), noise

    cache: dict[bytes, float] = {}

    def negative(theta):
        key = np.asarray(theta, dtype=float).tobytes()
        if key not in cache:
            try:
                value = -float(objective(*unpack(theta)))
                cache[key] = value if np.isfinite(value) else FAILED_OBJECTIVE
            except NumericalFailureError:
                cache[key] = FAILED_OBJECTIVE
        return cache[key]

    initial_value = -negative(theta0)
    if initial_value <= -FAILED_OBJECTIVE:
        raise NumericalFailureError("verossimilhança não avaliável no ponto inicial", module="gp.optimize")

    rng = np.random.default_rng(seed)
    starts = [theta0] + [
        np.clip(theta0 + RESTART_SCALE * rng.standard_normal(theta0.size), lower, upper)
        for _ in range(restarts)
    ]

    best_theta, best_value = theta0, initial_value
    history: list[float] = [initial_value]
    for index, start in enumerate(starts):
        trace: list[float] = [-negative(start)]
        result = minimize(
            negative,
            start,
            method="L-BFGS-B",
            bounds=list(zip(lower, upper)),
            options={"maxiter": max_iters},
            callback=lambda xk: trace.append(-negative(xk)),
        )
        value = -float(result.fun)
        logger.debug(f"Partida {index}: LML={value:.6f} ({result.nit} iterações, {result.message})")
        if value > best_value:
            best_theta, best_value = np.asarray(result.x), value
            history = trace

    improved = best_value > initial_value + IMPROVEMENT_TOLERANCE
    if not improved:
        logger.warning("Nenhuma partida melhorou a verossimilhança marginal; mantendo θ₀")
        best_theta, best_value = theta0, initial_value
        history = [initial_value]

    best_kernel, best_noise = unpack(best_theta)
    return HyperparameterFit(
        kernel=best_kernel,
        noise_variance=best_noise,
        log_marginal_likelihood=best_value,
        initial_log_marginal_likelihood=initial_value,
        improved=improved,
        starts=len(starts),
        history=tuple(history),
    )


def optimize_hyperparameters(
    dataset: Dataset,
    kernel: Kernel,
    noise_variance: float,
    bounds: dict | None = None,
    max_iters: int = 100,
    restarts: int = 3,
    learn_noise: bool = True,
) -> HyperparameterFit:
    """Maximiza a verossimilhança marginal densa de `dataset`."""
    logger.info(f"Otimizando hiperparâmetros em {len(dataset)} pontos ({restarts} reinícios)")
    return maximize_marginal_likelihood(
        lambda k, noise: log_marginal_likelihood(dataset, k, noise),
        kernel,
        noise_variance,
        bounds=bounds,
        max_iters=max_iters,
        restarts=restarts,
        learn_noise=learn_noise,
    )
