"""
Inferência GP em grade produto F × N × Z com covariância K = K_F ⊗ K_N ⊗ K_Z.

A matriz completa nunca é materializada: produtos K·v são feitos eixo a
eixo sobre o tensor (kron_matvec), a grade incompleta é tratada pelo
operador de seleção S dentro do gradiente conjugado, e a grade completa é
resolvida exatamente pelas autodecomposições por eixo.

Ordem dos pontos: row-major sobre (F, N, Z), a mesma de np.ravel.
"""
from dataclasses import dataclass

import numpy as np
from loguru import logger

from utils.errors import InvalidArgumentError, ModelStateError, NumericalFailureError

from .cg import conjugate_gradient
from .dense import Dataset
from .grid import GridAxes
from .kernels import Kernel, gram_matrix, per_axis_product, with_active_dims
from .optimize import HyperparameterFit, maximize_marginal_likelihood, optimize_hyperparameters

SOLVERS = ("auto", "cg", "eigen")
HYPER_STRATEGIES = ("subsample", "kronecker")
PREDICT_CHUNK = 2048


def kron_matvec(factors, v) -> np.ndarray:
    """(K_1 ⊗ … ⊗ K_D)·v por contrações sucessivas do tensor; fatores podem ser retangulares."""
    factors = [np.atleast_2d(np.asarray(f)) for f in factors]
    v = np.asarray(v)
    in_shape = tuple(f.shape[1] for f in factors)
    if v.size != int(np.prod(in_shape)):
        raise InvalidArgumentError(f"vetor de tamanho {v.size} incompatível com fatores {in_shape}")

    tensor = v.reshape(in_shape)
    for axis, factor in enumerate(factors):
        tensor = np.moveaxis(np.tensordot(factor, tensor, axes=([1], [axis])), 0, axis)
    return tensor.ravel()


@dataclass(frozen=True)
class KronEigen:
    eigenvalues: tuple[np.ndarray, ...]
    eigenvectors: tuple[np.ndarray, ...]

    def product_eigenvalues(self) -> np.ndarray:
        """Autovalores de K (todos os produtos), na ordem row-major dos autovetores."""
        values = self.eigenvalues[0]
        for lam in self.eigenvalues[1:]:
            values = np.multiply.outer(values, lam)
        return np.asarray(values).ravel()


def kron_eigendecomposition(factors) -> KronEigen:
    """Autodecomposição simétrica (eigh) de cada fator."""
    values, vectors = [], []
    for index, factor in enumerate(factors):
        factor = np.atleast_2d(np.asarray(factor, dtype=float))
        scale = max(1.0, float(np.max(np.abs(factor))))
        if factor.shape[0] != factor.shape[1] or not np.allclose(factor, factor.T, rtol=0.0, atol=1e-12 * scale):
            raise InvalidArgumentError(f"fator {index} não é simétrico")
        lam, q = np.linalg.eigh(factor)
        values.append(lam)
        vectors.append(q)
    return KronEigen(tuple(values), tuple(vectors))


@dataclass(frozen=True)
class FitDiagnostics:
    solver: str
    iterations: int
    residual: float
    restarts: int = 0


@dataclass(frozen=True)
class KronGPModel:
    """GP ajustado na grade; `solution` é u = (SKSᵀ + σ²I)⁻¹y (None antes do ajuste)."""

    axes: GridAxes
    kernels: tuple[Kernel, ...]
    factors: tuple[np.ndarray, ...]
    mask: np.ndarray
    targets: np.ndarray
    noise_variance: float
    solution: np.ndarray | None = None
    diagnostics: FitDiagnostics | None = None

    @property
    def is_fitted(self) -> bool:
        return self.solution is not None

    @property
    def observed_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask.ravel())

    @property
    def n_observed(self) -> int:
        return int(self.mask.sum())

    def scatter(self, values) -> np.ndarray:
        """Coloca um vetor dos pontos observados na grade completa (zeros fora da máscara)."""
        full = np.zeros(self.axes.size)
        full[self.observed_indices] = values
        return full


def axis_gram_factors(axes: GridAxes, kernels) -> tuple[np.ndarray, ...]:
    if len(kernels) != axes.ndim:
        raise InvalidArgumentError(f"{len(kernels)} kernels para {axes.ndim} eixos")
    return tuple(gram_matrix(k, c) for k, c in zip(kernels, axes.coordinates))


def _validate_observations(axes: GridAxes, mask, targets, noise_variance):
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != axes.shape:
        raise InvalidArgumentError(f"máscara {mask.shape} não bate com a grade {axes.shape}")
    if not mask.any():
        raise InvalidArgumentError("máscara sem observações")
    targets = np.asarray(targets, dtype=float).ravel()
    if targets.size != int(mask.sum()):
        raise InvalidArgumentError(f"{targets.size} alvos para {int(mask.sum())} observações")
    if not np.all(np.isfinite(targets)):
        raise InvalidArgumentError("alvos não finitos")
    if noise_variance < 0:
        raise InvalidArgumentError(f"variância de ruído negativa: {noise_variance}")
    return mask, targets


def _eigen_solve(eigen: KronEigen, noise_variance: float, rhs: np.ndarray) -> np.ndarray:
    spectrum = np.maximum(eigen.product_eigenvalues(), 0.0) + noise_variance
    if spectrum.min() <= 0:
        raise NumericalFailureError("K + σ²I singular na grade completa", module="gp.kronecker")
    rotated = kron_matvec([q.T for q in eigen.eigenvectors], rhs)
    return kron_matvec(eigen.eigenvectors, rotated / spectrum)


def _observed_operator(factors, observed: np.ndarray, grid_size: int, noise_variance: float):
    def matvec(u):
        full = np.zeros(grid_size)
        full[observed] = u
        return kron_matvec(factors, full)[observed] + noise_variance * u
    return matvec


def grid_gp_fit(
    axes: GridAxes,
    mask,
    targets,
    kernels,
    noise_variance: float,
    cg_tol: float = 1e-8,
    cg_max_iters: int | None = None,
    solver: str = "auto",
) -> KronGPModel:
    """
    Resolve (S·K·Sᵀ + σ²I)·u = y.

    solver="auto" usa a solução exata por autovalores quando todos os pontos
    da grade foram observados e CG caso contrário; "cg" força o CG.

    Raises:
        ConvergenceError: CG sem convergência dentro de cg_max_iters
    """
    if solver not in SOLVERS:
        raise InvalidArgumentError(f"solver desconhecido: {solver}")
    mask, targets = _validate_observations(axes, mask, targets, noise_variance)
    kernels = tuple(kernels)
    factors = axis_gram_factors(axes, kernels)
    observed = np.flatnonzero(mask.ravel())
    full_grid = observed.size == axes.size
    matvec = _observed_operator(factors, observed, axes.size, noise_variance)

    if solver == "eigen" and not full_grid:
        raise InvalidArgumentError("solver 'eigen' exige a grade completamente observada")

    if full_grid and solver != "cg":
        solution = _eigen_solve(kron_eigendecomposition(factors), noise_variance, targets)
        norm = float(np.linalg.norm(targets)) or 1.0
        residual = float(np.linalg.norm(matvec(solution) - targets)) / norm
        diagnostics = FitDiagnostics("eigen", 0, residual, 0)
    else:
        result = conjugate_gradient(matvec, targets, tol=cg_tol, max_iters=cg_max_iters, grid_size=axes.size)
        solution = result.solution
        diagnostics = FitDiagnostics("cg", result.iterations, result.residual, result.restarts)

    logger.debug(
        f"GP em grade {axes.shape}: {observed.size} observações, solver={diagnostics.solver}, "
        f"iterações={diagnostics.iterations}, resíduo={diagnostics.residual:.2e}"
    )
    return KronGPModel(axes, kernels, factors, mask, targets, float(noise_variance), solution, diagnostics)


def _cross_factors(model: KronGPModel, points: np.ndarray) -> list[np.ndarray]:
    return [k(points[:, d], c) for d, (k, c) in enumerate(zip(model.kernels, model.axes.coordinates))]


def _prior_diag(model: KronGPModel, points: np.ndarray) -> np.ndarray:
    result = np.ones(points.shape[0])
    for d, kernel in enumerate(model.kernels):
        result = result * kernel.diag(points[:, d])
    return result


def _solve_observed(model: KronGPModel, rhs: np.ndarray, cg_tol: float) -> np.ndarray:
    if model.diagnostics is not None and model.diagnostics.solver == "eigen":
        return _eigen_solve(kron_eigendecomposition(model.factors), model.noise_variance, rhs)
    matvec = _observed_operator(model.factors, model.observed_indices, model.axes.size, model.noise_variance)
    return conjugate_gradient(matvec, rhs, tol=cg_tol, grid_size=model.axes.size).solution


def grid_gp_predict(model: KronGPModel, query=None, return_variance: bool = False, cg_tol: float = 1e-8):
    """
    Média a posteriori K_{*,obs}·u.

    Args:
        query: None para a grade inteira (retorna tensor com a forma da grade)
               ou pontos (P, D) em coordenadas normalizadas.
        return_variance: variância a posteriori por ponto (um solve por ponto).

    Returns:
        (média, variância ou None)
    """
    if not model.is_fitted:
        raise ModelStateError("modelo em grade ainda não ajustado")

    weights = model.scatter(model.solution)
    if query is None:
        mean = kron_matvec(model.factors, weights).reshape(model.axes.shape)
        if not return_variance:
            return mean, None
        points = model.axes.points()
    else:
        points = np.atleast_2d(np.asarray(query, dtype=float))
        if points.shape[1] != model.axes.ndim:
            raise InvalidArgumentError(f"pontos de consulta devem ter {model.axes.ndim} coordenadas")
        tensor = weights.reshape(model.axes.shape)
        mean = np.empty(points.shape[0])
        for start in range(0, points.shape[0], PREDICT_CHUNK):
            chunk = points[start:start + PREDICT_CHUNK]
            cross = _cross_factors(model, chunk)
            mean[start:start + PREDICT_CHUNK] = np.einsum("pi,pj,pk,ijk->p", *cross, tensor, optimize=True)
        if not return_variance:
            return mean, None

    observed = model.observed_indices
    variance = _prior_diag(model, points)
    for p in range(points.shape[0]):
        cross = _cross_factors(model, points[p:p + 1])
        k_obs = cross[0][0]
        for c in cross[1:]:
            k_obs = np.multiply.outer(k_obs, c[0])
        k_obs = k_obs.ravel()[observed]
        variance[p] -= float(k_obs @ _solve_observed(model, k_obs, cg_tol))
    variance = np.maximum(variance, 0.0)
    if query is None:
        variance = variance.reshape(model.axes.shape)
    return mean, variance


def kron_log_determinant(model: KronGPModel) -> float:
    """
    log det(SKSᵀ + σ²I) pelos autovalores de Kronecker.

    Grade completa: exato. Grade incompleta: soma sobre os m_obs maiores
    autovalores escalados por m_obs/m_grid (aproximação).
    """
    eigenvalues = np.maximum(kron_eigendecomposition(model.factors).product_eigenvalues(), 0.0)
    m_obs, m_grid = model.n_observed, model.axes.size
    if m_obs == m_grid:
        return float(np.sum(np.log(eigenvalues + model.noise_variance)))
    top = np.sort(eigenvalues)[::-1][:m_obs]
    return float(np.sum(np.log((m_obs / m_grid) * top + model.noise_variance)))


def kron_log_marginal_likelihood(model: KronGPModel) -> float:
    """−½yᵀu − ½log det − (m_obs/2)·log 2π."""
    if not model.is_fitted:
        raise ModelStateError("modelo em grade ainda não ajustado")
    data_fit = float(model.targets @ model.solution)
    return -0.5 * data_fit - 0.5 * kron_log_determinant(model) - 0.5 * model.n_observed * np.log(2.0 * np.pi)


def subsample_observations(
    axes: GridAxes,
    mask,
    targets,
    subsample: int,
    window_z: int,
    seed: int = 0,
) -> Dataset:
    """
    Subamostra das observações para o aprendizado denso de hiperparâmetros.

    Restringe a uma janela contígua de `window_z` índices do codebook (a de
    mais observações, empate na menor), para que as correlações ao longo de
    Z apareçam, e sorteia até `subsample` pontos dentro dela.
    """
    mask = np.asarray(mask, dtype=bool)
    targets = np.asarray(targets, dtype=float).ravel()
    observed = np.flatnonzero(mask.ravel())
    n_codes = axes.shape[-1]
    window = max(1, min(window_z, n_codes))

    per_code = mask.reshape(-1, n_codes).sum(axis=0)
    window_counts = np.convolve(per_code, np.ones(window, dtype=int), mode="valid")
    start = int(np.argmax(window_counts))
    z_index = observed % n_codes
    inside = np.flatnonzero((z_index >= start) & (z_index < start + window))

    if inside.size > subsample:
        rng = np.random.default_rng([int(seed), 2])
        inside = np.sort(rng.choice(inside, size=subsample, replace=False))
    return Dataset(axes.points(observed[inside]), targets[inside])


def optimize_grid_hyperparameters(
    axes: GridAxes,
    mask,
    targets,
    kernels,
    noise_variance: float,
    strategy: str = "subsample",
    subsample: int = 400,
    window_z: int = 8,
    seed: int = 0,
    bounds: dict | None = None,
    max_iters: int = 100,
    restarts: int = 3,
    learn_noise: bool = True,
    cg_tol: float = 1e-8,
    cg_max_iters: int | None = None,
) -> tuple[tuple[Kernel, ...], float, HyperparameterFit]:
    """
    Aprende os kernels por eixo e o ruído.

    strategy="subsample": verossimilhança densa exata numa subamostra com o
    kernel produto equivalente. strategy="kronecker": maximiza
    kron_log_marginal_likelihood na grade toda (um CG por avaliação).
    """
    if strategy not in HYPER_STRATEGIES:
        raise InvalidArgumentError(f"estratégia de hiperparâmetros desconhecida: {strategy}")
    mask, targets = _validate_observations(axes, mask, targets, noise_variance)
    product = per_axis_product(kernels)

    if strategy == "subsample":
        dataset = subsample_observations(axes, mask, targets, subsample, window_z, seed)
        fit = optimize_hyperparameters(
            dataset, product, noise_variance,
            bounds=bounds, max_iters=max_iters, restarts=restarts, learn_noise=learn_noise,
        )
    else:
        def objective(kernel, noise):
            axis_kernels = tuple(with_active_dims(k, None) for k in kernel.factors)
            model = grid_gp_fit(axes, mask, targets, axis_kernels, noise, cg_tol, cg_max_iters)
            return kron_log_marginal_likelihood(model)

        logger.info(f"Otimizando hiperparâmetros pela verossimilhança de Kronecker ({int(mask.sum())} pontos)")
        fit = maximize_marginal_likelihood(
            objective, product, noise_variance,
            bounds=bounds, max_iters=max_iters, restarts=restarts, learn_noise=learn_noise,
        )

    learned = tuple(with_active_dims(k, None) for k in fit.kernel.factors)
    return learned, fit.noise_variance, fit
