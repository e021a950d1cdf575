"""
Kernels de covariância: rational quadratic, spectral mixture e produto.

Cada kernel sabe se converter para um vetor de parâmetros no espaço de
otimização (log para parâmetros positivos, linear para as médias espectrais)
e voltar, o que permite ao otimizador tratar qualquer combinação de forma
uniforme.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from utils.errors import InvalidArgumentError

# Limites padrão no espaço natural dos parâmetros (eixos normalizados em [0, 1])
DEFAULT_BOUNDS = {
    "variance": (1e-4, 10.0),
    "lengthscale": (0.01, 10.0),
    "alpha": (0.1, 100.0),
    "sm_weight": (1e-4, 10.0),
    "sm_mean": (0.0, 10.0),
    "sm_variance": (1e-3, 250.0),
    "noise": (1e-8, 1.0),
}


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x[:, None]
    return x


def _differences(x, x_prime) -> np.ndarray:
    # diferenças diretas (não a expansão ‖x‖² + ‖x'‖² − 2x·x') para simetria exata
    return _as_points(x)[:, None, :] - _as_points(x_prime)[None, :, :]


def _require_positive(**values):
    for name, value in values.items():
        arr = np.asarray(value, dtype=float)
        if arr.size == 0 or not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise InvalidArgumentError(f"hiperparâmetro {name} deve ser positivo: {value}")


def rq_kernel(x, x_prime, variance: float = 1.0, lengthscale: float = 1.0, alpha: float = 1.0) -> float:
    """σ²·(1 + ‖x−x'‖²/(2αℓ²))^(−α) para um par de pontos."""
    _require_positive(variance=variance, lengthscale=lengthscale, alpha=alpha)
    diff = np.atleast_1d(np.asarray(x, dtype=float)) - np.atleast_1d(np.asarray(x_prime, dtype=float))
    sq = float(np.sum(diff ** 2))
    return float(variance * np.exp(-alpha * np.log1p(sq / (2.0 * alpha * lengthscale ** 2))))


def sm_kernel(x, x_prime, weights, means, variances) -> float:
    """Σ_q w_q·exp(−2π²τ²v_q)·cos(2πτμ_q), τ = x − x'."""
    weights, means, variances = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (weights, means, variances))
    if not weights.size == means.size == variances.size:
        raise InvalidArgumentError("componentes da spectral mixture com tamanhos diferentes")
    _require_positive(weights=weights, variances=variances)
    tau = float(x) - float(x_prime)
    terms = weights * np.exp(-2.0 * np.pi ** 2 * tau ** 2 * variances) * np.cos(2.0 * np.pi * tau * means)
    return float(terms.sum())


class Kernel(ABC):
    """Interface comum dos kernels."""

    kind: str = ""

    @abstractmethod
    def __call__(self, x, x_prime=None) -> np.ndarray:
        """Matriz de covariância cruzada (len(x), len(x_prime))."""

    def diag(self, x) -> np.ndarray:
        """Variância a priori k(x, x) ponto a ponto."""
        points = _as_points(x)
        return np.array([self(p[None, :])[0, 0] for p in points])

    @abstractmethod
    def to_vector(self) -> np.ndarray: ...

    @abstractmethod
    def vector_bounds(self, bounds: dict) -> list[tuple[float, float]]: ...

    @abstractmethod
    def from_vector(self, vector) -> "Kernel": ...

    @abstractmethod
    def hyperparameters(self) -> dict: ...

    @property
    def n_params(self) -> int:
        return self.to_vector().size


def _select(x, active_dims):
    points = _as_points(x)
    if active_dims is None:
        return points
    return points[:, list(active_dims)]


@dataclass(frozen=True)
class RationalQuadratic(Kernel):
    variance: float = 1.0
    lengthscale: float = 1.0
    alpha: float = 1.0
    active_dims: tuple[int, ...] | None = None

    kind = "rational_quadratic"

    def __post_init__(self):
        _require_positive(variance=self.variance, lengthscale=self.lengthscale, alpha=self.alpha)

    def __call__(self, x, x_prime=None) -> np.ndarray:
        x_prime = x if x_prime is None else x_prime
        diff = _differences(_select(x, self.active_dims), _select(x_prime, self.active_dims))
        sq = np.sum(diff ** 2, axis=-1)
        return self.variance * np.exp(-self.alpha * np.log1p(sq / (2.0 * self.alpha * self.lengthscale ** 2)))

    def diag(self, x) -> np.ndarray:
        return np.full(_as_points(x).shape[0], self.variance)

    def to_vector(self) -> np.ndarray:
        return np.log([self.variance, self.lengthscale, self.alpha])

    def vector_bounds(self, bounds: dict) -> list[tuple[float, float]]:
        return [tuple(np.log(bounds[name])) for name in ("variance", "lengthscale", "alpha")]

    def from_vector(self, vector) -> "RationalQuadratic":
        variance, lengthscale, alpha = np.exp(np.asarray(vector, dtype=float))
        return RationalQuadratic(float(variance), float(lengthscale), float(alpha), self.active_dims)

    def hyperparameters(self) -> dict:
        return {"kind": self.kind, "variance": self.variance, "lengthscale": self.lengthscale, "alpha": self.alpha}


@dataclass(frozen=True)
class SpectralMixture(Kernel):
    """
    Mistura de Q componentes espectrais gaussianas.

    Em entradas com mais de uma dimensão, τ·μ_q usa a soma das diferenças e
    τ² a distância euclidiana ao quadrado (mesma frequência em todas as
    dimensões), o que se reduz à forma escalar usual em 1-D.
    """

    weights: tuple[float, ...] = (0.5, 0.5)
    means: tuple[float, ...] = (0.0, 1.0)
    variances: tuple[float, ...] = (1.0, 1.0)
    active_dims: tuple[int, ...] | None = None

    kind = "spectral_mixture"

    def __post_init__(self):
        for name in ("weights", "means", "variances"):
            object.__setattr__(self, name, tuple(float(v) for v in np.atleast_1d(getattr(self, name))))
        if not len(self.weights) == len(self.means) == len(self.variances) >= 1:
            raise InvalidArgumentError("spectral mixture precisa de Q >= 1 componentes consistentes")
        _require_positive(weights=self.weights, variances=self.variances)
        if any(not np.isfinite(m) for m in self.means):
            raise InvalidArgumentError(f"médias espectrais inválidas: {self.means}")

    @property
    def n_components(self) -> int:
        return len(self.weights)

    def __call__(self, x, x_prime=None) -> np.ndarray:
        x_prime = x if x_prime is None else x_prime
        diff = _differences(_select(x, self.active_dims), _select(x_prime, self.active_dims))
        sq = np.sum(diff ** 2, axis=-1)
        lag = np.sum(diff, axis=-1)
        result = np.zeros(sq.shape)
        for w, mu, v in zip(self.weights, self.means, self.variances):
            result += w * np.exp(-2.0 * np.pi ** 2 * sq * v) * np.cos(2.0 * np.pi * lag * mu)
        return result

    def diag(self, x) -> np.ndarray:
        return np.full(_as_points(x).shape[0], sum(self.weights))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([np.log(self.weights), np.asarray(self.means), np.log(self.variances)])

    def vector_bounds(self, bounds: dict) -> list[tuple[float, float]]:
        q = self.n_components
        return (
            [tuple(np.log(bounds["sm_weight"]))] * q
            + [tuple(bounds["sm_mean"])] * q
            + [tuple(np.log(bounds["sm_variance"]))] * q
        )

    def from_vector(self, vector) -> "SpectralMixture":
        vector = np.asarray(vector, dtype=float)
        q = self.n_components
        return SpectralMixture(
            tuple(np.exp(vector[:q])),
            tuple(vector[q:2 * q]),
            tuple(np.exp(vector[2 * q:])),
            self.active_dims,
        )

    def hyperparameters(self) -> dict:
        return {
            "kind": self.kind,
            "weights": list(self.weights),
            "means": list(self.means),
            "variances": list(self.variances),
        }


@dataclass(frozen=True)
class Product(Kernel):
    """Produto de kernels, cada fator restrito às próprias dimensões (active_dims)."""

    factors: tuple[Kernel, ...] = field(default_factory=tuple)

    kind = "product"

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise InvalidArgumentError("kernel produto sem fatores")

    def __call__(self, x, x_prime=None) -> np.ndarray:
        result = self.factors[0](x, x_prime)
        for factor in self.factors[1:]:
            result = result * factor(x, x_prime)
        return result

    def diag(self, x) -> np.ndarray:
        result = self.factors[0].diag(x)
        for factor in self.factors[1:]:
            result = result * factor.diag(x)
        return result

    def to_vector(self) -> np.ndarray:
        return np.concatenate([f.to_vector() for f in self.factors])

    def vector_bounds(self, bounds: dict) -> list[tuple[float, float]]:
        return [b for f in self.factors for b in f.vector_bounds(bounds)]

    def from_vector(self, vector) -> "Product":
        vector = np.asarray(vector, dtype=float)
        factors, start = [], 0
        for factor in self.factors:
            factors.append(factor.from_vector(vector[start:start + factor.n_params]))
            start += factor.n_params
        return Product(tuple(factors))

    def hyperparameters(self) -> dict:
        return {"kind": self.kind, "factors": [f.hyperparameters() for f in self.factors]}


def per_axis_product(kernels) -> Product:
    """Produto com o fator d atuando na coluna d (forma densa de K_1 ⊗ K_2 ⊗ K_3)."""
    return Product(tuple(with_active_dims(k, (d,)) for d, k in enumerate(kernels)))


def with_active_dims(kernel: Kernel, dims: tuple[int, ...] | None) -> Kernel:
    """Cópia do kernel base restrita às colunas `dims` (None: todas)."""
    if isinstance(kernel, RationalQuadratic):
        return RationalQuadratic(kernel.variance, kernel.lengthscale, kernel.alpha, dims)
    if isinstance(kernel, SpectralMixture):
        return SpectralMixture(kernel.weights, kernel.means, kernel.variances, dims)
    raise InvalidArgumentError(f"kernel {kernel.kind} não pode ser usado como fator de eixo")


def make_kernel(spec: dict) -> Kernel:
    """Constrói um kernel a partir do dicionário serializado (hyperparameters())."""
    kind = spec.get("kind")
    if kind == RationalQuadratic.kind:
        return RationalQuadratic(spec.get("variance", 1.0), spec.get("lengthscale", 1.0), spec.get("alpha", 1.0))
    if kind == SpectralMixture.kind:
        return SpectralMixture(tuple(spec["weights"]), tuple(spec["means"]), tuple(spec["variances"]))
    if kind == Product.kind:
        return Product(tuple(make_kernel(f) for f in spec["factors"]))
    raise InvalidArgumentError(f"tipo de kernel desconhecido: {kind}")


def gram_matrix(kernel: Kernel, xs) -> np.ndarray:
    """Matriz de Gram K_ij = k(x_i, x_j)."""
    points = _as_points(xs)
    if points.shape[0] == 0:
        raise InvalidArgumentError("gram_matrix precisa de ao menos um ponto")
    return kernel(points, points)
