"""
Regressão por processos gaussianos: kernels, GP denso (oráculo),
aprendizado de hiperparâmetros e inferência de Kronecker na grade F × N × Z.
"""
from .grid import AXIS_NAMES, GridAxes, normalize_axis
from .kernels import (
    DEFAULT_BOUNDS,
    Kernel,
    Product,
    RationalQuadratic,
    SpectralMixture,
    gram_matrix,
    make_kernel,
    per_axis_product,
    rq_kernel,
    sm_kernel,
)
from .dense import Dataset, DenseGPModel, dense_gp_predict, fit_dense_gp, log_marginal_likelihood
from .optimize import HyperparameterFit, optimize_hyperparameters
from .cg import CGResult, conjugate_gradient
from .kronecker import (
    KronEigen,
    KronGPModel,
    grid_gp_fit,
    grid_gp_predict,
    kron_eigendecomposition,
    kron_log_marginal_likelihood,
    kron_matvec,
    optimize_grid_hyperparameters,
)

__all__ = [
    "AXIS_NAMES",
    "GridAxes",
    "normalize_axis",
    "DEFAULT_BOUNDS",
    "Kernel",
    "Product",
    "RationalQuadratic",
    "SpectralMixture",
    "gram_matrix",
    "make_kernel",
    "per_axis_product",
    "rq_kernel",
    "sm_kernel",
    "Dataset",
    "DenseGPModel",
    "dense_gp_predict",
    "fit_dense_gp",
    "log_marginal_likelihood",
    "HyperparameterFit",
    "optimize_hyperparameters",
    "CGResult",
    "conjugate_gradient",
    "KronEigen",
    "KronGPModel",
    "grid_gp_fit",
    "grid_gp_predict",
    "kron_eigendecomposition",
    "kron_log_marginal_likelihood",
    "kron_matvec",
    "optimize_grid_hyperparameters",
]
