"""
Métricas de erro: BPA (RMSE entre tensores de padrão de feixe) e NRMSE das
superfícies recuperadas.
"""
import numpy as np

from antenna.geometry import BeamPattern
from utils.errors import DegenerateNormalizationError, InvalidArgumentError

DENOMINATOR_MODES = ("paper_sum", "cell_count")


def bpa_denominator(shape: tuple[int, ...], mode: str = "paper_sum") -> float:
    """I+J+K (paper_sum, padrão) ou I·J·K (cell_count, média por célula)."""
    if mode not in DENOMINATOR_MODES:
        raise InvalidArgumentError(f"modo de denominador desconhecido: {mode}")
    return float(sum(shape)) if mode == "paper_sum" else float(np.prod(shape))


def bpa_rmse(reference: BeamPattern, estimate: BeamPattern, denominator_mode: str = "paper_sum") -> float:
    """sqrt(Σ(P − P̂)² / D) sobre o tensor azimute × elevação × frequência."""
    if not reference.same_axes(estimate):
        raise InvalidArgumentError("padrões de feixe com eixos diferentes")
    denominator = bpa_denominator(reference.shape, denominator_mode)
    return float(np.sqrt(np.sum((reference.values - estimate.values) ** 2) / denominator))


def nrmse(truth, estimate) -> float:
    """RMSE / (max(truth) − min(truth))."""
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise InvalidArgumentError(f"shapes diferentes: {estimate.shape} vs {truth.shape}")
    if truth.size == 0:
        raise InvalidArgumentError("NRMSE sobre tensor vazio")
    spread = float(truth.max() - truth.min())
    if spread <= 0:
        raise DegenerateNormalizationError("NRMSE indefinido: superfície de referência constante")
    return float(np.sqrt(np.mean((estimate - truth) ** 2)) / spread)
