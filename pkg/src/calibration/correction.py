"""
Correção dos pesos de beamforming a partir de ŵ^d(f, n, z).

DBF: divide o peso desejado pela distorção estimada no código canônico.
ABF: escolhe, por canal, o código cujo valor distorcido melhor reproduz o
peso desejado (distância euclidiana) ou as razões entre canais vizinhos.
"""
from dataclasses import dataclass

import numpy as np
from loguru import logger

from impairments.codebook import AbfCodebook
from utils.errors import DegenerateDistortionError, InvalidArgumentError

from .model import DistortedWeightSource

MIN_DISTORTION_MAGNITUDE = 1e-6
EVALUATION_BANDS = ("full_band", "center")
RATIO_METHODS = ("greedy", "viterbi")
TIE_RTOL = 1e-9
CHUNK_ELEMENTS = 2 ** 22


@dataclass(frozen=True)
class DbfCorrection:
    weights: np.ndarray
    indices: np.ndarray
    distortion: np.ndarray


def canonical_codebook_indices(desired, codebook: AbfCodebook) -> np.ndarray:
    """
    Código canônico de cada peso contínuo: o mais próximo depois de escalar
    o conjunto para que o maior módulo coincida com g_max.
    """
    desired = np.asarray(desired, dtype=complex)
    peak = float(np.max(np.abs(desired))) if desired.size else 0.0
    scale = codebook.gain_range[1] / peak if peak > 0 else 1.0
    return codebook.nearest_indices(desired * scale)


def _as_band(desired, n_frequencies: int, n_channels: int) -> np.ndarray:
    desired = np.asarray(desired, dtype=complex)
    if desired.ndim == 1:
        desired = np.broadcast_to(desired, (n_frequencies, desired.size))
    if desired.shape != (n_frequencies, n_channels):
        raise InvalidArgumentError(f"pesos desejados {desired.shape} incompatíveis com (F, N)=({n_frequencies}, {n_channels})")
    return desired


def calibrate_dbf(desired, model: DistortedWeightSource) -> DbfCorrection:
    """
    w' = w / d̂(f, n, z_canônico), para que w'·d ≈ w.

    Raises:
        DegenerateDistortionError: |d̂| < 1e-6 em algum (f, n)
    """
    surfaces = model.distorted_weights()
    F, N, _ = surfaces.shape
    desired = _as_band(desired, F, N)
    indices = canonical_codebook_indices(desired, model.codebook)

    f_idx, n_idx = np.meshgrid(np.arange(F), np.arange(N), indexing="ij")
    estimated = surfaces[f_idx, n_idx, indices] / model.codebook.weights[indices]
    smallest = float(np.min(np.abs(estimated)))
    if smallest < MIN_DISTORTION_MAGNITUDE:
        raise DegenerateDistortionError(
            f"distorção estimada degenerada (|d̂| = {smallest:.2e})", module="calibration.dbf"
        )
    return DbfCorrection(desired / estimated, indices, estimated)


def _evaluation_rows(n_frequencies: int, evaluation: str) -> np.ndarray:
    if evaluation not in EVALUATION_BANDS:
        raise InvalidArgumentError(f"banda de avaliação desconhecida: {evaluation}")
    if evaluation == "center":
        return np.array([n_frequencies // 2])
    return np.arange(n_frequencies)


def calibrate_abf_nearest(desired, model: DistortedWeightSource, evaluation: str = "full_band") -> np.ndarray:
    """
    Um código por canal: z* = argmin_z Σ_f |w(f, n) − ŵ^d(f, n, z)|² (empate: menor índice).

    `desired` pode ser (N,) (peso único para a banda) ou (F, N).
    """
    surfaces = model.distorted_weights()
    F, N, _ = surfaces.shape
    rows = _evaluation_rows(F, evaluation)
    desired = _as_band(desired, F, N)[rows]
    cost = np.sum(np.abs(desired[:, :, None] - surfaces[rows]) ** 2, axis=0)
    return np.argmin(cost, axis=1)


def _channel_ratios(desired: np.ndarray) -> np.ndarray:
    previous = desired[:, :-1]
    if np.any(previous == 0):
        raise InvalidArgumentError("razões entre canais indefinidas: peso desejado nulo")
    return desired[:, 1:] / previous


def _transition_cost(previous: np.ndarray, candidates: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Σ_f |cand(f, b)/prev(f, a) − r(f)|² → (A, B); quociente não finito vira custo infinito."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = candidates[:, None, :] / previous[:, :, None]
    cost = np.sum(np.abs(ratio - target[:, None, None]) ** 2, axis=0)
    return np.where(np.isfinite(cost), cost, np.inf)


def ratio_objective(indices, desired, surfaces: np.ndarray, rows=None) -> float:
    """Σ_n Σ_f |ŵ^d(z_n)/ŵ^d(z_{n−1}) − w_n/w_{n−1}|² de uma escolha de códigos."""
    F, N, _ = surfaces.shape
    rows = np.arange(F) if rows is None else rows
    desired = _as_band(desired, F, N)[rows]
    channels = np.arange(N)
    realized = surfaces[rows][:, channels, np.asarray(indices)]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = realized[:, 1:] / realized[:, :-1]
    return float(np.sum(np.abs(ratio - _channel_ratios(desired)) ** 2))


def _greedy_sweep(surfaces: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Varredura gulosa partindo de todos os códigos do canal 0; devolve (caminhos, custos) por âncora."""
    F, N, Z = surfaces.shape
    block = max(1, CHUNK_ELEMENTS // max(1, F * Z))
    paths = np.zeros((Z, N), dtype=int)
    totals = np.zeros(Z)
    for start in range(0, Z, block):
        anchors = np.arange(start, min(Z, start + block))
        current = anchors.copy()
        paths[anchors, 0] = anchors
        for n in range(1, N):
            cost = _transition_cost(surfaces[:, n - 1, current], surfaces[:, n, :], targets[:, n - 1])
            current = np.argmin(cost, axis=1)
            totals[anchors] += cost[np.arange(anchors.size), current]
            paths[anchors, n] = current
    return paths, totals


def _viterbi(surfaces: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Programação dinâmica exata sobre a cadeia de canais."""
    F, N, Z = surfaces.shape
    block = max(1, CHUNK_ELEMENTS // max(1, F * Z))
    accumulated = np.zeros(Z)
    backpointers = np.zeros((N, Z), dtype=int)
    for n in range(1, N):
        best = np.full(Z, np.inf)
        arg = np.zeros(Z, dtype=int)
        for start in range(0, Z, block):
            sources = np.arange(start, min(Z, start + block))
            cost = accumulated[sources, None] + _transition_cost(
                surfaces[:, n - 1, sources], surfaces[:, n, :], targets[:, n - 1]
            )
            local = np.argmin(cost, axis=0)
            value = cost[local, np.arange(Z)]
            better = value < best
            best[better] = value[better]
            arg[better] = sources[local[better]]
        accumulated = best
        backpointers[n] = arg

    path = np.zeros(N, dtype=int)
    path[-1] = int(np.argmin(accumulated))
    for n in range(N - 1, 0, -1):
        path[n - 1] = backpointers[n, path[n]]
    return path


def calibrate_abf_ratio(
    desired,
    model: DistortedWeightSource,
    method: str = "greedy",
    evaluation: str = "full_band",
) -> np.ndarray:
    """
    Códigos que reproduzem as razões w_n/w_{n−1} entre canais consecutivos.

    method="greedy": varredura canal a canal (ordem fixa 0..N−1) a partir de
    cada código possível do canal 0, ficando com a melhor âncora. Empates de
    custo são desfeitos pela distância euclidiana ao peso desejado e depois
    pelo menor índice. Heurística: não garante o ótimo global.
    method="viterbi": ótimo exato da mesma função objetivo.
    """
    if method not in RATIO_METHODS:
        raise InvalidArgumentError(f"método de razões desconhecido: {method}")
    surfaces = model.distorted_weights()
    F, N, Z = surfaces.shape
    if N < 2:
        raise InvalidArgumentError("seleção por razões exige ao menos 2 canais")
    rows = _evaluation_rows(F, evaluation)
    desired_band = _as_band(desired, F, N)[rows]
    targets = _channel_ratios(desired_band)
    subset = surfaces[rows]

    if method == "viterbi":
        return _viterbi(subset, targets)

    paths, totals = _greedy_sweep(subset, targets)
    best = float(np.min(totals))
    tied = np.flatnonzero(totals <= best + TIE_RTOL * max(abs(best), 1e-300) + 1e-12)
    if tied.size > 1:
        channels = np.arange(N)
        distances = [float(np.sum(np.abs(subset[:, channels, paths[a]] - desired_band) ** 2)) for a in tied]
        winner = int(tied[int(np.argmin(distances))])
        logger.debug(f"Seleção por razões: {tied.size} âncoras empatadas, escolhida {winner}")
    else:
        winner = int(tied[0])
    return paths[winner]


def quantize_weights(desired, codebook: AbfCodebook) -> np.ndarray:
    """Quantização simples (sem calibração): código mais próximo de cada peso comandado."""
    return codebook.nearest_indices(desired)
