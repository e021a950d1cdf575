"""
Síntese de pesos desejados: ganho unitário na direção do UE e supressão
dos setores de interferência.

Solução LCMV em forma fechada:
    R = ρ·I + média(s·sᴴ) sobre amostras s dos setores
    w = R⁻¹a / (aᴴR⁻¹a)
o que garante wᴴa = 1 e minimiza a energia nos setores entre os pesos que
satisfazem essa restrição.
"""
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from impairments.codebook import AbfCodebook
from utils.errors import InvalidArgumentError, NumericalFailureError

from .geometry import (
    DEFAULT_REFERENCE_FREQUENCY_HZ,
    ArrayGeometry,
    steering_matrix,
    steering_vector,
)

MIN_POINTS_PER_SECTOR_AXIS = 2


@dataclass(frozen=True)
class Sector:
    """Setor angular (intervalos fechados, graus)."""

    azimuth: tuple[float, float]
    elevation: tuple[float, float]

    def __post_init__(self):
        for name in ("azimuth", "elevation"):
            lo, hi = getattr(self, name)
            if not 0.0 <= lo <= hi <= 180.0:
                raise InvalidArgumentError(f"intervalo de {name} inválido: [{lo}, {hi}]")

    def contains(self, azimuth: float, elevation: float) -> bool:
        return (
            self.azimuth[0] <= azimuth <= self.azimuth[1]
            and self.elevation[0] <= elevation <= self.elevation[1]
        )

    def sample(self, density: float) -> tuple[np.ndarray, np.ndarray]:
        """Grade uniforme com `density` pontos por grau (mínimo 2 por eixo)."""
        axes = []
        for lo, hi in (self.azimuth, self.elevation):
            count = max(MIN_POINTS_PER_SECTOR_AXIS, int(round((hi - lo) * density)) + 1)
            axes.append(np.linspace(lo, hi, count))
        az, el = np.meshgrid(*axes, indexing="ij")
        return az.ravel(), el.ravel()


@dataclass(frozen=True)
class SynthesisSpec:
    ue_direction: tuple[float, float]
    interference_sectors: tuple[Sector, ...] = field(default_factory=tuple)
    regularization: float = 1e-3
    density: float = 1.0

    def __post_init__(self):
        az, el = self.ue_direction
        if not (0.0 <= az <= 180.0 and 0.0 <= el <= 180.0):
            raise InvalidArgumentError(f"direção do UE fora de [0, 180]²: {self.ue_direction}")
        if self.regularization < 0:
            raise InvalidArgumentError("regularização não pode ser negativa")
        if self.density <= 0:
            raise InvalidArgumentError("densidade de amostragem deve ser positiva")
        for sector in self.interference_sectors:
            if sector.contains(az, el):
                raise InvalidArgumentError(f"direção do UE dentro do setor {sector}")


def interference_covariance(geom: ArrayGeometry, frequency: float, spec: SynthesisSpec,
                            reference_frequency: float = DEFAULT_REFERENCE_FREQUENCY_HZ) -> np.ndarray:
    """Média de s·sᴴ sobre todas as amostras de todos os setores (pesos iguais)."""
    n = geom.n_elements
    if not spec.interference_sectors:
        return np.zeros((n, n), dtype=complex)

    samples = []
    for sector in spec.interference_sectors:
        az, el = sector.sample(spec.density)
        samples.append(steering_matrix(geom, az, el, frequency, reference_frequency))
    S = np.concatenate(samples, axis=0)
    return (S.T @ S.conj()) / S.shape[0]


def synthesize_weights(
    geom: ArrayGeometry,
    frequency: float,
    spec: SynthesisSpec,
    reference_frequency: float = DEFAULT_REFERENCE_FREQUENCY_HZ,
) -> np.ndarray:
    """Pesos LCMV para uma frequência; wᴴa(UE) = 1."""
    a = steering_vector(geom, *spec.ue_direction, frequency, reference_frequency)
    R = spec.regularization * np.eye(geom.n_elements) + interference_covariance(
        geom, frequency, spec, reference_frequency
    )
    if spec.regularization == 0 and np.linalg.cond(R) > 1.0 / np.finfo(float).eps:
        raise NumericalFailureError("matriz R singular sem regularização", module="antenna.beamsynth")
    try:
        Ria = np.linalg.solve(R, a)
    except np.linalg.LinAlgError as e:
        raise NumericalFailureError(f"matriz R singular: {e}", module="antenna.beamsynth") from e

    denom = np.vdot(a, Ria)
    if not np.isfinite(denom) or abs(denom) < np.finfo(float).tiny:
        raise NumericalFailureError("aᴴR⁻¹a degenerado", module="antenna.beamsynth")
    return Ria / denom


def synthesize_wideband_weights(
    geom: ArrayGeometry,
    frequencies,
    spec: SynthesisSpec,
    reference_frequency: float = DEFAULT_REFERENCE_FREQUENCY_HZ,
) -> np.ndarray:
    """Síntese por frequência (DBF): shape (F, n_elements)."""
    frequencies = np.atleast_1d(frequencies)
    logger.debug(f"Sintetizando pesos DBF para {frequencies.size} frequências")
    return np.stack([synthesize_weights(geom, f, spec, reference_frequency) for f in frequencies])


def scale_to_codebook(weights, codebook: AbfCodebook) -> np.ndarray:
    """Reescala os pesos para que a maior magnitude coincida com o maior ganho do codebook."""
    weights = np.asarray(weights, dtype=complex)
    peak = np.max(np.abs(weights))
    if peak == 0:
        return weights.copy()
    return weights * (codebook.gains[-1] / peak)


def synthesize_abf_weights(
    geom: ArrayGeometry,
    frequency: float,
    spec: SynthesisSpec,
    codebook: AbfCodebook,
    reference_frequency: float = DEFAULT_REFERENCE_FREQUENCY_HZ,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Pesos ABF ideais (sem distorção) na frequência central.

    Returns:
        (índices do codebook por canal, pesos contínuos reescalados para o codebook)
    """
    continuous = scale_to_codebook(synthesize_weights(geom, frequency, spec, reference_frequency), codebook)
    return codebook.nearest_indices(continuous), continuous
