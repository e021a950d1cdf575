"""
Geometria de arranjos retangulares e padrões de feixe.

Convenção de ângulos (graus, ambos em [0, 180]):
    direção(az, el) = (sin el · cos az, cos el, sin el · sin az)

O arranjo fica no plano x-y, então az = el = 90° é a normal (broadside) e
az = 0°, el = 90° é endfire ao longo de x. Os dois cortes dos gráficos
(azimute em el = 90°, elevação em az = 90°) passam pela broadside.

Posições em comprimentos de onda na frequência de referência; a fase escala
com f / f_ref. Elementos isotrópicos.
"""
from dataclasses import dataclass, field

import numpy as np

from utils.errors import InvalidArgumentError

DEFAULT_REFERENCE_FREQUENCY_HZ = 3.5e9
DEFAULT_SPACING = 0.5


@dataclass(frozen=True)
class ArrayGeometry:
    """Arranjo planar retangular com espaçamento uniforme."""

    element_positions: np.ndarray
    nx: int
    ny: int
    spacing: float = DEFAULT_SPACING

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny


@dataclass(frozen=True)
class AngleGrid:
    """Grade de azimutes e elevações em graus."""

    azimuths: np.ndarray
    elevations: np.ndarray

    def __post_init__(self):
        for name in ("azimuths", "elevations"):
            values = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if values.size == 0:
                raise InvalidArgumentError(f"{name} não pode ser vazio")
            if np.any(np.diff(values) <= 0):
                raise InvalidArgumentError(f"{name} deve ser estritamente crescente")
            _check_angles(values, name)
            object.__setattr__(self, name, values)

    @classmethod
    def uniform(cls, step_deg: float = 5.0) -> "AngleGrid":
        """Grade regular cobrindo [0, 180] nos dois eixos."""
        count = int(round(180.0 / step_deg)) + 1
        axis = np.linspace(0.0, 180.0, count)
        return cls(axis, axis.copy())


@dataclass(frozen=True)
class BeamPattern:
    """Tensor de magnitudes indexado por (azimute i, elevação j, frequência k)."""

    values: np.ndarray
    azimuths: np.ndarray
    elevations: np.ndarray
    frequencies: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        expected = (len(self.azimuths), len(self.elevations), len(self.frequencies))
        if self.values.shape != expected:
            raise InvalidArgumentError(
                f"dimensões do padrão {self.values.shape} não batem com os eixos {expected}"
            )
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise InvalidArgumentError("padrão de feixe deve ser finito e não negativo")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def same_axes(self, other: "BeamPattern") -> bool:
        return (
            self.values.shape == other.values.shape
            and np.array_equal(self.azimuths, other.azimuths)
            and np.array_equal(self.elevations, other.elevations)
            and np.array_equal(self.frequencies, other.frequencies)
        )


def _check_angles(values, name: str):
    values = np.asarray(values, dtype=float)
    if np.any(values < 0.0) or np.any(values > 180.0):
        raise InvalidArgumentError(f"{name} fora de [0, 180] graus")


def make_uniform_rect_array(nx: int, ny: int, spacing: float = DEFAULT_SPACING) -> ArrayGeometry:
    """
    Cria um arranjo nx × ny no plano x-y, centrado na origem.

    Elemento n = ix * ny + iy (x é o índice mais lento).
    """
    if nx < 1 or ny < 1:
        raise InvalidArgumentError(f"dimensões do arranjo devem ser positivas: nx={nx}, ny={ny}")
    if not spacing > 0:
        raise InvalidArgumentError(f"espaçamento deve ser positivo: {spacing}")

    xs = (np.arange(nx) - (nx - 1) / 2.0) * spacing
    ys = (np.arange(ny) - (ny - 1) / 2.0) * spacing
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    positions = np.stack([gx.ravel(), gy.ravel(), np.zeros(nx * ny)], axis=1)
    return ArrayGeometry(element_positions=positions, nx=int(nx), ny=int(ny), spacing=float(spacing))


def unit_direction(azimuth, elevation) -> np.ndarray:
    """Vetor unitário (..., 3) para ângulos em graus (aceita arrays com broadcast)."""
    az = np.deg2rad(np.asarray(azimuth, dtype=float))
    el = np.deg2rad(np.asarray(elevation, dtype=float))
    az, el = np.broadcast_arrays(az, el)
    return np.stack([np.sin(el) * np.cos(az), np.cos(el), np.sin(el) * np.sin(az)], axis=-1)


def steering_vector(
    geom: ArrayGeometry,
    azimuth: float,
    elevation: float,
    frequency: float,
    reference_frequency: float = DEFAULT_REFERENCE_FREQUENCY_HZ,
) -> np.ndarray:
    """Entrada n = exp(j·2π·(f/f_ref)·<p_n, u(az, el)>), módulo unitário."""
    if not frequency > 0:
        raise InvalidArgumentError(f"frequência deve ser positiva: {frequency}")
    _check_angles([azimuth, elevation], "ângulo")
    direction = unit_direction(azimuth, elevation)
    path = geom.element_positions @ direction
    return np.exp(1j * 2.0 * np.pi * (frequency / reference_frequency) * path)


def steering_matrix(
    geom: ArrayGeometry,
    azimuths,
    elevations,
    frequency: float,
    reference_frequency: float = DEFAULT_REFERENCE_FREQUENCY_HZ,
) -> np.ndarray:
    """Vetores de apontamento para pares (az, el) com broadcast: shape (..., n_elements)."""
    if not frequency > 0:
        raise InvalidArgumentError(f"frequência deve ser positiva: {frequency}")
    _check_angles(azimuths, "azimute")
    _check_angles(elevations, "elevação")
    directions = unit_direction(azimuths, elevations)
    path = directions @ geom.element_positions.T
    return np.exp(1j * 2.0 * np.pi * (frequency / reference_frequency) * path)


def beam_pattern(
    geom: ArrayGeometry,
    weights,
    angles: AngleGrid,
    frequencies,
    reference_frequency: float = DEFAULT_REFERENCE_FREQUENCY_HZ,
) -> BeamPattern:
    """
    Calcula |w_kᴴ · a(az_i, el_j, f_k)| para toda a grade.

    Args:
        weights: (K, n_elements), um vetor de pesos por frequência. Um único vetor
            (n_elements,) é replicado em todas as frequências (pesos de banda larga).
        frequencies: lista de K frequências em Hz.
    """
    frequencies = np.atleast_1d(np.asarray(frequencies, dtype=float))
    if frequencies.size == 0:
        raise InvalidArgumentError("lista de frequências vazia")

    weights = np.asarray(weights, dtype=complex)
    if weights.ndim == 1:
        weights = np.broadcast_to(weights, (frequencies.size, weights.size))
    if weights.shape != (frequencies.size, geom.n_elements):
        raise InvalidArgumentError(
            f"pesos com shape {weights.shape}, esperado ({frequencies.size}, {geom.n_elements})"
        )

    az_grid, el_grid = np.meshgrid(angles.azimuths, angles.elevations, indexing="ij")
    path = unit_direction(az_grid, el_grid) @ geom.element_positions.T

    values = np.empty((angles.azimuths.size, angles.elevations.size, frequencies.size))
    for k, freq in enumerate(frequencies):
        steering = np.exp(1j * 2.0 * np.pi * (freq / reference_frequency) * path)
        values[:, :, k] = np.abs(steering @ np.conj(weights[k]))

    return BeamPattern(values, angles.azimuths, angles.elevations, frequencies)


def pattern_cut(
    geom: ArrayGeometry,
    weights,
    frequency: float,
    cut: str,
    fixed_angle: float,
    angles,
    reference_frequency: float = DEFAULT_REFERENCE_FREQUENCY_HZ,
) -> np.ndarray:
    """
    Corte 1-D do padrão numa frequência.

    cut="azimuth" varia o azimute com elevação fixa; cut="elevation" o inverso.
    """
    angles = np.asarray(angles, dtype=float)
    if cut == "azimuth":
        grid = AngleGrid(angles, np.array([fixed_angle]))
    elif cut == "elevation":
        grid = AngleGrid(np.array([fixed_angle]), angles)
    else:
        raise InvalidArgumentError(f"corte desconhecido: {cut}")
    pattern = beam_pattern(geom, np.atleast_2d(weights), grid, [frequency], reference_frequency)
    return pattern.values[:, :, 0].ravel()
