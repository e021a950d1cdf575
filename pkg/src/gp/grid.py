"""
Eixos da grade F × N × Z normalizados para [0, 1].
"""
from dataclasses import dataclass

import numpy as np

from utils.errors import InvalidArgumentError

AXIS_NAMES = ("frequency", "channel", "codebook")


def normalize_axis(values) -> np.ndarray:
    """Mapeia valores crescentes para [0, 1]; eixo de um ponto vira [0.0]."""
    values = np.asarray(values, dtype=float)
    if values.size == 1:
        return np.zeros(1)
    span = values[-1] - values[0]
    return (values - values[0]) / span


@dataclass(frozen=True)
class GridAxes:
    """Coordenadas por eixo; o produto cartesiano é achatado em ordem row-major."""

    coordinates: tuple[np.ndarray, ...]

    def __post_init__(self):
        coords = tuple(np.atleast_1d(np.asarray(c, dtype=float)) for c in self.coordinates)
        for name, c in zip(AXIS_NAMES, coords):
            if c.size == 0:
                raise InvalidArgumentError(f"eixo {name} vazio")
            if np.any(np.diff(c) <= 0):
                raise InvalidArgumentError(f"eixo {name} deve ser estritamente crescente")
        object.__setattr__(self, "coordinates", coords)

    @classmethod
    def from_grid(cls, frequencies, n_channels: int, n_codes: int) -> "GridAxes":
        """Eixos normalizados a partir das frequências (Hz) e das contagens de canais e códigos."""
        return cls((
            normalize_axis(frequencies),
            normalize_axis(np.arange(n_channels)),
            normalize_axis(np.arange(n_codes)),
        ))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.coordinates)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def ndim(self) -> int:
        return len(self.coordinates)

    def points(self, flat_indices=None) -> np.ndarray:
        """Coordenadas (m, D) dos pontos da grade (todos ou os índices achatados pedidos)."""
        if flat_indices is None:
            flat_indices = np.arange(self.size)
        multi = np.unravel_index(np.asarray(flat_indices), self.shape)
        return np.stack([c[i] for c, i in zip(self.coordinates, multi)], axis=-1)
