"""
Modelo multiplicativo de distorção: w^d = w · d(f, n, z).

O produto v·g do modelo de canal é tratado como um único fator complexo
d = (1 + campo_re) + j·campo_im, avaliado sobre a grade F × N × Z com o
índice do codebook (ordem gain-major) como terceira coordenada.
"""
from dataclasses import dataclass

import numpy as np
from loguru import logger

from gp.grid import GridAxes
from utils.errors import InvalidArgumentError

from .fields import smooth_random_field_3d

DUMP_FORMAT_VERSION = 1


@dataclass(frozen=True)
class DistortionTensor:
    """Valores complexos (F, N, Z) sobre os eixos da grade."""

    values: np.ndarray
    axes: GridAxes
    frequencies: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.axes.shape:
            raise InvalidArgumentError(f"tensor {self.values.shape} não bate com a grade {self.axes.shape}")
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgumentError("tensor de distorção com valores não finitos")

    @property
    def max_deviation(self) -> float:
        """max |d − 1| sobre a grade."""
        return float(np.max(np.abs(self.values - 1.0)))

    def save(self, path: str):
        """Dump binário (.npz): values, coordenadas normalizadas, frequências em Hz e versão."""
        np.savez_compressed(
            path,
            format_version=DUMP_FORMAT_VERSION,
            values=self.values,
            frequencies=self.frequencies,
            **{f"axis_{i}": c for i, c in enumerate(self.axes.coordinates)},
        )

    @classmethod
    def load(cls, path: str) -> "DistortionTensor":
        with np.load(path) as data:
            if int(data["format_version"]) != DUMP_FORMAT_VERSION:
                raise InvalidArgumentError(f"versão de dump desconhecida: {int(data['format_version'])}")
            axes = GridAxes(tuple(data[f"axis_{i}"] for i in range(3)))
            return cls(data["values"], axes, data["frequencies"])


def generate_distortion(
    seed: int,
    axes: GridAxes,
    re_amplitude: float,
    im_amplitude: float,
    cutoffs: tuple[int, int, int],
    frequencies=None,
) -> DistortionTensor:
    """
    d(f, n, z) = (1 + campo_re) + j·campo_im com dois campos suaves independentes.

    Amplitude zero desliga o campo correspondente (d ≡ 1 quando ambas são zero).
    """
    if re_amplitude < 0 or im_amplitude < 0:
        raise InvalidArgumentError("amplitudes de distorção não podem ser negativas")

    values = np.ones(axes.shape, dtype=complex)
    if re_amplitude > 0:
        values += smooth_random_field_3d(seed, cutoffs, re_amplitude, stream=0).evaluate_grid(*axes.coordinates)
    if im_amplitude > 0:
        values += 1j * smooth_random_field_3d(seed, cutoffs, im_amplitude, stream=1).evaluate_grid(*axes.coordinates)

    if frequencies is None:
        frequencies = axes.coordinates[0].copy()
    tensor = DistortionTensor(values, axes, np.asarray(frequencies, dtype=float))
    logger.debug(f"Distorção gerada (seed={seed}): grade {axes.shape}, max|d-1|={tensor.max_deviation:.4f}")
    return tensor


def distort_weights(weights, distortion) -> np.ndarray:
    """Produto elemento a elemento w · d."""
    weights = np.asarray(weights, dtype=complex)
    distortion = np.asarray(distortion, dtype=complex)
    if weights.shape != distortion.shape:
        raise InvalidArgumentError(f"shapes incompatíveis: pesos {weights.shape}, distorção {distortion.shape}")
    return weights * distortion


def realized_weights(codebook_weights, indices, distortion: DistortionTensor) -> np.ndarray:
    """
    Pesos efetivamente irradiados (F, N) quando o canal n recebe o peso comandado.

    Args:
        codebook_weights: pesos comandados, (N,) para ABF ou (F, N) para DBF.
        indices: índice z por canal (N,) ou por (f, n) (F, N) onde d é avaliado.
    """
    indices = np.asarray(indices)
    F, N, _ = distortion.values.shape
    if indices.ndim == 1:
        indices = np.broadcast_to(indices, (F, N))
    f_idx, n_idx = np.meshgrid(np.arange(F), np.arange(N), indexing="ij")
    d = distortion.values[f_idx, n_idx, indices]
    commanded = np.broadcast_to(np.asarray(codebook_weights, dtype=complex), (F, N))
    return distort_weights(commanded, d)
