"""
Campos aleatórios suaves por série de Fourier truncada com coeficientes aleatórios.

Base por eixo com corte m: [1, cos(2π·1x), sin(2π·1x), ..., cos(2π·m·x), sin(2π·m·x)],
x em [0, 1]. O campo 3-D é a soma dos produtos tensoriais ponderada por
coeficientes N(0, 1) sorteados de um gerador semeado.

Normalização: em evaluate_grid o desvio padrão empírico sobre a grade avaliada
é exatamente `amplitude`. Em evaluate_points, sem grade de referência, vale o
desvio padrão no domínio contínuo [0, 1]³, calculado pela ortogonalidade da base.
"""
from dataclasses import dataclass

import numpy as np

from utils.errors import InvalidArgumentError


def fourier_basis(x, cutoff: int) -> np.ndarray:
    """Matriz (len(x), 2·cutoff + 1) com a base de Fourier avaliada em x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    columns = [np.ones_like(x)]
    for k in range(1, cutoff + 1):
        columns.append(np.cos(2.0 * np.pi * k * x))
        columns.append(np.sin(2.0 * np.pi * k * x))
    return np.stack(columns, axis=-1)


def _basis_norms(cutoff: int) -> np.ndarray:
    # média de φ² em [0, 1]
    return np.concatenate([[1.0], np.full(2 * cutoff, 0.5)])


@dataclass(frozen=True)
class SmoothField:
    fourier_coefficients: np.ndarray
    mode_cutoffs: tuple[int, ...]
    amplitude: float
    seed: int | None = None
    stream: int = 0

    @property
    def scale(self) -> float:
        """Fator que leva a série bruta para desvio padrão `amplitude` no domínio contínuo."""
        norms = _basis_norms(self.mode_cutoffs[0])
        for m in self.mode_cutoffs[1:]:
            norms = np.multiply.outer(norms, _basis_norms(m))
        oscillating = self.fourier_coefficients ** 2 * norms
        constant = float(self.fourier_coefficients.flat[0])
        variance = float(oscillating.sum()) - constant ** 2
        if variance > 0:
            return self.amplitude / np.sqrt(variance)
        # só o modo constante: |campo| = amplitude
        return self.amplitude / abs(constant) if constant != 0 else 0.0

    def _raw_grid(self, axes) -> np.ndarray:
        if len(axes) != len(self.mode_cutoffs):
            raise InvalidArgumentError(f"esperados {len(self.mode_cutoffs)} eixos, recebidos {len(axes)}")
        bases = [fourier_basis(a, m) for a, m in zip(axes, self.mode_cutoffs)]
        return np.einsum("ia,jb,kc,abc->ijk", *bases, self.fourier_coefficients, optimize=True)

    def _empirical_scale(self, raw: np.ndarray) -> float:
        spread = float(raw.std())
        # grade sem variação (só o modo constante, ou um único ponto): escala do domínio
        return self.amplitude / spread if spread > 1e-12 else self.scale

    def grid_scale(self, *axes) -> float:
        """Fator que leva a série bruta para desvio padrão empírico `amplitude` na grade."""
        return self._empirical_scale(self._raw_grid(axes))

    def evaluate_grid(self, *axes) -> np.ndarray:
        """Avalia o campo no produto cartesiano dos eixos (cada um em [0, 1])."""
        raw = self._raw_grid(axes)
        return self._empirical_scale(raw) * raw

    def evaluate_points(self, points) -> np.ndarray:
        """Avalia o campo em pontos (P, 3)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        bases = [fourier_basis(points[:, d], m) for d, m in enumerate(self.mode_cutoffs)]
        raw = np.einsum("pa,pb,pc,abc->p", *bases, self.fourier_coefficients, optimize=True)
        return self.scale * raw


def smooth_random_field_3d(
    seed: int,
    cutoffs: tuple[int, int, int],
    amplitude: float,
    stream: int = 0,
) -> SmoothField:
    """
    Sorteia um campo suave reprodutível a partir de (seed, stream, cutoffs, amplitude).

    `stream` separa campos independentes da mesma semente (ex.: partes real e imaginária).
    """
    cutoffs = tuple(int(m) for m in cutoffs)
    if len(cutoffs) != 3 or any(m < 1 for m in cutoffs):
        raise InvalidArgumentError(f"cortes de modo devem ser três inteiros >= 1: {cutoffs}")
    if not amplitude > 0:
        raise InvalidArgumentError(f"amplitude deve ser positiva: {amplitude}")

    rng = np.random.default_rng([int(seed), int(stream)])
    shape = tuple(2 * m + 1 for m in cutoffs)
    coefficients = rng.standard_normal(shape)
    return SmoothField(coefficients, cutoffs, float(amplitude), seed=int(seed), stream=int(stream))
