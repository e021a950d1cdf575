"""
Codebook ABF: 2^bits ganhos × 2^bits fases.

Ordem dos pesos: gain-major, ou seja, índice z = i_ganho · 2^bits + i_fase.
"""
from dataclasses import dataclass

import numpy as np

from utils.errors import InvalidArgumentError


@dataclass(frozen=True)
class AbfCodebook:
    bits: int
    gains: np.ndarray
    phases: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def gain_range(self) -> tuple[float, float]:
        return float(self.gains[0]), float(self.gains[-1])

    @property
    def cell_radius(self) -> float:
        """Metade da maior diagonal de uma célula polar: passo de ganho e arco de fase no ganho máximo."""
        gain_step = float(self.gains[-1] - self.gains[0]) / max(self.gains.size - 1, 1)
        arc = float(self.gains[-1]) * 2.0 * np.pi / self.phases.size
        return 0.5 * float(np.hypot(gain_step, arc))

    def split_index(self, z):
        """Índice z -> (índice do ganho, índice da fase)."""
        return np.divmod(np.asarray(z), self.phases.size)

    def nearest_indices(self, values) -> np.ndarray:
        """Quantização: índice do peso mais próximo no plano complexo (empate -> menor índice)."""
        values = np.asarray(values, dtype=complex)
        flat = values.ravel()
        indices = np.empty(flat.size, dtype=int)
        block = max(1, 2 ** 22 // self.size)
        for start in range(0, flat.size, block):
            chunk = flat[start:start + block]
            indices[start:start + block] = np.argmin(np.abs(chunk[:, None] - self.weights), axis=1)
        return indices.reshape(values.shape)


def make_abf_codebook(bits: int, gain_range: tuple[float, float] = (0.1, 1.0)) -> AbfCodebook:
    """Ganhos uniformes em [g_min, g_max] e fases uniformes em [0, 2π)."""
    if bits < 1:
        raise InvalidArgumentError(f"bits deve ser >= 1: {bits}")
    g_min, g_max = gain_range
    if not 0 < g_min < g_max:
        raise InvalidArgumentError(f"faixa de ganho inválida: [{g_min}, {g_max}]")

    levels = 2 ** bits
    gains = np.linspace(g_min, g_max, levels)
    phases = 2.0 * np.pi * np.arange(levels) / levels
    weights = (gains[:, None] * np.exp(1j * phases[None, :])).ravel()
    return AbfCodebook(bits=int(bits), gains=gains, phases=phases, weights=weights)
