"""
Plano de amostragem: quais pontos (f, n, z) da grade são medidos.
"""
import numpy as np
from loguru import logger

from utils.errors import InvalidArgumentError

MAX_REDRAWS = 100
CHANNEL_AXIS = 1

# streams dos geradores por finalidade, combinados com a seed do experimento
SAMPLING_STREAM = 3
VALIDATION_STREAM = 4


def _draw(rng, size: int, count: int) -> np.ndarray:
    return rng.choice(size, size=count, replace=False)


def design_sampling_plan(shape: tuple[int, ...], fraction: float, seed: int, broadband: bool = False) -> np.ndarray:
    """
    Máscara booleana com round(fraction·tamanho) pontos sorteados sem reposição.

    Com broadband=True sorteia pares (canal, código) e observa todas as
    frequências de cada par, como numa varredura que cobre a banda inteira.

    Sempre que fraction ≥ 1/N, garante ao menos uma observação por canal,
    sorteando de novo até 100 vezes.
    """
    shape = tuple(int(s) for s in shape)
    if not 0.0 < fraction <= 1.0:
        raise InvalidArgumentError(f"fração de amostragem fora de (0, 1]: {fraction}")

    n_channels = shape[CHANNEL_AXIS]
    unit_shape = shape[1:] if broadband else shape
    unit_size = int(np.prod(unit_shape))
    count = int(round(fraction * unit_size))
    if count < 1:
        raise InvalidArgumentError(f"fração {fraction} não gera nenhuma medição em {unit_size} pontos")

    rng = np.random.default_rng([int(seed), SAMPLING_STREAM])
    need_coverage = fraction >= 1.0 / n_channels
    for attempt in range(MAX_REDRAWS):
        units = np.zeros(unit_size, dtype=bool)
        units[_draw(rng, unit_size, count)] = True
        units = units.reshape(unit_shape)
        mask = np.broadcast_to(units, shape).copy() if broadband else units
        covered = mask.any(axis=tuple(a for a in range(mask.ndim) if a != CHANNEL_AXIS))
        if not need_coverage or covered.all():
            break
    else:
        logger.warning(
            f"Plano de amostragem (seed={seed}, fração={fraction}): "
            f"{int((~covered).sum())} canais sem observação após {MAX_REDRAWS} sorteios"
        )

    logger.debug(f"Plano de amostragem: {int(mask.sum())}/{mask.size} pontos (seed={seed}, broadband={broadband})")
    return mask


def design_validation_mask(mask: np.ndarray, fraction: float, seed: int) -> np.ndarray:
    """Fração dos pontos não observados, fixa por seed, usada só para diagnóstico."""
    mask = np.asarray(mask, dtype=bool)
    if not 0.0 <= fraction <= 1.0:
        raise InvalidArgumentError(f"fração de validação fora de [0, 1]: {fraction}")
    validation = np.zeros(mask.shape, dtype=bool)
    unobserved = np.flatnonzero(~mask.ravel())
    count = int(round(fraction * unobserved.size))
    if count == 0:
        return validation
    rng = np.random.default_rng([int(seed), VALIDATION_STREAM])
    validation.flat[rng.choice(unobserved, size=count, replace=False)] = True
    return validation
