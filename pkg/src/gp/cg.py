"""
Gradiente conjugado para sistemas simétricos positivos definidos dados
apenas por um produto matriz-vetor, sobre scipy.sparse.linalg.cg.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np
from loguru import logger
from scipy.sparse.linalg import LinearOperator, cg

from utils.errors import ConvergenceError, InvalidArgumentError

MAX_WARM_RESTARTS = 1


@dataclass(frozen=True)
class CGResult:
    solution: np.ndarray
    iterations: int
    residual: float
    restarts: int = 0


class _IterationCounter:
    def __init__(self):
        self.count = 0

    def __call__(self, xk):
        self.count += 1


def default_max_iters(grid_size: int) -> int:
    """Limite padrão de iterações, 10·√m com m = pontos da grade inteira."""
    return int(np.ceil(10.0 * np.sqrt(grid_size)))


def conjugate_gradient(
    matvec: Callable[[np.ndarray], np.ndarray],
    rhs: np.ndarray,
    tol: float = 1e-8,
    max_iters: int | None = None,
    x0: np.ndarray | None = None,
    grid_size: int | None = None,
) -> CGResult:
    """
    Resolve A·x = b com resíduo relativo verdadeiro ‖b − A·x‖/‖b‖ ≤ tol.

    O critério de parada do scipy usa o resíduo recursivo; no fim o resíduo
    verdadeiro é recalculado e, se não confirmar a convergência, o CG é
    retomado a partir da solução atual com as iterações que sobraram.

    Args:
        max_iters: limite total de iterações; padrão 10·√grid_size
        grid_size: tamanho da grade completa (padrão: tamanho de rhs)

    Raises:
        ConvergenceError: limite de iterações atingido sem convergência
    """
    rhs = np.asarray(rhs, dtype=float).ravel()
    if tol <= 0:
        raise InvalidArgumentError(f"tolerância do CG deve ser positiva: {tol}")
    if max_iters is None:
        max_iters = default_max_iters(grid_size if grid_size is not None else rhs.size)

    b_norm = float(np.linalg.norm(rhs))
    if b_norm == 0.0:
        return CGResult(np.zeros_like(rhs), 0, 0.0, 0)

    operator = LinearOperator((rhs.size, rhs.size), matvec=matvec, rmatvec=matvec, dtype=float)
    counter = _IterationCounter()
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=float).ravel()
    restarts = 0

    while True:
        remaining = max_iters - counter.count
        if remaining > 0:
            x, _ = cg(operator, rhs, x0=x, rtol=tol, atol=0.0, maxiter=remaining, callback=counter)
        true_residual = float(np.linalg.norm(rhs - matvec(x))) / b_norm
        if true_residual <= tol:
            logger.debug(f"CG convergiu em {counter.count} iterações (resíduo {true_residual:.2e})")
            return CGResult(x, counter.count, true_residual, restarts)
        if counter.count >= max_iters or restarts >= MAX_WARM_RESTARTS:
            break
        logger.debug(f"CG: resíduo verdadeiro {true_residual:.2e} acima da tolerância; retomando")
        restarts += 1

    raise ConvergenceError("gradiente conjugado não convergiu", residual=true_residual, iterations=counter.count)
