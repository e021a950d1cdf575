"""
Hierarquia de exceções do toolkit.

A CLI traduz as famílias em códigos de saída: ConfigError -> 2,
NumericalFailureError -> 3, demais CalibrationError -> 1.
"""


class CalibrationError(Exception):
    """Erro base do toolkit."""


class InvalidArgumentError(CalibrationError, ValueError):
    """Argumento fora do domínio da operação."""


class ConfigError(CalibrationError):
    """Arquivo de experimento ilegível ou fora do schema."""


class ModelStateError(CalibrationError, RuntimeError):
    """Operação pedida sobre um modelo ainda não ajustado."""


class NumericalFailureError(CalibrationError):
    """Falha numérica irrecuperável (fatoração, sistema singular)."""

    def __init__(self, message: str, module: str = ""):
        self.module = module
        prefix = f"[{module}] " if module else ""
        super().__init__(f"{prefix}{message}")


class ConvergenceError(NumericalFailureError):
    """Gradiente conjugado não convergiu dentro do limite de iterações."""

    def __init__(self, message: str, residual: float, iterations: int, module: str = "gp.cg"):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (resíduo={residual:.3e}, iterações={iterations})", module=module)


class DegenerateDistortionError(NumericalFailureError):
    """Distorção estimada próxima de zero: a correção DBF não é invertível."""


class DegenerateNormalizationError(InvalidArgumentError):
    """NRMSE pedido sobre uma superfície de referência constante."""
