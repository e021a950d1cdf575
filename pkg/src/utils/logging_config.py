"""
Configuração simples de logging.
"""
import os
import sys

from loguru import logger

from .config import Config


def setup_logging(level: str | None = None, log_dir: str | None = None):
    """Configura logging em arquivo (com rotação) e avisos no stderr."""
    level = level or Config.LOG_LEVEL
    log_dir = log_dir or Config.LOG_DIR

    # Cria diretório de logs se não existir
    os.makedirs(log_dir, exist_ok=True)

    # Remove logger padrão
    logger.remove()

    # enqueue=True: workers de sementes escrevem no mesmo arquivo
    logger.add(
        os.path.join(log_dir, "calibration.log"),
        level=level,
        rotation="10 MB",
        enqueue=True,
    )
    logger.add(sys.stderr, level="WARNING")

    logger.info("Logging configurado")


def get_logger():
    """Retorna instância do logger."""
    return logger
