"""
Configuração de ambiente do toolkit de calibração.

Os parâmetros do experimento vivem no arquivo JSON (ver experiments.config);
aqui ficam apenas os ajustes de execução que podem vir do ambiente ou do .env.
"""
import os
from dotenv import load_dotenv

from .version import __version__

# Carrega variáveis de ambiente do arquivo .env no diretório raiz
load_dotenv(dotenv_path=os.path.join(os.path.dirname(__file__), '..', '..', '.env'))


class Config:
    """Configuração básica da aplicação."""

    TOOL_VERSION: str = __version__

    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_DIR: str = os.getenv("LOG_DIR", "logs")

    # Sobrescreve o output_dir do arquivo de experimento quando definido
    OUTPUT_DIR: str = os.getenv("CALIBRATION_OUTPUT_DIR", "")
    DEFAULT_OUTPUT_DIR: str = "./outputs"

    JOBS: int = int(os.getenv("CALIBRATION_JOBS", "1"))

    @classmethod
    def resolve_output_dir(cls, config_value: str | None = None, cli_value: str | None = None) -> str:
        """Ordem de precedência: flag --out, variável de ambiente, arquivo de config, padrão."""
        return cli_value or cls.OUTPUT_DIR or config_value or cls.DEFAULT_OUTPUT_DIR

    @classmethod
    def validar(cls, output_dir: str | None = None) -> bool:
        """Verifica se o diretório de saída pode ser criado."""
        target = output_dir or cls.resolve_output_dir()
        try:
            os.makedirs(target, exist_ok=True)
        except OSError as e:
            print(f"ERRO: não foi possível criar o diretório de saída {target}: {e}")
            return False
        return True
