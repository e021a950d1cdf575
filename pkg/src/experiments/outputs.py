"""
Escrita dos artefatos do experimento.

Todo arquivo leva o digest da configuração e a versão da ferramenta; tempos
de execução ficam só no log para que duas execuções iguais gerem arquivos
idênticos byte a byte.
"""
import json
from pathlib import Path

import pandas as pd
from loguru import logger

from metrics.report import summarize_by_fraction
from utils.config import Config

from .config import ExperimentConfig
from .runner import RunResult

FLOAT_FORMAT = "%.12g"


def _header(digest: str) -> str:
    return f"# config_digest={digest} tool_version={Config.TOOL_VERSION}\n"


def _write_csv(path: Path, frame: pd.DataFrame, digest: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(_header(digest))
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Arquivo gravado: {path}")
    return path


def write_runs_csv(output_dir, results: list[RunResult], digest: str) -> Path:
    """runs.csv: uma linha por (seed, fração)."""
    frame = pd.DataFrame([r.report.model_dump() for r in results])
    return _write_csv(Path(output_dir) / "runs.csv", frame, digest)


def write_summary_json(output_dir, config: ExperimentConfig, results: list[RunResult], digest: str) -> Path:
    """summary.json: agregados por fração e hiperparâmetros de cada execução."""
    reports = [r.report for r in results]
    summary = {
        "config_digest": digest,
        "tool_version": Config.TOOL_VERSION,
        "experiment": config.name,
        "mode": config.mode,
        "denominator_mode": reports[0].denominator_mode if reports else config.denominator_mode,
        "seeds": sorted({r.seed for r in reports}),
        "by_fraction": summarize_by_fraction(reports) if reports else [],
        "runs": [
            {"seed": r.report.seed, "fraction": r.report.fraction, "hyperparameters": r.hyperparameters}
            for r in results
        ],
    }
    path = Path(output_dir) / "summary.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n", encoding="utf-8")
    logger.info(f"Arquivo gravado: {path}")
    return path


def write_pattern_csv(output_dir, cut: str, seed: int, table: pd.DataFrame, digest: str) -> Path:
    """pattern_<corte>_seed<seed>.csv com magnitudes e dB ideal/distorcido/calibrado."""
    return _write_csv(Path(output_dir) / f"pattern_{cut}_seed{seed}.csv", table, digest)


def model_filename(seed: int, fraction: float) -> str:
    return f"model_seed{seed}_f{fraction:g}.npz"


def distortion_filename(seed: int) -> str:
    return f"distortion_seed{seed}.npz"
