"""
Experimentos de calibração: schema de configuração, executor do pipeline e
escrita dos artefatos.
"""
from .config import ExperimentConfig, config_digest, load_experiment_config, parse_experiment_config
from .runner import ExperimentRunner, RunResult
from .outputs import distortion_filename, model_filename, write_pattern_csv, write_runs_csv, write_summary_json

__all__ = [
    "ExperimentConfig",
    "config_digest",
    "load_experiment_config",
    "parse_experiment_config",
    "ExperimentRunner",
    "RunResult",
    "distortion_filename",
    "model_filename",
    "write_pattern_csv",
    "write_runs_csv",
    "write_summary_json",
]
