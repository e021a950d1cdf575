#!/usr/bin/env python3
"""
Ponto de entrada principal do toolkit de calibração de arranjos de antenas.

Este arquivo é a CLI da aplicação. Verbos:
- validate: só valida o arquivo de experimento
- run: pipeline completo (distorção → medições → GP → calibração → métricas)
- fit / apply: o mesmo pipeline em duas etapas, com o modelo salvo em disco
- pattern-dump: cortes do padrão de feixe para gráficos

Códigos de saída: 0 ok, 1 erro geral, 2 erro de configuração, 3 falha numérica.
"""
import os
import sys
from functools import wraps
from pathlib import Path

# Adiciona o diretório src ao path para permitir imports absolutos dos pacotes
sys.path.insert(0, os.path.dirname(__file__))

import click
from loguru import logger
from rich.console import Console
from rich.table import Table

from utils import Config, setup_logging
from utils.errors import CalibrationError, ConfigError, NumericalFailureError
from calibration.persistence import load_model, save_model
from impairments.distortion import DistortionTensor
from experiments import (
    ExperimentRunner,
    config_digest,
    distortion_filename,
    load_experiment_config,
    model_filename,
    write_pattern_csv,
    write_runs_csv,
    write_summary_json,
)
from metrics.report import summarize_by_fraction

EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

console = Console()


def parse_seeds(text: str | None) -> list[int] | None:
    """'0,1,2' ou '0-19' (combináveis: '0-4,10')."""
    if not text:
        return None
    seeds: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                start, end = (int(v) for v in part.split("-", 1))
                seeds.extend(range(start, end + 1))
            elif part:
                seeds.append(int(part))
    except ValueError as e:
        raise ConfigError(f"--seeds:0: lista de seeds inválida '{text}': {e}") from e
    if not seeds or any(s < 0 for s in seeds):
        raise ConfigError(f"--seeds:0: lista de seeds inválida '{text}'")
    return sorted(set(seeds))


def handle_errors(command):
    """Traduz as famílias de erro em códigos de saída, registrando no log antes de sair."""

    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ConfigError as e:
            logger.error(f"Erro de configuração: {e}")
            click.echo(f"ERRO de configuração:\n{e}", err=True)
            sys.exit(EXIT_CONFIG)
        except NumericalFailureError as e:
            logger.error(f"Falha numérica: {e}")
            click.echo(f"ERRO numérico: {e}", err=True)
            sys.exit(EXIT_NUMERICAL)
        except CalibrationError as e:
            logger.error(f"Erro: {e}")
            click.echo(f"ERRO: {e}", err=True)
            sys.exit(EXIT_FAILURE)

    return wrapper


def experiment_options(command):
    """Flags comuns a todos os verbos que executam o experimento."""
    options = [
        click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
                     help="Arquivo JSON do experimento"),
        click.option("--seeds", default=None, help="Seeds a executar, ex.: '0,1,2' ou '0-19'"),
        click.option("--out", "out", default=None, help="Diretório de saída (sobrescreve config e ambiente)"),
        click.option("--denominator", type=click.Choice(["paper_sum", "cell_count"]), default=None,
                     help="Denominador principal do BPA"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _prepare(config_path, seeds, out, denominator):
    config = load_experiment_config(config_path)
    output_dir = Path(Config.resolve_output_dir(config.output_dir, out))
    if not Config.validar(str(output_dir)):
        raise ConfigError(f"{config_path}:0: output_dir: diretório de saída inválido: {output_dir}")
    runner = ExperimentRunner(config, denominator)
    return config, runner, parse_seeds(seeds) or list(config.seeds), output_dir


def _saved_distortion(runner, models_dir: Path, seed: int) -> DistortionTensor:
    """Distorção gravada por `fit`, se existir; senão regenera pela seed."""
    path = models_dir / distortion_filename(seed)
    if not path.exists():
        return runner.distortion(seed)
    distortion = DistortionTensor.load(path)
    if distortion.values.shape != runner.axes.shape:
        raise CalibrationError(f"distorção em {path} tem grade {distortion.values.shape}, esperado {runner.axes.shape}")
    return distortion


def _print_summary(results):
    table = Table(title="Resumo por fração de amostragem (medianas)")
    for column in ("fração", "execuções", "BPA distorcido", "BPA calibrado", "razão", "NRMSE ℜ", "NRMSE ℑ"):
        table.add_column(column, justify="right")

    def fmt(metrics, name):
        value = metrics[name]["median"]
        return "-" if value is None else f"{value:.4g}"

    for row in summarize_by_fraction([r.report for r in results]):
        m = row["metrics"]
        table.add_row(
            f"{row['fraction']:g}", str(row["runs"]), fmt(m, "bpa_distorted"), fmt(m, "bpa_calibrated"),
            fmt(m, "improvement_ratio"), fmt(m, "gp_nrmse_re"), fmt(m, "gp_nrmse_im"),
        )
    console.print(table)


def _write_reports(config, runner, results, output_dir):
    write_runs_csv(output_dir, results, runner.digest)
    write_summary_json(output_dir, config, results, runner.digest)
    _print_summary(results)


@click.group()
@click.option("--log-level", default=None, help="Nível de log (padrão: LOG_LEVEL do ambiente)")
def cli(log_level):
    """Calibração de arranjos de antenas por regressão GP de Kronecker."""
    setup_logging(level=log_level)


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@handle_errors
def validate(config_path):
    """Valida o arquivo de experimento sem executar nada."""
    config = load_experiment_config(config_path)
    F, N, Z = config.grid_shape
    console.print(f"[green]OK[/green] {config_path}: '{config.name}' ({config.mode})")
    console.print(f"grade F×N×Z = {F}×{N}×{Z}, seeds={list(config.seeds)}, frações={config.measurement.fractions}")
    console.print(f"config_digest={config_digest(config)}")


@cli.command()
@experiment_options
@click.option("--jobs", default=Config.JOBS, show_default=True, type=click.IntRange(min=1),
              help="Processos paralelos (uma seed por processo)")
@handle_errors
def run(config_path, seeds, out, denominator, jobs):
    """Executa o pipeline completo para todas as (seed, fração)."""
    config, runner, seeds, output_dir = _prepare(config_path, seeds, out, denominator)
    results = runner.run(seeds, jobs)
    _write_reports(config, runner, results, output_dir)


@cli.command()
@experiment_options
@handle_errors
def fit(config_path, seeds, out, denominator):
    """Ajusta e salva um modelo de calibração por (seed, fração), mais a distorção verdadeira de cada seed."""
    config, runner, seeds, output_dir = _prepare(config_path, seeds, out, denominator)
    output_dir.mkdir(parents=True, exist_ok=True)
    for seed in seeds:
        distortion = runner.distortion(seed)
        distortion.save(output_dir / distortion_filename(seed))
        for fraction in config.measurement.fractions:
            model = runner.fit(seed, fraction, distortion)
            save_model(model, output_dir / model_filename(seed, fraction))
    console.print(f"[green]Modelos salvos em {output_dir}[/green]")


@cli.command()
@experiment_options
@click.option("--models", "models_dir", default=None, help="Diretório dos modelos (padrão: diretório de saída)")
@handle_errors
def apply(config_path, seeds, out, denominator, models_dir):
    """Aplica modelos salvos por `fit` e gera os mesmos relatórios de `run`."""
    config, runner, seeds, output_dir = _prepare(config_path, seeds, out, denominator)
    models_dir = Path(models_dir) if models_dir else output_dir
    results = []
    for seed in seeds:
        distortion = _saved_distortion(runner, models_dir, seed)
        for fraction in config.measurement.fractions:
            path = models_dir / model_filename(seed, fraction)
            if not path.exists():
                raise CalibrationError(f"modelo não encontrado: {path} (rode `fit` antes)")
            results.append(runner.apply(seed, fraction, load_model(path), distortion))
    results.sort(key=lambda r: (r.report.seed, r.report.fraction))
    _write_reports(config, runner, results, output_dir)


@cli.command("pattern-dump")
@experiment_options
@click.option("--fraction", type=float, default=None, help="Fração de amostragem (padrão: a maior da config)")
@handle_errors
def pattern_dump(config_path, seeds, out, denominator, fraction):
    """Cortes de azimute e elevação (ideal, distorcido, calibrado) na frequência central."""
    config, runner, seeds, output_dir = _prepare(config_path, seeds, out, denominator)
    fraction = fraction if fraction is not None else max(config.measurement.fractions)
    for seed in seeds:
        saved = output_dir / model_filename(seed, fraction)
        model = load_model(saved) if saved.exists() else None
        distortion = _saved_distortion(runner, output_dir, seed)
        for cut, table in runner.pattern_tables(seed, fraction, model, distortion).items():
            write_pattern_csv(output_dir, cut, seed, table, runner.digest)
    console.print(f"[green]Cortes de padrão gravados em {output_dir}[/green]")


def main():
    cli()


# Ponto de entrada quando executado diretamente
if __name__ == "__main__":
    main()
