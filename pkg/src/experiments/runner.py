"""
Executor de Experimentos (ExperimentRunner)

Orquestra o pipeline completo para cada par (seed, fração):

1. Gera a distorção verdadeira d(f, n, z) a partir da seed
2. Sintetiza os pesos desejados (DBF por frequência, ABF na frequência central)
3. Sorteia o plano de medição e simula as medições esparsas
4. Ajusta o modelo de calibração (GPs ℜ/ℑ de Kronecker)
5. Aplica a calibração e calcula os padrões ideal, distorcido e calibrado
6. Emite o relatório da execução (BPA, razão de melhoria, NRMSE)

As seeds são unidades independentes e podem rodar em processos separados;
dentro de uma seed o trabalho é determinístico e single-thread.
"""
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import pandas as pd
from loguru import logger

from antenna.beamsynth import Sector, SynthesisSpec, synthesize_abf_weights, synthesize_wideband_weights
from antenna.geometry import AngleGrid, ArrayGeometry, BeamPattern, beam_pattern, make_uniform_rect_array, pattern_cut
from calibration.correction import calibrate_abf_nearest, calibrate_abf_ratio, calibrate_dbf
from calibration.model import (
    VALIDATION_MEASUREMENT_STREAM,
    CalibrationModel,
    DistortedWeightSource,
    FitOptions,
    fit_calibration_model,
    simulate_measurements,
    true_distorted_weights,
)
from calibration.sampling import design_sampling_plan, design_validation_mask
from gp.grid import GridAxes
from impairments.codebook import AbfCodebook, make_abf_codebook
from impairments.distortion import DistortionTensor, generate_distortion, realized_weights
from metrics.bpa import DENOMINATOR_MODES, bpa_rmse, nrmse
from metrics.report import CalibrationReport, improvement_ratio
from utils.errors import DegenerateNormalizationError

from .config import ExperimentConfig, config_digest

DB_FLOOR = 1e-12


@dataclass(frozen=True)
class AppliedWeights:
    """Pesos por frequência (F, N) nos três cenários comparados."""

    ideal: np.ndarray
    distorted: np.ndarray
    calibrated: np.ndarray


@dataclass(frozen=True)
class RunResult:
    report: CalibrationReport
    hyperparameters: dict = field(default_factory=dict)


class ExperimentRunner:
    """
    Orquestrador do experimento de calibração.

    Guarda os objetos que não dependem da seed (geometria, codebook, eixos,
    pesos desejados) e executa o pipeline por (seed, fração).

    Atributos:
        config: configuração validada do experimento
        denominator_mode: denominador principal do BPA
        digest: digest da configuração, gravado em todos os relatórios
    """

    def __init__(self, config: ExperimentConfig, denominator_mode: str | None = None):
        self.config = config
        self.denominator_mode = denominator_mode or config.denominator_mode
        self.digest = config_digest(config)

        self.geometry: ArrayGeometry = make_uniform_rect_array(config.array.nx, config.array.ny, config.array.spacing)
        self.codebook: AbfCodebook = make_abf_codebook(
            config.codebook.bits, (config.codebook.gain_min, config.codebook.gain_max)
        )
        self.frequencies = config.frequencies
        self.axes = GridAxes.from_grid(self.frequencies, self.geometry.n_elements, self.codebook.size)
        self.synthesis = SynthesisSpec(
            ue_direction=tuple(config.synthesis.ue_direction),
            interference_sectors=tuple(Sector(tuple(s.azimuth), tuple(s.elevation)) for s in config.synthesis.sectors),
            regularization=config.synthesis.regularization,
            density=config.synthesis.density,
        )
        self.angles = AngleGrid.uniform(config.pattern.angle_step_deg)
        self.pattern_indices = np.unique(
            np.round(np.linspace(0, self.frequencies.size - 1, min(config.pattern.n_frequencies, self.frequencies.size)))
        ).astype(int)
        self.fit_options = FitOptions(
            noise_variance=config.gp.noise_variance,
            learn_noise=config.gp.learn_noise,
            optimize=config.gp.optimize,
            hyper_strategy=config.gp.hyper_strategy,
            hyper_subsample=config.gp.hyper_subsample,
            hyper_window_z=config.gp.hyper_window_z,
            restarts=config.gp.restarts,
            max_iters=config.gp.max_iters,
            bounds=config.gp.bounds(),
            cg_tol=config.gp.cg_tol,
            cg_max_iters=config.gp.cg_max_iters,
            solver=config.gp.solver,
        )

        logger.info(
            f"Experimento '{config.name}' ({config.mode}): grade {config.grid_shape}, "
            f"digest={self.digest}, denominador={self.denominator_mode}"
        )

    @property
    def center_index(self) -> int:
        return self.frequencies.size // 2

    @cached_property
    def desired_weights(self) -> np.ndarray:
        """
        Pesos desejados (F, N) sem distorção.

        DBF: síntese LCMV por frequência. ABF: um único vetor, sintetizado na
        frequência central e reescalado para a faixa de ganho do codebook,
        replicado na banda.
        """
        if self.config.mode == "DBF":
            f_ref = self.config.array.reference_frequency_hz
            return synthesize_wideband_weights(self.geometry, self.frequencies, self.synthesis, f_ref)
        _, continuous = self.abf_weights
        return np.broadcast_to(continuous, (self.frequencies.size, continuous.size)).copy()

    @cached_property
    def abf_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """(códigos quantizados sem calibração, pesos contínuos) na frequência central."""
        return synthesize_abf_weights(
            self.geometry, self.frequencies[self.center_index], self.synthesis, self.codebook,
            self.config.array.reference_frequency_hz,
        )

    @property
    def abf_nrmse_threshold(self) -> float:
        """NRMSE abaixo do qual a seleção ABF não deve piorar o BPA (padrão: raio da célula / 4)."""
        configured = self.config.abf.nrmse_threshold
        return configured if configured is not None else self.codebook.cell_radius / 4.0

    def distortion(self, seed: int) -> DistortionTensor:
        re, im = self.config.distortion.amplitudes()
        return generate_distortion(seed, self.axes, re, im, self.config.distortion.cutoffs, self.frequencies)

    def fit(self, seed: int, fraction: float, distortion: DistortionTensor | None = None) -> CalibrationModel:
        """Plano de medição → medições simuladas → modelo de calibração ajustado."""
        distortion = distortion if distortion is not None else self.distortion(seed)
        measurement = self.config.measurement
        mask = design_sampling_plan(self.axes.shape, fraction, seed, measurement.broadband_sweeps)
        grid = simulate_measurements(distortion, self.codebook, mask, measurement.noise_std, seed)

        validation = None
        if measurement.validation_fraction > 0:
            validation_mask = design_validation_mask(mask, measurement.validation_fraction, seed)
            if validation_mask.any():
                validation = simulate_measurements(
                    distortion, self.codebook, validation_mask, measurement.noise_std, seed,
                    stream=VALIDATION_MEASUREMENT_STREAM,
                )

        return fit_calibration_model(
            grid,
            self.config.kernels.to_kernels(),
            self.config.mode,
            self.codebook,
            frequencies=self.frequencies,
            options=self.fit_options,
            validation=validation,
            seed=seed,
        )

    def applied_weights(self, source: DistortedWeightSource, distortion: DistortionTensor) -> AppliedWeights:
        """Pesos efetivamente irradiados com e sem calibração."""
        desired = self.desired_weights
        if self.config.mode == "DBF":
            correction = calibrate_dbf(desired, source)
            distorted = realized_weights(desired, correction.indices, distortion)
            calibrated = realized_weights(correction.weights, correction.indices, distortion)
            return AppliedWeights(desired, distorted, calibrated)

        broadband = desired[self.center_index]
        plain, _ = self.abf_weights
        abf = self.config.abf
        if abf.selection == "ratio":
            selected = calibrate_abf_ratio(broadband, source, abf.ratio_method, abf.evaluation)
        else:
            selected = calibrate_abf_nearest(broadband, source, abf.evaluation)
        distorted = realized_weights(self.codebook.weights[plain], plain, distortion)
        calibrated = realized_weights(self.codebook.weights[selected], selected, distortion)
        return AppliedWeights(desired, distorted, calibrated)

    def patterns(self, weights: AppliedWeights) -> tuple[BeamPattern, BeamPattern, BeamPattern]:
        f_ref = self.config.array.reference_frequency_hz
        freqs = self.frequencies[self.pattern_indices]
        return tuple(
            beam_pattern(self.geometry, w[self.pattern_indices], self.angles, freqs, f_ref)
            for w in (weights.ideal, weights.distorted, weights.calibrated)
        )

    def apply(self, seed: int, fraction: float, model: CalibrationModel,
              distortion: DistortionTensor | None = None) -> RunResult:
        """Calibração → padrões → relatório da execução."""
        distortion = distortion if distortion is not None else self.distortion(seed)
        ideal, distorted, calibrated = self.patterns(self.applied_weights(model, distortion))

        bpa = {
            mode: tuple(bpa_rmse(ideal, p, mode) for p in (distorted, calibrated))
            for mode in DENOMINATOR_MODES
        }
        bpa_d, bpa_c = bpa[self.denominator_mode]

        truth = true_distorted_weights(distortion, self.codebook)
        estimate = model.distorted_weights()
        validation = model.validation or {}
        hyper = model.hyperparameters

        report = CalibrationReport(
            seed=seed,
            fraction=fraction,
            mode=self.config.mode,
            denominator_mode=self.denominator_mode,
            bpa_distorted=bpa_d,
            bpa_calibrated=bpa_c,
            bpa_distorted_paper_sum=bpa["paper_sum"][0],
            bpa_calibrated_paper_sum=bpa["paper_sum"][1],
            bpa_distorted_cell_count=bpa["cell_count"][0],
            bpa_calibrated_cell_count=bpa["cell_count"][1],
            improvement_ratio=improvement_ratio(bpa_d, bpa_c),
            gp_nrmse_re=_nrmse_or_none(truth.real, estimate.real),
            gp_nrmse_im=_nrmse_or_none(truth.imag, estimate.imag),
            heldout_nrmse_re=validation.get("nrmse_re"),
            heldout_nrmse_im=validation.get("nrmse_im"),
            cg_iterations_re=int(hyper.get("re", {}).get("cg_iterations", 0)),
            cg_iterations_im=int(hyper.get("im", {}).get("cg_iterations", 0)),
            noise_variance_re=hyper.get("re", {}).get("noise_variance"),
            noise_variance_im=hyper.get("im", {}).get("noise_variance"),
            config_digest=self.digest,
        )
        self.check_abf_guard(report)
        return RunResult(report, hyper)

    def check_abf_guard(self, report: CalibrationReport) -> bool:
        """
        Avisa quando a seleção ABF pelo mais próximo piorou o BPA mesmo com o
        GP abaixo do limiar de NRMSE. Devolve True se o aviso foi emitido.
        """
        if self.config.mode != "ABF" or self.config.abf.selection != "nearest":
            return False
        errors = [v for v in (report.gp_nrmse_re, report.gp_nrmse_im) if v is not None]
        if not errors or max(errors) >= self.abf_nrmse_threshold:
            return False
        if report.bpa_calibrated <= report.bpa_distorted:
            return False
        logger.warning(
            f"seed={report.seed} fração={report.fraction}: seleção ABF aumentou o BPA "
            f"({report.bpa_distorted:.4g} → {report.bpa_calibrated:.4g}) com NRMSE {max(errors):.3g} "
            f"abaixo do limiar {self.abf_nrmse_threshold:.3g}"
        )
        return True

    def run_single(self, seed: int, fraction: float) -> RunResult:
        started = time.perf_counter()
        distortion = self.distortion(seed)
        model = self.fit(seed, fraction, distortion)
        result = self.apply(seed, fraction, model, distortion)
        logger.info(
            f"seed={seed} fração={fraction}: BPA {result.report.bpa_distorted:.4g} → "
            f"{result.report.bpa_calibrated:.4g} em {time.perf_counter() - started:.1f}s"
        )
        return result

    def run_seed(self, seed: int) -> list[RunResult]:
        return [self.run_single(seed, fraction) for fraction in self.config.measurement.fractions]

    def run(self, seeds=None, jobs: int = 1) -> list[RunResult]:
        """Executa todas as (seed, fração); com jobs > 1 distribui as seeds entre processos."""
        seeds = list(seeds if seeds is not None else self.config.seeds)
        started = time.perf_counter()
        if jobs > 1 and len(seeds) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [
                    pool.submit(_run_seed_worker, self.config.model_dump(mode="json"), self.denominator_mode, seed)
                    for seed in seeds
                ]
                results = [r for future in futures for r in future.result()]
        else:
            results = [r for seed in seeds for r in self.run_seed(seed)]
        results.sort(key=lambda r: (r.report.seed, r.report.fraction))
        logger.info(f"{len(results)} execuções concluídas em {time.perf_counter() - started:.1f}s")
        return results

    def pattern_tables(self, seed: int, fraction: float, model: CalibrationModel | None = None,
                       distortion: DistortionTensor | None = None) -> dict[str, pd.DataFrame]:
        """
        Cortes de azimute e elevação na frequência central passando pela direção do UE.

        Returns:
            {"azimuth": DataFrame, "elevation": DataFrame} com magnitudes e dB
        """
        distortion = distortion if distortion is not None else self.distortion(seed)
        model = model if model is not None else self.fit(seed, fraction, distortion)
        weights = self.applied_weights(model, distortion)
        c = self.center_index
        frequency = self.frequencies[c]
        f_ref = self.config.array.reference_frequency_hz
        ue_az, ue_el = self.synthesis.ue_direction
        angles = np.arange(0.0, 180.0 + 1e-9, self.config.pattern.cut_step_deg)

        tables = {}
        for cut, fixed in (("azimuth", ue_el), ("elevation", ue_az)):
            columns = {"angle_deg": angles}
            for label, w in (("ideal", weights.ideal), ("distorted", weights.distorted), ("calibrated", weights.calibrated)):
                columns[label] = pattern_cut(self.geometry, w[c], frequency, cut, fixed, angles, f_ref)
            for label in ("ideal", "distorted", "calibrated"):
                columns[f"{label}_db"] = 20.0 * np.log10(np.maximum(columns[label], DB_FLOOR))
            tables[cut] = pd.DataFrame(columns)
        return tables


def _nrmse_or_none(truth, estimate):
    try:
        return nrmse(truth, estimate)
    except DegenerateNormalizationError:
        return None


def _run_seed_worker(config_data: dict, denominator_mode: str, seed: int) -> list[RunResult]:
    runner = ExperimentRunner(ExperimentConfig.model_validate(config_data), denominator_mode)
    return runner.run_seed(seed)
