"""
Procedimento de calibração: plano de medição, ajuste dos GPs ℜ/ℑ e
correção de pesos DBF e ABF.
"""
from .sampling import design_sampling_plan, design_validation_mask
from .model import (
    CalibrationModel,
    DistortedWeightSource,
    FitOptions,
    MeasurementGrid,
    OracleDistortion,
    estimate_distortion,
    estimated_distortion_tensor,
    fit_calibration_model,
    simulate_measurements,
    true_distorted_weights,
)
from .correction import (
    DbfCorrection,
    calibrate_abf_nearest,
    calibrate_abf_ratio,
    calibrate_dbf,
    canonical_codebook_indices,
    quantize_weights,
    ratio_objective,
)
from .persistence import load_model, save_model

__all__ = [
    "design_sampling_plan",
    "design_validation_mask",
    "CalibrationModel",
    "DistortedWeightSource",
    "FitOptions",
    "MeasurementGrid",
    "OracleDistortion",
    "estimate_distortion",
    "estimated_distortion_tensor",
    "fit_calibration_model",
    "simulate_measurements",
    "true_distorted_weights",
    "DbfCorrection",
    "calibrate_abf_nearest",
    "calibrate_abf_ratio",
    "calibrate_dbf",
    "canonical_codebook_indices",
    "quantize_weights",
    "ratio_objective",
    "load_model",
    "save_model",
]
