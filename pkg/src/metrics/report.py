"""
Relatório por execução (seed, fração) e agregação por mediana/IQR.
"""
import math
from typing import Optional

import pandas as pd
from pydantic import BaseModel, Field, model_validator

from utils.errors import InvalidArgumentError

METRIC_FIELDS = (
    "bpa_distorted",
    "bpa_calibrated",
    "bpa_distorted_paper_sum",
    "bpa_calibrated_paper_sum",
    "bpa_distorted_cell_count",
    "bpa_calibrated_cell_count",
    "improvement_ratio",
    "gp_nrmse_re",
    "gp_nrmse_im",
    "heldout_nrmse_re",
    "heldout_nrmse_im",
)


def improvement_ratio(bpa_distorted: float, bpa_calibrated: float) -> Optional[float]:
    """BPA(distorcido)/BPA(calibrado); indefinido (None) quando o calibrado é zero."""
    return bpa_distorted / bpa_calibrated if bpa_calibrated > 0 else None


class CalibrationReport(BaseModel):
    """Métricas de uma execução do pipeline."""

    seed: int
    fraction: float
    mode: str
    denominator_mode: str = "paper_sum"
    bpa_distorted: float = Field(ge=0)
    bpa_calibrated: float = Field(ge=0)
    bpa_distorted_paper_sum: float = Field(ge=0)
    bpa_calibrated_paper_sum: float = Field(ge=0)
    bpa_distorted_cell_count: float = Field(ge=0)
    bpa_calibrated_cell_count: float = Field(ge=0)
    improvement_ratio: Optional[float] = Field(default=None, ge=0)
    gp_nrmse_re: Optional[float] = Field(default=None, ge=0)
    gp_nrmse_im: Optional[float] = Field(default=None, ge=0)
    heldout_nrmse_re: Optional[float] = Field(default=None, ge=0)
    heldout_nrmse_im: Optional[float] = Field(default=None, ge=0)
    cg_iterations_re: int = 0
    cg_iterations_im: int = 0
    noise_variance_re: Optional[float] = None
    noise_variance_im: Optional[float] = None
    config_digest: str = ""

    @model_validator(mode="after")
    def _check_consistency(self):
        for name in METRIC_FIELDS:
            value = getattr(self, name)
            if value is not None and not math.isfinite(value):
                raise ValueError(f"{name} não finito: {value}")
        expected = improvement_ratio(self.bpa_distorted, self.bpa_calibrated)
        if (expected is None) != (self.improvement_ratio is None) or (
            expected is not None and not math.isclose(expected, self.improvement_ratio, rel_tol=1e-12)
        ):
            raise ValueError("improvement_ratio inconsistente com os BPAs")
        return self


def summarize(reports: list[CalibrationReport], fields=METRIC_FIELDS) -> dict:
    """
    Mediana, quartis e IQR de cada métrica sobre as execuções.

    Campos ausentes (None) são ignorados; métrica sem nenhum valor sai com count=0.
    """
    if not reports:
        raise InvalidArgumentError("summarize precisa de ao menos um relatório")
    frame = pd.DataFrame([r.model_dump() for r in reports])
    summary = {}
    for name in fields:
        column = pd.to_numeric(frame[name], errors="coerce").dropna()
        if column.empty:
            summary[name] = {"count": 0, "median": None, "q25": None, "q75": None, "iqr": None}
            continue
        q25, median, q75 = (float(v) for v in column.quantile([0.25, 0.5, 0.75]))
        summary[name] = {"count": int(column.size), "median": median, "q25": q25, "q75": q75, "iqr": q75 - q25}
    return summary


def summarize_by_fraction(reports: list[CalibrationReport]) -> list[dict]:
    """Um agregado por fração de amostragem, em ordem crescente de fração."""
    fractions = sorted({r.fraction for r in reports})
    return [
        {"fraction": fraction, "runs": sum(r.fraction == fraction for r in reports),
         "metrics": summarize([r for r in reports if r.fraction == fraction])}
        for fraction in fractions
    ]
