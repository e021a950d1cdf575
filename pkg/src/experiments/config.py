"""
Schema do arquivo de experimento (JSON) e carregamento com erros ancorados
em linha.

Exemplo mínimo:
    {
      "schema_version": 1,
      "name": "dbf_small",
      "mode": "DBF",
      "array": {"nx": 16, "ny": 16},
      "seeds": [0, 1, 2]
    }
Todos os outros blocos têm valores padrão.
"""
import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveFloat, PositiveInt, ValidationError, field_validator, model_validator

from gp.kernels import Kernel, RationalQuadratic, SpectralMixture
from utils.errors import ConfigError

SCHEMA_VERSION = 1
REGIME_AMPLITUDES = {"small": 0.05, "large": 0.2}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ArrayConfig(_Section):
    nx: PositiveInt = 16
    ny: PositiveInt = 16
    spacing: PositiveFloat = 0.5
    reference_frequency_hz: PositiveFloat = 3.5e9


class BandConfig(_Section):
    f_min_hz: PositiveFloat = 3.4e9
    f_max_hz: PositiveFloat = 3.6e9
    step_hz: PositiveFloat = 3.125e6

    @model_validator(mode="after")
    def _ordered(self):
        if self.f_max_hz < self.f_min_hz:
            raise ValueError("f_max_hz deve ser >= f_min_hz")
        return self

    @property
    def frequencies(self) -> np.ndarray:
        count = int(round((self.f_max_hz - self.f_min_hz) / self.step_hz)) + 1
        return self.f_min_hz + self.step_hz * np.arange(count)


class CodebookConfig(_Section):
    bits: int = Field(default=1, ge=1, le=8)
    gain_min: PositiveFloat = 0.1
    gain_max: PositiveFloat = 1.0

    @model_validator(mode="after")
    def _gain_range(self):
        if not self.gain_min < self.gain_max:
            raise ValueError("gain_min deve ser menor que gain_max")
        return self

    @property
    def size(self) -> int:
        return 4 ** self.bits


class DistortionConfig(_Section):
    regime: Literal["small", "large", "custom"] = "large"
    re_amplitude: Optional[float] = Field(default=None, ge=0)
    im_amplitude: Optional[float] = Field(default=None, ge=0)
    cutoffs: tuple[PositiveInt, PositiveInt, PositiveInt] = (2, 3, 2)

    @model_validator(mode="after")
    def _custom_amplitudes(self):
        if self.regime == "custom" and (self.re_amplitude is None or self.im_amplitude is None):
            raise ValueError("regime 'custom' exige re_amplitude e im_amplitude")
        return self

    def amplitudes(self) -> tuple[float, float]:
        if self.regime == "custom":
            return float(self.re_amplitude), float(self.im_amplitude)
        default = REGIME_AMPLITUDES[self.regime]
        re = default if self.re_amplitude is None else self.re_amplitude
        im = default if self.im_amplitude is None else self.im_amplitude
        return float(re), float(im)


class MeasurementConfig(_Section):
    noise_std: float = Field(default=1e-3, ge=0)
    fractions: list[float] = Field(default_factory=lambda: [0.05, 0.10, 0.15, 0.20], min_length=1)
    validation_fraction: float = Field(default=0.05, ge=0, le=1)
    broadband_sweeps: bool = False

    @field_validator("fractions")
    @classmethod
    def _fractions_in_range(cls, values):
        for value in values:
            if not 0.0 < value <= 1.0:
                raise ValueError(f"fração {value} fora de (0, 1]")
        return values


class AxisKernelConfig(_Section):
    kind: Literal["rational_quadratic", "spectral_mixture"] = "rational_quadratic"
    variance: PositiveFloat = 1.0
    lengthscale: PositiveFloat = 0.3
    alpha: PositiveFloat = 1.0
    weights: list[PositiveFloat] = Field(default_factory=lambda: [0.5, 0.5])
    means: list[float] = Field(default_factory=lambda: [0.0, 1.0])
    variances: list[PositiveFloat] = Field(default_factory=lambda: [1.0, 1.0])

    @model_validator(mode="after")
    def _components(self):
        if self.kind == "spectral_mixture" and not len(self.weights) == len(self.means) == len(self.variances) >= 1:
            raise ValueError("spectral mixture exige weights, means e variances do mesmo tamanho")
        return self

    def to_kernel(self) -> Kernel:
        if self.kind == "spectral_mixture":
            return SpectralMixture(tuple(self.weights), tuple(self.means), tuple(self.variances))
        return RationalQuadratic(self.variance, self.lengthscale, self.alpha)


class KernelsConfig(_Section):
    frequency: AxisKernelConfig = Field(default_factory=lambda: AxisKernelConfig(kind="spectral_mixture"))
    channel: AxisKernelConfig = Field(default_factory=AxisKernelConfig)
    codebook: AxisKernelConfig = Field(default_factory=AxisKernelConfig)

    def to_kernels(self) -> tuple[Kernel, Kernel, Kernel]:
        return self.frequency.to_kernel(), self.channel.to_kernel(), self.codebook.to_kernel()


class GPConfig(_Section):
    noise_variance: float = Field(default=1e-6, gt=0)
    learn_noise: bool = True
    # limite inferior do ruído aprendido; mantém S·K·Sᵀ + σ²I bem condicionada para o CG
    noise_floor: Optional[PositiveFloat] = None
    optimize: bool = True
    hyper_strategy: Literal["subsample", "kronecker"] = "subsample"
    hyper_subsample: PositiveInt = 400
    hyper_window_z: PositiveInt = 8
    restarts: NonNegativeInt = 3
    max_iters: PositiveInt = 100
    cg_tol: PositiveFloat = 1e-8
    cg_max_iters: Optional[PositiveInt] = None
    solver: Literal["auto", "cg"] = "auto"

    @model_validator(mode="after")
    def _noise_above_floor(self):
        if self.noise_floor is not None and self.noise_variance < self.noise_floor:
            raise ValueError(f"noise_variance ({self.noise_variance}) abaixo de noise_floor ({self.noise_floor})")
        return self

    def bounds(self) -> dict | None:
        return None if self.noise_floor is None else {"noise": (self.noise_floor, 1.0)}


class SectorConfig(_Section):
    azimuth: tuple[float, float]
    elevation: tuple[float, float]

    @model_validator(mode="after")
    def _within_range(self):
        for name in ("azimuth", "elevation"):
            lo, hi = getattr(self, name)
            if not 0.0 <= lo <= hi <= 180.0:
                raise ValueError(f"{name} deve ser um intervalo crescente dentro de [0, 180]")
        return self


class SynthesisConfig(_Section):
    ue_direction: tuple[float, float] = (90.0, 90.0)
    sectors: list[SectorConfig] = Field(
        default_factory=lambda: [SectorConfig(azimuth=(120.0, 140.0), elevation=(80.0, 100.0))]
    )
    regularization: float = Field(default=1e-3, ge=0)
    density: PositiveFloat = 1.0

    @model_validator(mode="after")
    def _ue_outside_sectors(self):
        az, el = self.ue_direction
        if not (0.0 <= az <= 180.0 and 0.0 <= el <= 180.0):
            raise ValueError("ue_direction deve estar em [0, 180]²")
        for sector in self.sectors:
            if sector.azimuth[0] <= az <= sector.azimuth[1] and sector.elevation[0] <= el <= sector.elevation[1]:
                raise ValueError(f"ue_direction {self.ue_direction} dentro de um setor de interferência")
        return self


class PatternConfig(_Section):
    angle_step_deg: PositiveFloat = 5.0
    cut_step_deg: PositiveFloat = 1.0
    n_frequencies: PositiveInt = 16


class AbfConfig(_Section):
    selection: Literal["nearest", "ratio"] = "nearest"
    ratio_method: Literal["greedy", "viterbi"] = "greedy"
    evaluation: Literal["full_band", "center"] = "full_band"
    # None: raio da célula de quantização / 4
    nrmse_threshold: Optional[PositiveFloat] = None


class ExperimentConfig(_Section):
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str = "experiment"
    mode: Literal["DBF", "ABF"] = "DBF"
    array: ArrayConfig = Field(default_factory=ArrayConfig)
    band: BandConfig = Field(default_factory=BandConfig)
    codebook: CodebookConfig = Field(default_factory=CodebookConfig)
    distortion: DistortionConfig = Field(default_factory=DistortionConfig)
    measurement: MeasurementConfig = Field(default_factory=MeasurementConfig)
    kernels: KernelsConfig = Field(default_factory=KernelsConfig)
    gp: GPConfig = Field(default_factory=GPConfig)
    synthesis: SynthesisConfig = Field(default_factory=SynthesisConfig)
    pattern: PatternConfig = Field(default_factory=PatternConfig)
    abf: AbfConfig = Field(default_factory=AbfConfig)
    seeds: list[NonNegativeInt] = Field(default_factory=lambda: [0], min_length=1)
    output_dir: Optional[str] = None
    denominator_mode: Literal["paper_sum", "cell_count"] = "paper_sum"

    @property
    def n_channels(self) -> int:
        return self.array.nx * self.array.ny

    @property
    def frequencies(self) -> np.ndarray:
        return self.band.frequencies

    @property
    def grid_shape(self) -> tuple[int, int, int]:
        return self.frequencies.size, self.n_channels, self.codebook.size


def config_digest(config: ExperimentConfig) -> str:
    """SHA-256 (16 primeiros hex) do JSON canônico, sem o diretório de saída."""
    canonical = json.dumps(
        config.model_dump(mode="json", exclude={"output_dir"}), sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _locate(text: str, loc: tuple) -> int:
    """Linha (1-based) da chave mais profunda de `loc` encontrada no texto."""
    position, line = 0, 1
    for key in loc:
        if not isinstance(key, str):
            continue
        found = text.find(f'"{key}"', position)
        if found < 0:
            break
        position = found
        line = text.count("\n", 0, found) + 1
    return line


def parse_experiment_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}: JSON inválido: {e.msg}") from e
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        messages = []
        for error in e.errors():
            loc = tuple(error["loc"])
            path = ".".join(str(part) for part in loc) or "<raiz>"
            messages.append(f"{source}:{_locate(text, loc)}: {path}: {error['msg']}")
        raise ConfigError("\n".join(messages)) from e


def load_experiment_config(path) -> ExperimentConfig:
    """Lê e valida o arquivo; qualquer problema vira ConfigError ancorado em linha."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"{path}:0: não foi possível ler o arquivo: {e}") from e
    return parse_experiment_config(text, str(path))
