"""
Persistência do CalibrationModel em .npz versionado, para que `fit` e
`apply` rodem em invocações separadas da CLI.

Arrays (eixos, máscara, alvos, soluções) vão como entradas do .npz; kernels,
ruído, diagnósticos e metadados vão num JSON embutido.
"""
import json
from pathlib import Path

import numpy as np
from loguru import logger

from gp.grid import GridAxes
from gp.kernels import make_kernel
from gp.kronecker import FitDiagnostics, KronGPModel, axis_gram_factors
from impairments.codebook import make_abf_codebook
from utils.errors import InvalidArgumentError

from .model import CalibrationModel

MODEL_FORMAT_VERSION = 1


def _component_metadata(gp: KronGPModel) -> dict:
    diagnostics = gp.diagnostics
    return {
        "kernels": [k.hyperparameters() for k in gp.kernels],
        "noise_variance": gp.noise_variance,
        "diagnostics": None if diagnostics is None else {
            "solver": diagnostics.solver,
            "iterations": diagnostics.iterations,
            "residual": diagnostics.residual,
            "restarts": diagnostics.restarts,
        },
    }


def save_model(model: CalibrationModel, path) -> Path:
    """Grava o modelo; devolve o caminho efetivo (numpy acrescenta .npz se faltar)."""
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    path.parent.mkdir(parents=True, exist_ok=True)

    metadata = {
        "format_version": MODEL_FORMAT_VERSION,
        "mode": model.mode,
        "codebook": {"bits": model.codebook.bits, "gain_range": list(model.codebook.gain_range)},
        "re": _component_metadata(model.gp_re),
        "im": _component_metadata(model.gp_im),
        "hyperparameters": model.hyperparameters,
        "validation": model.validation,
    }
    np.savez_compressed(
        path,
        format_version=MODEL_FORMAT_VERSION,
        metadata=np.array(json.dumps(metadata, sort_keys=True, default=float)),
        frequencies=model.frequencies,
        mask=model.mask,
        targets_re=model.gp_re.targets,
        targets_im=model.gp_im.targets,
        solution_re=model.gp_re.solution,
        solution_im=model.gp_im.solution,
        **{f"axis_{i}": c for i, c in enumerate(model.axes.coordinates)},
    )
    logger.info(f"Modelo de calibração salvo em {path}")
    return path


def _restore_component(axes: GridAxes, mask, targets, solution, meta: dict) -> KronGPModel:
    kernels = tuple(make_kernel(spec) for spec in meta["kernels"])
    diagnostics = meta.get("diagnostics")
    return KronGPModel(
        axes=axes,
        kernels=kernels,
        factors=axis_gram_factors(axes, kernels),
        mask=mask,
        targets=targets,
        noise_variance=float(meta["noise_variance"]),
        solution=solution,
        diagnostics=None if diagnostics is None else FitDiagnostics(**diagnostics),
    )


def load_model(path) -> CalibrationModel:
    """Lê um modelo gravado por save_model; versão desconhecida → invalid-argument."""
    with np.load(Path(path), allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != MODEL_FORMAT_VERSION:
            raise InvalidArgumentError(f"versão de modelo não suportada: {version}")
        metadata = json.loads(str(data["metadata"]))
        axes = GridAxes(tuple(data[f"axis_{i}"] for i in range(3)))
        mask = data["mask"].astype(bool)
        gp_re = _restore_component(axes, mask, data["targets_re"], data["solution_re"], metadata["re"])
        gp_im = _restore_component(axes, mask, data["targets_im"], data["solution_im"], metadata["im"])
        frequencies = data["frequencies"]

    codebook = make_abf_codebook(metadata["codebook"]["bits"], tuple(metadata["codebook"]["gain_range"]))
    return CalibrationModel(
        gp_re, gp_im, codebook, metadata["mode"], frequencies,
        metadata.get("hyperparameters") or {}, metadata.get("validation"),
    )
