"""
Arranjos de antenas: geometria, padrões de feixe e síntese de pesos.
"""
from .geometry import (
    AngleGrid,
    ArrayGeometry,
    BeamPattern,
    beam_pattern,
    make_uniform_rect_array,
    pattern_cut,
    steering_vector,
)
from .beamsynth import (
    Sector,
    SynthesisSpec,
    synthesize_abf_weights,
    synthesize_weights,
    synthesize_wideband_weights,
)

__all__ = [
    "AngleGrid",
    "ArrayGeometry",
    "BeamPattern",
    "beam_pattern",
    "make_uniform_rect_array",
    "pattern_cut",
    "steering_vector",
    "Sector",
    "SynthesisSpec",
    "synthesize_abf_weights",
    "synthesize_weights",
    "synthesize_wideband_weights",
]
