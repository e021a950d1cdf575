"""
Impairments de RF simulados: codebook ABF, campos suaves e modelo de distorção.
"""
from .codebook import AbfCodebook, make_abf_codebook
from .fields import SmoothField, smooth_random_field_3d
from .distortion import DistortionTensor, distort_weights, generate_distortion, realized_weights

__all__ = [
    "AbfCodebook",
    "make_abf_codebook",
    "SmoothField",
    "smooth_random_field_3d",
    "DistortionTensor",
    "distort_weights",
    "generate_distortion",
    "realized_weights",
]
