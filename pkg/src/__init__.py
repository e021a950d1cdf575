"""
Antenna Array Calibration Toolkit
Calibração de impairments de RF em arranjos de antenas por regressão GP com estrutura de Kronecker.
"""

from .utils.version import __version__

__author__ = "Array Calibration Team"
