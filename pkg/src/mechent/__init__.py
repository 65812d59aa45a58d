"""Entanglement of two mechanical resonators in a bichromatically driven cavity.

Modules: ``gaussian`` (covariance-matrix tools), ``rwa`` (resonant linearized
model), ``closed_form`` (dissipationless maps), ``full_model`` (counter-rotating
terms, mean-field expansion, Floquet analysis), ``detection`` (homodyne
reconstruction) and ``cli``.
"""
from .params import SystemParams

__version__ = "0.1.0"

__all__ = ["SystemParams", "__version__"]
