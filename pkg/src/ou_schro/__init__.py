"""Propagators for the imaginary Ornstein-Uhlenbeck and harmonic oscillator groups.

``L = Delta - <x, grad>`` generates the unitary group ``exp(itL)`` on
``L^2(exp(-|x|^2/2) dx)``; ``H = Delta - |x|^2/4`` generates ``exp(itH)`` on
flat ``L^2``.  The package provides exact Gaussian coefficient maps
(:mod:`ou_schro.gauss_calc`), sampled fields and quadrature
(:mod:`ou_schro.field_grid`), grid propagators (:mod:`ou_schro.propagator`)
and numerical probes of uncertainty and dispersive bounds
(:mod:`ou_schro.analysis`).
"""

from .gauss_calc import (
    Branch,
    EvolutionTime,
    GaussianExponential,
    RiccatiSpec,
    covariance_q,
    fourier_gaussian,
    ho_evolve,
    mehler_evolve,
    ou_evolve,
)
from .field_grid import Field, Grid, make_grid, sample
from .propagator import (
    PropagatorConfig,
    SingularTimeError,
    propagate_ho,
    propagate_mehler,
    propagate_ou_kernel,
    propagate_ou_transform,
)

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "EvolutionTime",
    "Field",
    "GaussianExponential",
    "Grid",
    "PropagatorConfig",
    "RiccatiSpec",
    "SingularTimeError",
    "covariance_q",
    "fourier_gaussian",
    "ho_evolve",
    "make_grid",
    "mehler_evolve",
    "ou_evolve",
    "propagate_ho",
    "propagate_mehler",
    "propagate_ou_kernel",
    "propagate_ou_transform",
    "sample",
]
