"""Numerical experiments on the stability of Gagliardo-Nirenberg-Sobolev inequalities."""

from .errors import (
    DegenerateInputError,
    DomainError,
    FormatError,
    GnsError,
    NumericalFailure,
    ParameterError,
    PreconditionError,
    ShapeError,
)
from .gnscore import DeficitReport, GnsParams, deficit, make_params
from .gridfn import GridFunction, Hyperplane, read_gfn, write_gfn
from .radialopt import OptimizerModel, OptimizerWitness, RadialProfile, eval_witness, minimize_radial

__all__ = [
    "DegenerateInputError",
    "DeficitReport",
    "DomainError",
    "FormatError",
    "GnsError",
    "GnsParams",
    "GridFunction",
    "Hyperplane",
    "NumericalFailure",
    "OptimizerModel",
    "OptimizerWitness",
    "ParameterError",
    "PreconditionError",
    "RadialProfile",
    "ShapeError",
    "deficit",
    "eval_witness",
    "make_params",
    "minimize_radial",
    "read_gfn",
    "write_gfn",
]
