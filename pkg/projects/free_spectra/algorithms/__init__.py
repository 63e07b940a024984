"""Algorithms for Free Spectra."""

from projects.free_spectra.algorithms.linearize import (
    selfadjoint_linearize,
    verify_linearization,
    reference_linearization,
    reference_polynomial,
)
from projects.free_spectra.algorithms.spectra import OpVar, OpVarLeaf, cauchy_scalar, h_transform, opval_cauchy
from projects.free_spectra.algorithms.subordination import (
    Conv,
    SolverConfig,
    atom_diagnostic,
    convolve,
    fixed_point_subordination,
)
from projects.free_spectra.algorithms.density import (
    DensityCurve,
    ProblemSpec,
    cauchy_of_polynomial,
    density_grid,
)
from projects.free_spectra.algorithms.oracle import CumulantSpec, poly_moment, word_moment
from projects.free_spectra.algorithms.rmt import EnsembleSpec, empirical_spectrum, ks_distance, sample_ensemble

__all__ = [
    "selfadjoint_linearize",
    "verify_linearization",
    "reference_linearization",
    "reference_polynomial",
    "OpVar",
    "OpVarLeaf",
    "cauchy_scalar",
    "h_transform",
    "opval_cauchy",
    "Conv",
    "SolverConfig",
    "atom_diagnostic",
    "convolve",
    "fixed_point_subordination",
    "DensityCurve",
    "ProblemSpec",
    "cauchy_of_polynomial",
    "density_grid",
    "CumulantSpec",
    "poly_moment",
    "word_moment",
    "EnsembleSpec",
    "empirical_spectrum",
    "ks_distance",
    "sample_ensemble",
]
