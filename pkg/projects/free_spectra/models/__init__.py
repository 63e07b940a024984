"""Data models for Free Spectra."""

from projects.free_spectra.models.ncpoly import Monomial, NCPolynomial, adjoint, evaluate, is_selfadjoint, parse
from projects.free_spectra.models.linalg import HalfPlanePoint, in_upper_half_plane, min_eig_herm
from projects.free_spectra.models.linearization import BlockLayout, Linearization
from projects.free_spectra.models.measures import (
    Atomic,
    MarchenkoPastur,
    Semicircle,
    SpectralMeasure,
    Tabulated,
    measure_from_dict,
    parse_measure,
)

__all__ = [
    "Monomial",
    "NCPolynomial",
    "adjoint",
    "evaluate",
    "is_selfadjoint",
    "parse",
    "HalfPlanePoint",
    "in_upper_half_plane",
    "min_eig_herm",
    "BlockLayout",
    "Linearization",
    "Atomic",
    "MarchenkoPastur",
    "Semicircle",
    "SpectralMeasure",
    "Tabulated",
    "measure_from_dict",
    "parse_measure",
]
