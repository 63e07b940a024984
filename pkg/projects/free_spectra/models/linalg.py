"""Dense complex matrix kernel and the matrix upper half-plane.

Matrices are plain ``numpy`` complex arrays; ``as_cmatrix`` is the single
validation point for shape and finiteness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg as sla

from projects.free_spectra.errors import (
    DimensionMismatchError,
    HalfPlaneError,
    NotHermitianError,
    SingularMatrixError,
)

HERMITIAN_TOL = 1e-10


def as_cmatrix(b) -> np.ndarray:
    """Coerce to a finite square complex matrix."""
    arr = np.asarray(b, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionMismatchError(f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def adjoint(b: np.ndarray) -> np.ndarray:
    return np.conjugate(np.swapaxes(b, -1, -2))


def hermitian_part(b: np.ndarray) -> np.ndarray:
    return 0.5 * (b + adjoint(b))


def imag_part(b: np.ndarray) -> np.ndarray:
    """Im b = (b - b*) / 2i, symmetrized so the result is exactly Hermitian."""
    b = np.asarray(b, dtype=complex)
    im = (b - adjoint(b)) / 2j
    return 0.5 * (im + adjoint(im))


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    return bool(np.max(np.abs(h - adjoint(h)), initial=0.0) <= tol * scale)


def min_eig_herm(h: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    h = as_cmatrix(h)
    if not is_hermitian(h):
        raise NotHermitianError("min_eig_herm requires a Hermitian matrix")
    return float(sla.eigvalsh(hermitian_part(h), subset_by_index=[0, 0])[0])


def in_upper_half_plane(b: np.ndarray, margin: float = 0.0) -> Tuple[bool, float]:
    """Return (min eig Im b > margin, min eig Im b)."""
    if margin < 0:
        raise ValueError("margin must be non-negative")
    lam = float(sla.eigvalsh(imag_part(as_cmatrix(b)), subset_by_index=[0, 0])[0])
    return lam > margin, lam


def opnorm(b: np.ndarray) -> float:
    """Spectral norm."""
    return float(np.linalg.norm(b, 2))


def invert_with_condition(b: np.ndarray) -> Tuple[np.ndarray, float]:
    """LU inverse with a 1-norm condition estimate.

    Raises SingularMatrixError when the matrix is singular to working precision.
    """
    b = as_cmatrix(b)
    n = b.shape[0]
    try:
        lu, piv = sla.lu_factor(b, check_finite=False)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularMatrixError(f"LU factorization failed: {exc}") from exc
    diag = np.abs(np.diag(lu))
    if diag.min(initial=np.inf) == 0.0:
        raise SingularMatrixError("matrix is exactly singular")
    inv = sla.lu_solve((lu, piv), np.eye(n, dtype=complex), check_finite=False)
    if not np.all(np.isfinite(inv)):
        raise SingularMatrixError("inverse has non-finite entries")
    condition = float(np.linalg.norm(b, 1) * np.linalg.norm(inv, 1))
    if condition * np.finfo(float).eps >= 1.0:
        raise SingularMatrixError("matrix is singular to machine precision", condition)
    return inv, condition


def invert(b: np.ndarray) -> np.ndarray:
    return invert_with_condition(b)[0]


@dataclass(frozen=True)
class HalfPlanePoint:
    """A matrix with certified Im m >= margin * I, margin > 0."""

    m: np.ndarray
    margin: float

    @classmethod
    def certify(cls, b, required: float = 0.0) -> "HalfPlanePoint":
        m = as_cmatrix(b)
        inside, lam = in_upper_half_plane(m, 0.0)
        if not inside or lam <= required:
            raise HalfPlaneError(
                f"point is not in the upper half-plane with margin {required:g} (min eig Im = {lam:.3e})",
                margin=lam,
            )
        m.setflags(write=False)
        return cls(m, lam)

    @classmethod
    def scalar(cls, z: complex) -> "HalfPlanePoint":
        return cls.certify(np.array([[complex(z)]]))

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    def shifted(self, delta: float) -> "HalfPlanePoint":
        """m + i*delta*I."""
        return HalfPlanePoint.certify(self.m + 1j * delta * np.eye(self.dim))
