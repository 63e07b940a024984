"""Scalar and operator-valued Cauchy transforms.

G_μ(z) = ∫ dμ(t) / (z − t) for scalars and, for a leaf b ⊗ x with x ~ μ,
G(β) = ∫ (β − t b)^{-1} dμ(t) on the matrix half-planes.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Callable, Tuple, Union

import numpy as np
import scipy.linalg as sla

from projects.free_spectra.algorithms.quadrature import integrate
from projects.free_spectra.errors import (
    ConsistencyError,
    HalfPlaneError,
    NotHermitianError,
    SingularMatrixError,
)
from projects.free_spectra.models.linalg import (
    HalfPlanePoint,
    as_cmatrix,
    imag_part,
    invert_with_condition,
    is_hermitian,
    opnorm,
)
from projects.free_spectra.models.measures import ContinuousPart, SpectralMeasure
from shared.config import get_config
from shared.logging import get_logger

log = get_logger(__name__)

MatrixLike = Union[HalfPlanePoint, np.ndarray]


@dataclass(frozen=True)
class QuadratureSettings:
    tol: float
    order: int
    max_panels: int

    @classmethod
    def from_config(cls) -> "QuadratureSettings":
        config = get_config()
        return cls(config.QUAD_TOL, config.QUAD_ORDER, config.QUAD_MAX_PANELS)


def point_matrix(beta: MatrixLike) -> np.ndarray:
    return beta.m if isinstance(beta, HalfPlanePoint) else as_cmatrix(beta)


def support_bounds(mu: SpectralMeasure) -> Tuple[float, float]:
    return mu.support_bounds()


def cauchy_scalar(mu: SpectralMeasure, z, quad: QuadratureSettings | None = None):
    """G_μ(z) for Im z > 0; accepts scalars or arrays."""
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr.imag <= 0):
        raise HalfPlaneError("cauchy_scalar requires Im z > 0")
    closed = mu.cauchy_closed_form(z_arr)
    if closed is not None:
        return closed if z_arr.ndim else complex(closed)

    quad = quad or QuadratureSettings.from_config()
    flat = z_arr.reshape(-1)
    total = np.zeros(flat.shape, dtype=complex)
    for t, w in mu.atoms():
        total += w / (flat - t)
    for part in mu.continuous_parts():

        def kernel(t, flat=flat):
            return 1.0 / (flat[None, :] - t[:, None])

        total += integrate(kernel, part, quad.tol, quad.order, quad.max_panels).value
    total = total.reshape(z_arr.shape)
    return total if z_arr.ndim else complex(total)


class OpVar(ABC):
    """An M_N-valued random variable known through its Cauchy transform."""

    @property
    @abstractmethod
    def dim(self) -> int:
        """Ambient matrix size N."""

    @property
    @abstractmethod
    def norm_bound(self) -> float:
        """Upper bound on the operator norm."""

    @abstractmethod
    def cauchy(self, beta: MatrixLike) -> np.ndarray:
        """G(β) = E[(β − x)^{-1}]."""

    def h(self, beta: MatrixLike) -> np.ndarray:
        return h_transform(self.cauchy, beta)


class OpVarLeaf(OpVar):
    """b ⊗ x with b Hermitian and x distributed as ``measure``."""

    def __init__(self, b, measure: SpectralMeasure, quad: QuadratureSettings | None = None):
        b = as_cmatrix(b)
        if not is_hermitian(b):
            raise NotHermitianError("leaf coefficient must be Hermitian")
        self.b = 0.5 * (b + b.conj().T)
        self.b.setflags(write=False)
        self.measure = measure
        self.quad = quad or QuadratureSettings.from_config()
        self._norm_bound = opnorm(self.b) * measure.norm_bound

    def __repr__(self) -> str:
        return f"OpVarLeaf(dim={self.dim}, measure={self.measure.spec_string()})"

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    @property
    def norm_bound(self) -> float:
        return self._norm_bound

    def cauchy(self, beta: MatrixLike) -> np.ndarray:
        return opval_cauchy(self, beta)


def _batched_resolvent(beta: np.ndarray, b: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    def kernel(t: np.ndarray) -> np.ndarray:
        return np.linalg.inv(beta[None, :, :] - t[:, None, None] * b[None, :, :])

    return kernel


_EIGENBASIS_CONDITION_LIMIT = 1e8


def _closed_form_off_axis(mu: SpectralMeasure, z: np.ndarray) -> np.ndarray | None:
    """G_μ(z) off the real axis, using G(z̄) = conj G(z) below it."""
    upper = z.imag > 0
    closed = mu.cauchy_closed_form(np.where(upper, z, z.conj()))
    if closed is None:
        return None
    values = np.asarray(closed, dtype=complex)
    return np.where(upper, values, values.conj())


def _leaf_by_eigenbasis(
    leaf: OpVarLeaf, m: np.ndarray, lam: np.ndarray, vecs: np.ndarray
) -> np.ndarray | None:
    """Exact reduction for measures with a closed-form Cauchy transform.

    (β − t b)^{-1} = V diag(1 / (1 − tλ_i)) (βV)^{-1}, and E[1/(1 − tλ)] = z G_μ(z)
    at z = 1/λ, which is 1 when λ = 0. Returns None without a closed form or when
    the eigenbasis is unusable.
    """
    if not np.all(np.isfinite(lam)) or np.linalg.cond(vecs) > _EIGENBASIS_CONDITION_LIMIT:
        return None
    # zero eigenvalues of a singular b come back at rounding level
    small = np.abs(lam) <= 64.0 * np.finfo(float).eps * float(np.max(np.abs(lam), initial=0.0))
    z = np.where(small, 1j, 1.0 / np.where(small, 1.0, lam))
    if np.any(z.imag == 0):
        return None
    scalar = _closed_form_off_axis(leaf.measure, z)
    if scalar is None:
        return None
    g = np.where(small, 1.0, z * scalar)
    try:
        right, _ = invert_with_condition(m @ vecs)
    except SingularMatrixError:
        return None
    return (vecs * g[None, :]) @ right


def _with_pole_breaks(part: ContinuousPart, poles: np.ndarray) -> ContinuousPart:
    """Adds panel edges at the real parts of nearby resolvent poles."""
    if part.to_s is None or poles.size == 0:
        return part
    width = np.abs(poles.imag)
    t = np.concatenate([poles.real, poles.real - width, poles.real + width])
    t = t[(t > part.lo) & (t < part.hi)]
    if t.size == 0:
        return part
    s = np.concatenate([np.asarray(part.breaks, dtype=float), part.to_s(t)])
    return replace(part, breaks=np.unique(s))


def _leaf_by_quadrature(leaf: OpVarLeaf, m: np.ndarray, lam: np.ndarray) -> np.ndarray:
    result = np.zeros_like(m)
    for t, w in leaf.measure.atoms():
        result += w * invert_with_condition(m - t * leaf.b)[0]
    finite = np.isfinite(lam) & (np.abs(lam) > 0)
    poles = 1.0 / lam[finite]
    kernel = _batched_resolvent(m, leaf.b)
    q = leaf.quad
    for part in leaf.measure.continuous_parts():
        part = _with_pole_breaks(part, poles)
        result += integrate(kernel, part, q.tol, q.order, q.max_panels).value
    return result


def opval_cauchy(leaf: OpVarLeaf, beta: MatrixLike) -> np.ndarray:
    """∫ (β − t b)^{-1} dμ(t) for β in the upper or the lower matrix half-plane.

    Measures with a continuous part and a closed-form scalar transform are reduced
    exactly through the pencil (b, β). Otherwise atoms are summed exactly and the
    continuous parts use adaptive Gauss–Legendre panels broken at the resolvent poles.
    """
    m = point_matrix(beta)
    if m.shape != leaf.b.shape:
        raise HalfPlaneError(f"point has shape {m.shape}, leaf is {leaf.b.shape}")
    im_eigs = sla.eigvalsh(imag_part(m))
    if im_eigs[0] > 0:
        sign = 1.0
    elif im_eigs[-1] < 0:
        sign = -1.0
    else:
        raise HalfPlaneError("point is in neither matrix half-plane", margin=float(im_eigs[0]))

    # b v = λ β v, so β − t b = β V (I − tΛ) V^{-1}
    lam, vecs = sla.eig(leaf.b, m, check_finite=False)
    result = None
    if leaf.measure.continuous_parts():
        result = _leaf_by_eigenbasis(leaf, m, lam, vecs)
        if result is None:
            log.debug("leaf {} falls back to quadrature", leaf)
    if result is None:
        result = _leaf_by_quadrature(leaf, m, lam)

    noise = get_config().MARGIN_TOL * max(1.0, float(np.max(np.abs(result))))
    im_g = sla.eigvalsh(imag_part(result))
    if sign * im_g[-1 if sign > 0 else 0] > noise:
        raise ConsistencyError(
            f"Cauchy transform left the {'lower' if sign > 0 else 'upper'} half-plane "
            f"(extreme eigenvalue of Im G = {im_g[-1 if sign > 0 else 0]:.3e})"
        )
    return result


def h_transform(g_eval: Callable[[MatrixLike], np.ndarray], beta: MatrixLike) -> np.ndarray:
    """h(β) = G(β)^{-1} − β."""
    m = point_matrix(beta)
    g = g_eval(beta)
    inv, _ = invert_with_condition(g)
    return inv - m


def h_norm_bound(norm_bound: float, epsilon: float) -> float:
    """Bound on ‖h(w)‖ for Im w ⪰ εI and a variable of norm at most ``norm_bound``."""
    return 4.0 * norm_bound * (1.0 + 2.0 * norm_bound / epsilon)
