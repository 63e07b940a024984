"""Operator-valued free additive convolution by subordination.

For free x, y over M_N and b in the upper half-plane, ω_1(b) is the attracting
fixed point of w ↦ h_y(h_x(w) + b) + b, ω_2(b) = h_x(ω_1(b)) + b and
G_{x+y}(b) = G_x(ω_1(b)) = G_y(ω_2(b)).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from projects.free_spectra.algorithms.spectra import MatrixLike, OpVar, point_matrix
from projects.free_spectra.errors import ConsistencyError, ConvergenceError, DimensionMismatchError
from projects.free_spectra.models.linalg import (
    HalfPlanePoint,
    imag_part,
    in_upper_half_plane,
    invert_with_condition,
    opnorm,
)
from shared.cache import MatrixCache
from shared.config import get_config
from shared.logging import get_logger

log = get_logger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    tol: float = field(default_factory=lambda: get_config().SOLVER_TOL)
    max_iter: int = field(default_factory=lambda: get_config().SOLVER_MAX_ITER)
    warm_start: Optional[np.ndarray] = None
    margin_tol: float = field(default_factory=lambda: get_config().MARGIN_TOL)

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def with_warm_start(self, w: Optional[np.ndarray]) -> "SolverConfig":
        return replace(self, warm_start=w)


@dataclass
class ConvResult:
    omega1: np.ndarray
    omega2: np.ndarray
    G_sum: np.ndarray
    iterations: int
    r2: float
    r3: float
    displacements: List[float] = field(default_factory=list)

    @property
    def residuals(self) -> Tuple[float, float]:
        return self.r2, self.r3

    @property
    def residual(self) -> float:
        return max(self.r2, self.r3)

    @property
    def contraction_rate(self) -> float:
        return fitted_contraction_rate(self.displacements)


def fitted_contraction_rate(displacements: Sequence[float]) -> float:
    """Geometric rate ρ from a log-linear fit to the tail of the displacement sequence.

    Empirical only: NaN when fewer than three positive displacements are available.
    """
    d = np.asarray(displacements, dtype=float)
    d = d[np.isfinite(d) & (d > 0)]
    if d.size < 3:
        return float("nan")
    tail = d[d.size // 2 :] if d.size >= 6 else d
    slope, _ = np.polyfit(np.arange(tail.size), np.log(tail), 1)
    return float(np.exp(slope))


def _check_gain(label: str, omega: np.ndarray, b: np.ndarray, margin_tol: float) -> None:
    gain = float(sla.eigvalsh(imag_part(omega) - imag_part(b), subset_by_index=[0, 0])[0])
    if gain < -margin_tol:
        raise ConsistencyError(f"{label} lost half-plane margin: min eig(Im {label} − Im b) = {gain:.3e}")


def fixed_point_subordination(x: OpVar, y: OpVar, b: MatrixLike, cfg: SolverConfig | None = None) -> ConvResult:
    """Solve for the subordination functions of x ⊞ y at b by plain Picard iteration."""
    cfg = cfg or SolverConfig()
    if not isinstance(b, HalfPlanePoint):
        b = HalfPlanePoint.certify(b)
    if x.dim != b.dim or y.dim != b.dim:
        raise DimensionMismatchError(f"dimensions differ: x={x.dim}, y={y.dim}, b={b.dim}")
    bm = b.m

    w = bm.copy()
    if cfg.warm_start is not None:
        start = np.asarray(cfg.warm_start, dtype=complex)
        if start.shape == bm.shape and np.all(np.isfinite(start)) and in_upper_half_plane(start)[0]:
            w = start.copy()

    displacements: List[float] = []
    converged = False
    for iteration in range(1, cfg.max_iter + 1):
        w_inner = x.h(w) + bm
        _check_gain("h_x(w) + b", w_inner, bm, cfg.margin_tol)
        w_next = y.h(w_inner) + bm
        step = opnorm(w_next - w)
        displacements.append(step)
        w = w_next
        if not np.isfinite(step):
            break
        if step < cfg.tol:
            converged = True
            break

    if not converged:
        last = displacements[-1] if displacements else float("nan")
        raise ConvergenceError("subordination did not converge", iterations=len(displacements), displacement=last)

    omega1 = w
    g_x = x.cauchy(omega1)
    f_x, _ = invert_with_condition(g_x)
    omega2 = f_x - omega1 + bm
    g_y = y.cauchy(omega2)
    f_y, _ = invert_with_condition(g_y)
    _check_gain("ω_1", omega1, bm, cfg.margin_tol)
    _check_gain("ω_2", omega2, bm, cfg.margin_tol)

    target = omega1 + omega2
    r2 = max(opnorm(f_x + bm - target), opnorm(f_y + bm - target))
    r3 = opnorm(g_x - g_y)
    log.debug("subordination converged: {} iterations, displacement {:.2e}", iteration, displacements[-1])
    return ConvResult(omega1, omega2, g_x, iteration, r2, r3, displacements)


class Conv(OpVar):
    """x ⊞ y evaluated lazily; results are cached per evaluation point.

    The last ω_1 seeds the next solve, which turns a sweep over neighbouring
    points into a continuation. A cached result is reused only for requests at
    the same or a looser tolerance.
    """

    def __init__(self, left: OpVar, right: OpVar, solver: SolverConfig | None = None, cache_size: int | None = None):
        if left.dim != right.dim:
            raise DimensionMismatchError(f"cannot convolve dimensions {left.dim} and {right.dim}")
        self.left = left
        self.right = right
        self.solver = solver or SolverConfig()
        self.cache: MatrixCache[Tuple[float, ConvResult]] = MatrixCache(cache_size, name="subordination")
        self._last_omega: Optional[np.ndarray] = None

    def __repr__(self) -> str:
        return f"Conv({self.left!r}, {self.right!r})"

    @property
    def dim(self) -> int:
        return self.left.dim

    @property
    def norm_bound(self) -> float:
        return self.left.norm_bound + self.right.norm_bound

    def solve(self, beta: MatrixLike, cfg: SolverConfig | None = None) -> ConvResult:
        m = point_matrix(beta)
        cfg = cfg or self.solver
        cached = self.cache.get(m)
        if cached is not None and cached[0] <= cfg.tol:
            return cached[1]
        if cfg.warm_start is None and self._last_omega is not None:
            cfg = cfg.with_warm_start(self._last_omega)
        result = fixed_point_subordination(self.left, self.right, beta if isinstance(beta, HalfPlanePoint) else m, cfg)
        self._last_omega = result.omega1
        self.cache.put(m, (cfg.tol, result))
        return result

    def cauchy(self, beta: MatrixLike) -> np.ndarray:
        m = point_matrix(beta)
        inside, _ = in_upper_half_plane(m)
        if not inside:
            # G(β*) = G(β)*
            return self.solve(m.conj().T).G_sum.conj().T
        return self.solve(beta).G_sum

    def reset(self) -> None:
        self.cache.clear()
        self._last_omega = None


def convolve(variables: Sequence[OpVar], cfg: SolverConfig | None = None) -> OpVar:
    """Left fold: ((v1 ⊞ v2) ⊞ v3) ⊞ ..."""
    if not variables:
        raise ValueError("convolve needs at least one variable")
    dims = {v.dim for v in variables}
    if len(dims) != 1:
        raise DimensionMismatchError(f"variables have different dimensions: {sorted(dims)}")
    node = variables[0]
    for nxt in variables[1:]:
        node = Conv(node, nxt, cfg)
    return node


@dataclass
class AtomDiagnostic:
    """Near-kernel of Im(F_y(w) − w) at w and its distance to the one at a second point."""

    eigenpairs: List[Tuple[float, np.ndarray]]
    kernel_distance: float
    threshold: float

    @property
    def flagged(self) -> int:
        return len(self.eigenpairs)

    def projector(self) -> np.ndarray:
        if not self.eigenpairs:
            return np.zeros((0, 0))
        vecs = np.stack([v for _, v in self.eigenpairs], axis=1)
        return vecs @ vecs.conj().T


def _flagged(y: OpVar, w: np.ndarray, threshold: float) -> Tuple[np.ndarray, np.ndarray]:
    f_y, _ = invert_with_condition(y.cauchy(w))
    vals, vecs = sla.eigh(imag_part(f_y - w))
    mask = vals < threshold
    return vals[mask], vecs[:, mask]


def atom_diagnostic(y: OpVar, w: MatrixLike, threshold: float = 1e-6) -> AtomDiagnostic:
    """Flag directions where Im F_y(w) fails to exceed Im w; diagnostic only."""
    if not isinstance(w, HalfPlanePoint):
        w = HalfPlanePoint.certify(w)
    vals, vecs = _flagged(y, w.m, threshold)
    other = w.m + 1j * np.eye(w.dim)
    _, vecs2 = _flagged(y, other, threshold)

    def proj(v: np.ndarray) -> np.ndarray:
        return v @ v.conj().T if v.size else np.zeros((w.dim, w.dim), dtype=complex)

    distance = opnorm(proj(vecs) - proj(vecs2))
    pairs = [(float(vals[k]), vecs[:, k]) for k in range(vals.size)]
    if pairs:
        log.debug("atom diagnostic flagged {} direction(s), kernel distance {:.2e}", len(pairs), distance)
    return AtomDiagnostic(pairs, distance, threshold)
