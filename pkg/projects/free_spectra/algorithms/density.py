"""Spectral density of a self-adjoint polynomial in free variables.

Linearize p, evaluate the M_N-valued Cauchy transform of b_1⊗x_1 + … + b_n⊗x_n
at Λ_ε(z) − b_0 by subordination, read off the (1,1) entry and apply Stieltjes
inversion.
"""

from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid, trapezoid
from tqdm import tqdm

from projects.free_spectra.algorithms.linearize import selfadjoint_linearize
from projects.free_spectra.algorithms.spectra import OpVar, OpVarLeaf
from projects.free_spectra.algorithms.subordination import Conv, ConvResult, SolverConfig, convolve
from projects.free_spectra.errors import (
    DimensionMismatchError,
    FreeSpectraError,
    MeasureSpecError,
    NotSelfAdjointError,
    SolverError,
)
from projects.free_spectra.models.linalg import HalfPlanePoint
from projects.free_spectra.models.linearization import Linearization
from projects.free_spectra.models.measures import SpectralMeasure
from projects.free_spectra.models.ncpoly import NCPolynomial, is_selfadjoint
from shared.config import get_config
from shared.logging import get_logger
from shared.metrics import MetricsCollector, Timer

log = get_logger(__name__)

NEGATIVE_TOL = 1e-9
CONTINUATION_START = 1e-1
GRID_GRAMMAR = "lo:hi:count"
_GRID = re.compile(r"^\s*([^:]+):([^:]+):(\d+)\s*$")


def parse_grid(text: str) -> np.ndarray:
    m = _GRID.match(text)
    if not m:
        raise MeasureSpecError(f"malformed grid {text!r}; expected {GRID_GRAMMAR}")
    try:
        lo, hi = float(m.group(1)), float(m.group(2))
    except ValueError:
        raise MeasureSpecError(f"malformed grid bounds in {text!r}") from None
    count = int(m.group(3))
    if not hi > lo or count < 2:
        raise MeasureSpecError(f"grid needs lo < hi and count >= 2, got {text!r}")
    return np.linspace(lo, hi, count)


def norm_bound(p: NCPolynomial, measures: Sequence[SpectralMeasure]) -> float:
    """‖P‖ ≤ Σ |c| Π ‖x_i‖."""
    radii = [mu.norm_bound for mu in measures]
    return float(sum(abs(t.coeff) * np.prod([radii[i - 1] for i in t.word]) for t in p.terms))


def auto_grid(
    p: NCPolynomial,
    measures: Sequence[SpectralMeasure],
    points: Optional[int] = None,
    padding: Optional[float] = None,
) -> np.ndarray:
    config = get_config()
    points = points or config.GRID_POINTS
    padding = config.GRID_PADDING if padding is None else padding
    bound = norm_bound(p, measures) * (1.0 + padding)
    return np.linspace(-bound, bound, points)


@dataclass
class ProblemSpec:
    p: NCPolynomial
    measures: Tuple[SpectralMeasure, ...]
    grid: Optional[np.ndarray] = None
    epsilon: float = field(default_factory=lambda: get_config().DENSITY_EPSILON)
    solver: SolverConfig = field(default_factory=SolverConfig)
    method: str = "compact"
    richardson: bool = False

    def __post_init__(self):
        self.measures = tuple(self.measures)
        if not is_selfadjoint(self.p):
            raise NotSelfAdjointError(f"polynomial is not self-adjoint: {self.p}")
        if len(self.measures) != self.p.n_vars:
            raise DimensionMismatchError(f"{len(self.measures)} measures given for {self.p.n_vars} variables")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.grid is not None:
            grid = np.asarray(self.grid, dtype=float)
            if grid.ndim != 1 or grid.size == 0:
                raise ValueError("grid must be a non-empty 1-d array")
            if np.any(np.diff(grid) <= 0):
                raise ValueError("grid must be strictly increasing")
            self.grid = grid

    def resolved_grid(self) -> np.ndarray:
        return self.grid if self.grid is not None else auto_grid(self.p, self.measures)

    def describe(self) -> Dict[str, Any]:
        return {
            "polynomial": str(self.p),
            "n_vars": self.p.n_vars,
            "measures": [mu.to_dict() for mu in self.measures],
            "epsilon": self.epsilon,
            "tol": self.solver.tol,
            "max_iter": self.solver.max_iter,
            "method": self.method,
            "richardson": self.richardson,
        }


@dataclass
class PointResult:
    t: float
    g: complex
    iterations: int
    residual: float
    omega1: Optional[np.ndarray] = None


class SpectralPipeline:
    """Linearization, operator-valued leaves and their convolution for one problem."""

    def __init__(self, spec: ProblemSpec, linearization: Optional[Linearization] = None):
        self.spec = spec
        self.linearization = linearization or selfadjoint_linearize(spec.p, spec.method)
        lin = self.linearization
        self.leaves: List[OpVarLeaf] = [
            OpVarLeaf(lin.b(j), spec.measures[j - 1]) for j in range(1, lin.n_vars + 1) if np.any(lin.b(j))
        ]
        self.root: OpVar = convolve(self.leaves, spec.solver)

    @property
    def dim(self) -> int:
        return self.linearization.dim

    def lambda_eps(self, z: complex, epsilon: float) -> np.ndarray:
        """diag(z, iε, …, iε), with z lifted to z + iε when it is real."""
        z = complex(z)
        if z.imag <= 0:
            z = complex(z.real, epsilon)
        lam = 1j * epsilon * np.eye(self.dim, dtype=complex)
        lam[0, 0] = z
        return lam

    def beta(self, z: complex, epsilon: float) -> HalfPlanePoint:
        return HalfPlanePoint.certify(self.lambda_eps(z, epsilon) - self.linearization.b0)

    def evaluate(self, z: complex, epsilon: float, warm_start: Optional[np.ndarray] = None) -> PointResult:
        beta = self.beta(z, epsilon)
        if isinstance(self.root, Conv):
            result: ConvResult = self.root.solve(beta, self.spec.solver.with_warm_start(warm_start))
            g, iterations, residual, omega = result.G_sum, result.iterations, result.residual, result.omega1
        else:
            g, iterations, residual, omega = self.root.cauchy(beta), 0, 0.0, None
        return PointResult(float(np.real(z)), complex(g[0, 0]), iterations, residual, omega)


def cauchy_of_polynomial(spec: ProblemSpec, z: complex, epsilon: Optional[float] = None) -> complex:
    """G_P(z) ≈ [G_{L_P}(Λ_ε(z))]_{1,1}."""
    epsilon = spec.epsilon if epsilon is None else epsilon
    z = complex(z)
    if z.imag < 0:
        raise ValueError("z must lie in the closed upper half-plane")
    try:
        return SpectralPipeline(spec).evaluate(z, epsilon).g
    except SolverError as exc:
        exc.t, exc.epsilon = z.real, epsilon
        raise


@dataclass
class DensityCurve:
    t: np.ndarray
    rho: np.ndarray
    raw_rho: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray
    epsilon_used: float
    mass: float
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.t.tolist(), self.rho.tolist()))

    @property
    def gaps(self) -> List[float]:
        return self.t[~np.isfinite(self.rho)].tolist()

    @property
    def finite(self) -> Tuple[np.ndarray, np.ndarray]:
        mask = np.isfinite(self.rho)
        return self.t[mask], self.rho[mask]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": self.t,
                "rho": self.rho,
                "raw_rho": self.raw_rho,
                "iterations": self.iterations,
                "residual": self.residual,
            }
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, metadata: Optional[Dict[str, Any]] = None) -> "DensityCurve":
        metadata = metadata or {}
        t = frame["t"].to_numpy(dtype=float)
        rho = frame["rho"].to_numpy(dtype=float)
        curve = cls(
            t=t,
            rho=rho,
            raw_rho=frame.get("raw_rho", frame["rho"]).to_numpy(dtype=float),
            iterations=frame.get("iterations", pd.Series(np.zeros(len(t)))).to_numpy(),
            residual=frame.get("residual", pd.Series(np.zeros(len(t)))).to_numpy(dtype=float),
            epsilon_used=float(metadata.get("epsilon_used", np.nan)),
            mass=0.0,
            metadata=metadata,
        )
        curve.mass = curve_mass(curve)
        return curve


def curve_mass(curve: DensityCurve) -> float:
    """Trapezoid mass over the finite points; gaps are bridged, see ``uncovered_width``."""
    t, rho = curve.finite
    return float(trapezoid(rho, t)) if t.size > 1 else 0.0


def uncovered_width(curve: DensityCurve) -> float:
    """Total length of grid intervals with a gap at either end."""
    finite = np.isfinite(curve.rho)
    open_cells = ~(finite[:-1] & finite[1:])
    return float(np.diff(curve.t)[open_cells].sum())


def mass_ok(curve: DensityCurve, tol: float) -> bool:
    return not curve.gaps and abs(curve.mass - 1.0) <= tol


def _continuation_seed(pipeline: SpectralPipeline, t: float, epsilon: float) -> Optional[np.ndarray]:
    """ω₁ at (t, ε) reached by stepping ε down from CONTINUATION_START by decades."""
    if not isinstance(pipeline.root, Conv):
        return None
    warm: Optional[np.ndarray] = None
    step = CONTINUATION_START
    while step > 10.0 * epsilon:
        try:
            warm = pipeline.evaluate(t, step, warm).omega1
        except (FreeSpectraError, np.linalg.LinAlgError) as exc:
            log.debug("continuation stopped at t={:.6g}, eps={:.1e}: {}", t, step, exc)
            break
        step *= 0.1
    return warm


def _sweep(spec: ProblemSpec, grid: np.ndarray, progress: bool = False) -> List[Optional[PointResult]]:
    """Ascending sweep; each point warm-starts from the last successful one.

    Without a previous point the start is found by ε-continuation, so a chunk
    begins the same way wherever it sits in the grid.
    """
    pipeline = SpectralPipeline(spec)
    results: List[Optional[PointResult]] = []
    warm: Optional[np.ndarray] = None
    for t in tqdm(grid, desc="density", disable=not progress):
        if warm is None:
            warm = _continuation_seed(pipeline, float(t), spec.epsilon)
        try:
            point = pipeline.evaluate(t, spec.epsilon, warm)
            if spec.richardson:
                coarse = pipeline.evaluate(t, 2.0 * spec.epsilon, point.omega1)
                point.g = 2.0 * point.g - coarse.g
                point.iterations += coarse.iterations
                point.residual = max(point.residual, coarse.residual)
        except (FreeSpectraError, np.linalg.LinAlgError) as exc:
            log.warning("density gap at t={:.6g} (eps={:.1e}): {}", t, spec.epsilon, exc)
            results.append(None)
            continue
        warm = point.omega1
        results.append(point)
    return results


def _chunks(grid: np.ndarray, count: int) -> List[np.ndarray]:
    return [chunk for chunk in np.array_split(grid, count) if chunk.size]


def density_grid(
    spec: ProblemSpec,
    workers: Optional[int] = None,
    chunks: Optional[int] = None,
    progress: bool = False,
) -> DensityCurve:
    """ρ(t) = −Im G_P(t + i0)/π on the grid; failed points become NaN gaps.

    With ``workers`` > 1 the grid is split into contiguous chunks swept in
    separate processes; results depend on the chunking only through warm starts.
    """
    grid = spec.resolved_grid()
    workers = max(1, workers or 1)
    metrics = MetricsCollector()

    with Timer("density_grid") as timer:
        if workers == 1 and not chunks:
            results = _sweep(spec, grid, progress)
        else:
            parts = _chunks(grid, chunks or workers)
            with ProcessPoolExecutor(max_workers=min(workers, len(parts))) as pool:
                futures = [pool.submit(_sweep, spec, part) for part in parts]
                results = [r for f in futures for r in f.result()]

    raw = np.full(grid.shape, np.nan)
    iterations = np.zeros(grid.shape, dtype=int)
    residual = np.full(grid.shape, np.nan)
    for k, point in enumerate(results):
        if point is None:
            continue
        raw[k] = -point.g.imag / np.pi
        iterations[k] = point.iterations
        residual[k] = point.residual
        metrics.record("iterations", point.iterations)
        metrics.record("residual", point.residual)

    rho = raw.copy()
    negative = np.isfinite(raw) & (raw < 0)
    for k in np.flatnonzero(negative):
        if raw[k] < -NEGATIVE_TOL:
            log.warning("clamping negative density {:.3e} at t={:.6g}", raw[k], grid[k])
        else:
            log.debug("clamping negative density {:.3e} at t={:.6g}", raw[k], grid[k])
    rho[negative] = 0.0

    curve = DensityCurve(grid, rho, raw, iterations, residual, spec.epsilon, 0.0)
    curve.mass = curve_mass(curve)
    mass_tol = get_config().MASS_TOL
    curve.metadata = {
        **spec.describe(),
        "epsilon_used": spec.epsilon,
        "grid": {"lo": float(grid[0]), "hi": float(grid[-1]), "count": int(grid.size)},
        "mass": curve.mass,
        "mass_ok": mass_ok(curve, mass_tol),
        "gaps": curve.gaps,
        "uncovered_width": uncovered_width(curve),
        "clamped": int(negative.sum()),
        "solver": metrics.get_summary(),
        "runtime": timer.duration,
    }
    log.info("density sweep: {} points in {:.2f}s, mass {:.6f}, {} gap(s)", grid.size, timer.duration, curve.mass, len(curve.gaps))
    if not curve.metadata["mass_ok"]:
        log.warning("density mass check failed: mass {:.6f} (1 ± {:g}), {} gap(s)", curve.mass, mass_tol, len(curve.gaps))
    return curve


def moments_from_density(curve: DensityCurve, k_max: int) -> List[float]:
    """∫ t^k ρ(t) dt for k = 1..k_max by the trapezoid rule."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    t, rho = curve.finite
    return [float(trapezoid(t**k * rho, t)) for k in range(1, k_max + 1)]


def cdf_from_density(curve: DensityCurve) -> Callable[[np.ndarray], np.ndarray]:
    """Cumulative trapezoid of ρ, made monotone and clipped to [0, 1]."""
    t, rho = curve.finite
    if t.size < 2:
        raise ValueError("need at least two finite density points for a CDF")
    cumulative = np.clip(np.maximum.accumulate(cumulative_trapezoid(rho, t, initial=0.0)), 0.0, 1.0)
    right = float(cumulative[-1])

    def cdf(x):
        return np.interp(x, t, cumulative, left=0.0, right=right)

    return cdf
