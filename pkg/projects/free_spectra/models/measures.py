"""Compactly supported spectral measures on the real line.

Every measure splits into a finite atomic part and zero or more continuous
parts. Continuous parts are described in a quadrature-friendly parameter
``s`` so that square-root edges become smooth integrands.
"""

from __future__ import annotations

import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from projects.free_spectra.errors import MeasureSpecError


@dataclass(frozen=True)
class ContinuousPart:
    """Density on ``[lo, hi]`` written as ∫ f(t) ρ(t) dt = ∫ f(t(s)) weight(s) ds over ``breaks``.

    ``breaks`` are the initial quadrature panel edges in parameter space; ``to_s`` maps
    a point of ``[lo, hi]`` back to the parameter so callers can add their own edges.
    """

    lo: float
    hi: float
    breaks: np.ndarray
    to_t: Callable[[np.ndarray], np.ndarray]
    weight: Callable[[np.ndarray], np.ndarray]
    to_s: Optional[Callable[[np.ndarray], np.ndarray]] = None


def _arccos_inverse(center: float, radius: float) -> Callable[[np.ndarray], np.ndarray]:
    def to_s(t):
        return np.arccos(np.clip((np.asarray(t, dtype=float) - center) / radius, -1.0, 1.0))

    return to_s


def _arcsine_chart(lo: float, hi: float, density: Callable[[np.ndarray], np.ndarray]) -> ContinuousPart:
    # t = c + r cos(s), s in [0, pi]; a square-root edge times sin(s) is smooth.
    center, radius = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def to_t(s):
        return center + radius * np.cos(s)

    def weight(s):
        return density(to_t(s)) * radius * np.sin(s)

    breaks = np.array([0.0, 0.5 * np.pi, np.pi])
    return ContinuousPart(lo, hi, breaks, to_t, weight, _arccos_inverse(center, radius))


def _edge_product(z, lo: float, hi: float):
    """√(z−lo)·√(z−hi) with principal roots: ~ z at infinity, cut on [lo, hi]."""
    z = np.asarray(z, dtype=complex)
    return np.sqrt(z - lo) * np.sqrt(z - hi)


class SpectralMeasure(ABC):
    """Probability measure with compact support."""

    kind: str = "measure"

    @abstractmethod
    def support_bounds(self) -> Tuple[float, float]:
        """Closed interval containing the support."""

    def atoms(self) -> List[Tuple[float, float]]:
        return []

    def continuous_parts(self) -> List[ContinuousPart]:
        return []

    def cauchy_closed_form(self, z) -> Optional[np.ndarray]:
        """Exact scalar Cauchy transform when one is known, else None."""
        return None

    def free_cumulants_closed_form(self, k_max: int) -> Optional[List[float]]:
        return None

    @property
    def norm_bound(self) -> float:
        lo, hi = self.support_bounds()
        return max(abs(lo), abs(hi))

    def moments(self, k_max: int, order: int = 32) -> List[float]:
        """m_0..m_k_max by exact atom sums and Gauss–Legendre on continuous parts."""
        powers = np.arange(k_max + 1)
        total = np.zeros(k_max + 1)
        for t, w in self.atoms():
            total += w * float(t) ** powers
        nodes, weights = np.polynomial.legendre.leggauss(order)
        for part in self.continuous_parts():
            for s0, s1 in zip(part.breaks[:-1], part.breaks[1:]):
                half = 0.5 * (s1 - s0)
                s = s0 + half * (nodes + 1.0)
                t = part.to_t(s)
                f = part.weight(s) * weights * half
                total += (f[None, :] * t[None, :] ** powers[:, None]).sum(axis=1)
        return total.tolist()

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """JSON description sufficient to rebuild the measure."""

    @abstractmethod
    def spec_string(self) -> str:
        """Text in the measure mini-grammar."""


@dataclass(frozen=True)
class Semicircle(SpectralMeasure):
    mean: float = 0.0
    variance: float = 1.0
    kind: str = field(default="semicircle", init=False)

    def __post_init__(self):
        if not self.variance > 0:
            raise MeasureSpecError(f"semicircle variance must be positive, got {self.variance}")

    @property
    def radius(self) -> float:
        return 2.0 * np.sqrt(self.variance)

    def support_bounds(self) -> Tuple[float, float]:
        return self.mean - self.radius, self.mean + self.radius

    def density(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.clip(self.radius**2 - (t - self.mean) ** 2, 0.0, None)
        return np.sqrt(inside) / (2.0 * np.pi * self.variance)

    def continuous_parts(self) -> List[ContinuousPart]:
        return [_arcsine_chart(*self.support_bounds(), self.density)]

    def cauchy_closed_form(self, z):
        lo, hi = self.support_bounds()
        z = np.asarray(z, dtype=complex)
        return 2.0 / (z - self.mean + _edge_product(z, lo, hi))

    def free_cumulants_closed_form(self, k_max: int) -> List[float]:
        kappa = [0.0] * k_max
        if k_max >= 1:
            kappa[0] = self.mean
        if k_max >= 2:
            kappa[1] = self.variance
        return kappa

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "mean": self.mean, "variance": self.variance}

    def spec_string(self) -> str:
        return f"semicircle({self.mean!r},{self.variance!r})"


@dataclass(frozen=True)
class MarchenkoPastur(SpectralMeasure):
    """Free Poisson law with rate ``ratio`` and jump size ``scale``.

    For ratio < 1 the law carries an atom of mass 1 - ratio at 0, exposed in ``atoms()``.
    """

    ratio: float = 1.0
    scale: float = 1.0
    kind: str = field(default="mp", init=False)

    def __post_init__(self):
        if not self.ratio > 0 or not self.scale > 0:
            raise MeasureSpecError(f"mp parameters must be positive, got ({self.ratio}, {self.scale})")

    def edges(self) -> Tuple[float, float]:
        root = np.sqrt(self.ratio)
        return self.scale * (1.0 - root) ** 2, self.scale * (1.0 + root) ** 2

    def support_bounds(self) -> Tuple[float, float]:
        lo, hi = self.edges()
        if self.has_atom:
            lo = 0.0
        return lo, hi

    @property
    def has_atom(self) -> bool:
        return self.ratio < 1.0

    def atoms(self) -> List[Tuple[float, float]]:
        return [(0.0, 1.0 - self.ratio)] if self.has_atom else []

    def density(self, t):
        """Continuous part only (mass min(1, ratio))."""
        lo, hi = self.edges()
        t = np.asarray(t, dtype=float)
        inside = np.clip((hi - t) * (t - lo), 0.0, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.sqrt(inside) / (2.0 * np.pi * self.scale * t)
        return np.where(inside > 0, rho, 0.0)

    def continuous_parts(self) -> List[ContinuousPart]:
        lo, hi = self.edges()
        scale = self.scale

        # sqrt((hi-t)(t-lo)) = radius*sin(s), so the weight is radius^2 sin^2(s) / (2 pi scale t).
        center, radius = 0.5 * (lo + hi), 0.5 * (hi - lo)

        def to_t(s):
            return center + radius * np.cos(s)

        def weight(s):
            t = to_t(s)
            root = radius * np.sin(s)
            with np.errstate(divide="ignore", invalid="ignore"):
                w = root * root / (2.0 * np.pi * scale * t)
            return np.where(t > 0, w, 0.0)

        breaks = np.array([0.0, 0.5 * np.pi, np.pi])
        return [ContinuousPart(lo, hi, breaks, to_t, weight, _arccos_inverse(center, radius))]

    def cauchy_closed_form(self, z):
        lo, hi = self.edges()
        z = np.asarray(z, dtype=complex)
        return 2.0 / (z + self.scale * (1.0 - self.ratio) + _edge_product(z, lo, hi))

    def free_cumulants_closed_form(self, k_max: int) -> List[float]:
        return [self.ratio * self.scale**n for n in range(1, k_max + 1)]

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "ratio": self.ratio, "scale": self.scale}

    def spec_string(self) -> str:
        return f"mp({self.ratio!r},{self.scale!r})"


@dataclass(frozen=True, eq=False)
class Atomic(SpectralMeasure):
    points: Tuple[float, ...]
    weights: Tuple[float, ...]
    kind: str = field(default="atoms", init=False)

    def __post_init__(self):
        if len(self.points) == 0 or len(self.points) != len(self.weights):
            raise MeasureSpecError("atoms need matching, non-empty points and weights")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0) or not np.all(np.isfinite(self.points)):
            raise MeasureSpecError("atom weights must be positive and points finite")
        if abs(w.sum() - 1.0) > 1e-9:
            raise MeasureSpecError(f"atom weights sum to {w.sum():.12g}, expected 1")
        object.__setattr__(self, "points", tuple(float(t) for t in self.points))
        object.__setattr__(self, "weights", tuple(float(x) for x in w / w.sum()))

    @classmethod
    def point_mass(cls, c: float) -> "Atomic":
        return cls((float(c),), (1.0,))

    def support_bounds(self) -> Tuple[float, float]:
        return min(self.points), max(self.points)

    def atoms(self) -> List[Tuple[float, float]]:
        return list(zip(self.points, self.weights))

    def cauchy_closed_form(self, z):
        z = np.asarray(z, dtype=complex)
        t = np.asarray(self.points)
        w = np.asarray(self.weights)
        return (w / (z[..., None] - t)).sum(axis=-1)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "points": list(self.points), "weights": list(self.weights)}

    def spec_string(self) -> str:
        return "atoms(" + ",".join(f"({t!r},{w!r})" for t, w in self.atoms()) + ")"

    def __eq__(self, other) -> bool:
        return isinstance(other, Atomic) and self.atoms() == other.atoms()

    def __hash__(self) -> int:
        return hash(tuple(self.atoms()))


@dataclass(frozen=True, eq=False)
class Tabulated(SpectralMeasure):
    """Piecewise-linear density through (grid, values), renormalized to unit trapezoid mass."""

    grid: np.ndarray
    values: np.ndarray
    source: Optional[str] = None
    kind: str = field(default="table", init=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise MeasureSpecError("table needs at least two (t, density) rows")
        if not np.all(np.isfinite(grid)) or not np.all(np.isfinite(values)):
            raise MeasureSpecError("table entries must be finite")
        if np.any(np.diff(grid) <= 0):
            raise MeasureSpecError("table grid must be strictly increasing")
        if np.any(values < 0):
            raise MeasureSpecError("table density must be non-negative")
        mass = trapezoid(values, grid)
        if not mass > 0:
            raise MeasureSpecError("table density has zero mass")
        grid.setflags(write=False)
        values = values / mass
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_csv(cls, path) -> "Tabulated":
        path = Path(path)
        try:
            frame = pd.read_csv(path, comment="#")
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
            raise MeasureSpecError(f"cannot read density table {path}: {exc}") from exc
        if {"t", "density"} <= set(frame.columns):
            frame = frame[["t", "density"]]
        elif frame.shape[1] >= 2:
            frame = frame.iloc[:, :2]
        else:
            raise MeasureSpecError(f"{path}: expected columns t,density")
        frame = frame.apply(pd.to_numeric, errors="coerce")
        if frame.isna().any().any():
            raise MeasureSpecError(f"{path}: non-numeric entries")
        return cls(frame.iloc[:, 0].to_numpy(), frame.iloc[:, 1].to_numpy(), source=str(path))

    @property
    def mass(self) -> float:
        return float(trapezoid(self.values, self.grid))

    def support_bounds(self) -> Tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    def density(self, t):
        return np.interp(t, self.grid, self.values, left=0.0, right=0.0)

    def continuous_parts(self) -> List[ContinuousPart]:
        def identity(s):
            return s

        lo, hi = self.support_bounds()
        return [ContinuousPart(lo, hi, self.grid, identity, self.density, identity)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "source": self.source,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
        }

    def spec_string(self) -> str:
        return f"table({self.source})" if self.source else "table(<inline>)"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Tabulated)
            and np.array_equal(self.grid, other.grid)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        return hash((self.grid.tobytes(), self.values.tobytes()))


# -- mini-grammar -------------------------------------------------------------

_FLOAT = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_SEMICIRCLE = re.compile(rf"^semicircle\(\s*({_FLOAT})\s*,\s*({_FLOAT})\s*\)$")
_MP = re.compile(rf"^mp\(\s*({_FLOAT})\s*,\s*({_FLOAT})\s*\)$")
_ATOMS = re.compile(r"^atoms\((.*)\)$")
_ATOM = re.compile(rf"\(\s*({_FLOAT})\s*,\s*({_FLOAT})\s*\)")
_TABLE = re.compile(r"^table\((.+)\)$")

MEASURE_GRAMMAR = (
    "semicircle(mean,var) | mp(lambda,scale) | atoms((t1,w1),(t2,w2),...) | table(path)"
)


def parse_measure(text: str, base_dir: Optional[Path] = None) -> SpectralMeasure:
    """Parse a measure spec string; relative table paths resolve against ``base_dir``."""
    text = text.strip()
    if m := _SEMICIRCLE.match(text):
        return Semicircle(float(m.group(1)), float(m.group(2)))
    if m := _MP.match(text):
        return MarchenkoPastur(float(m.group(1)), float(m.group(2)))
    if m := _ATOMS.match(text):
        body = m.group(1)
        pairs = _ATOM.findall(body)
        if not pairs or _ATOM.sub("", body).replace(",", "").strip():
            raise MeasureSpecError(f"malformed atoms list: {text!r}")
        return Atomic(tuple(float(t) for t, _ in pairs), tuple(float(w) for _, w in pairs))
    if m := _TABLE.match(text):
        path = Path(m.group(1).strip())
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return Tabulated.from_csv(path)
    raise MeasureSpecError(f"unrecognised measure {text!r}; expected {MEASURE_GRAMMAR}")


def measure_from_dict(data: Dict[str, Any]) -> SpectralMeasure:
    kind = data.get("kind")
    if kind == "semicircle":
        return Semicircle(data["mean"], data["variance"])
    if kind == "mp":
        return MarchenkoPastur(data["ratio"], data["scale"])
    if kind == "atoms":
        return Atomic(tuple(data["points"]), tuple(data["weights"]))
    if kind == "table":
        return Tabulated(np.asarray(data["grid"]), np.asarray(data["values"]), source=data.get("source"))
    raise MeasureSpecError(f"unknown measure kind {kind!r}")
