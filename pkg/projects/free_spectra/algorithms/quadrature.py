"""Adaptive Gauss–Legendre integration of matrix-valued kernels against a density."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np

from projects.free_spectra.errors import QuadratureError
from projects.free_spectra.models.measures import ContinuousPart

Kernel = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=16)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@dataclass
class QuadResult:
    value: np.ndarray
    error: float
    panels: int


def integrate(
    kernel: Kernel,
    part: ContinuousPart,
    tol: float = 1e-10,
    order: int = 24,
    max_panels: int = 4096,
) -> QuadResult:
    """∫ kernel(t) ρ(t) dt over one continuous part.

    ``kernel`` maps an array of m points to an array of shape (m, ...). Panels are
    refined level by level; a panel is accepted when its coarse and two-half
    estimates agree to its share of ``tol``. The tolerance is absolute up to
    integrals of magnitude one and relative beyond.
    """
    nodes, weights = gauss_legendre(order)
    breaks = np.asarray(part.breaks, dtype=float)
    active: List[Tuple[float, float]] = list(zip(breaks[:-1], breaks[1:]))
    total_width = float(breaks[-1] - breaks[0])
    value: Optional[np.ndarray] = None
    error = 0.0
    accepted = 0

    while active:
        lo = np.array([a for a, _ in active])
        hi = np.array([b for _, b in active])
        mid = 0.5 * (lo + hi)
        # coarse panel, left half, right half
        starts = np.stack([lo, lo, mid], axis=1)
        halves = np.stack([0.5 * (hi - lo), 0.25 * (hi - lo), 0.25 * (hi - lo)], axis=1)
        s = starts[..., None] + halves[..., None] * (nodes + 1.0)
        w = halves[..., None] * weights * part.weight(s)
        f = kernel(part.to_t(s.ravel()))
        f = f.reshape(s.shape + f.shape[1:])
        sums = np.einsum("pkn,pkn...->pk...", w.astype(complex), f)
        coarse = sums[:, 0]
        fine = sums[:, 1] + sums[:, 2]
        diff = np.abs(coarse - fine).reshape(len(active), -1).max(axis=1)

        estimate = fine.sum(axis=0) + (value if value is not None else 0.0)
        scale = max(1.0, float(np.max(np.abs(estimate))))
        budget = tol * scale * (hi - lo) / total_width
        done = (diff <= budget) | (hi - lo <= 1e-14 * max(1.0, total_width))

        accepted_sum = fine[done].sum(axis=0)
        value = accepted_sum if value is None else value + accepted_sum
        error += float(diff[done].sum())
        accepted += int(done.sum())

        pending = ~done
        if accepted + 2 * int(pending.sum()) > max_panels and pending.any():
            raise QuadratureError(
                f"panel budget {max_panels} exhausted",
                achieved=error + float(diff[pending].sum()),
            )
        active = [(a, m) for a, m in zip(lo[pending], mid[pending])]
        active += [(m, b) for m, b in zip(mid[pending], hi[pending])]

    assert value is not None
    return QuadResult(value=value, error=error, panels=accepted)
