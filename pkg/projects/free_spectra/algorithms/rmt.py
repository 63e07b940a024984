"""Random-matrix Monte Carlo: sampled ensembles, pooled spectra and KS distances."""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.stats
from tqdm import tqdm

from projects.free_spectra.errors import BudgetExceededError, MeasureSpecError, NotSelfAdjointError
from projects.free_spectra.models.measures import MarchenkoPastur, Semicircle, SpectralMeasure
from projects.free_spectra.models.ncpoly import NCPolynomial, evaluate, is_selfadjoint
from shared.config import get_config
from shared.logging import get_logger

log = get_logger(__name__)

ENSEMBLE_GRAMMAR = "gue | wishart(ratio)"
_WISHART = re.compile(r"^wishart\(\s*((?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)\s*\)$")


@dataclass(frozen=True)
class Ensemble:
    kind: str
    ratio: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gue", "wishart"):
            raise MeasureSpecError(f"unknown ensemble {self.kind!r}; expected {ENSEMBLE_GRAMMAR}")
        if not self.ratio > 0:
            raise MeasureSpecError("wishart ratio must be positive")

    def limit_measure(self) -> SpectralMeasure:
        return Semicircle(0.0, 1.0) if self.kind == "gue" else MarchenkoPastur(self.ratio, 1.0)

    def spec_string(self) -> str:
        return "gue" if self.kind == "gue" else f"wishart({self.ratio!r})"


def parse_ensemble(text: str) -> Ensemble:
    text = text.strip().lower()
    if text == "gue":
        return Ensemble("gue")
    if m := _WISHART.match(text):
        return Ensemble("wishart", float(m.group(1)))
    raise MeasureSpecError(f"unrecognised ensemble {text!r}; expected {ENSEMBLE_GRAMMAR}")


@dataclass(frozen=True)
class EnsembleSpec:
    ensembles: Tuple[Ensemble, ...]
    n: int = field(default_factory=lambda: get_config().MC_SIZE)
    reps: int = field(default_factory=lambda: get_config().MC_REPS)
    seed: int = field(default_factory=lambda: get_config().DEFAULT_SEED)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("matrix size n must be >= 2")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not self.ensembles:
            raise ValueError("at least one ensemble is required")
        largest = max(
            self.n if e.kind == "gue" else max(self.n, int(round(e.ratio * self.n))) for e in self.ensembles
        )
        limit = get_config().MAX_MATRIX_SIZE
        if largest > limit:
            raise BudgetExceededError(f"matrix dimension {largest} exceeds the budget of {limit}")

    @property
    def n_vars(self) -> int:
        return len(self.ensembles)


def _generator(seed: int, rep: int, var: int) -> np.random.Generator:
    # counter-based stream per (seed, rep, variable)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, rep, var])))


def sample_gue(rng: np.random.Generator, n: int) -> np.ndarray:
    """Hermitian with E|H_ij|² = 1/n, so the spectrum approaches semicircle(0, 1)."""
    a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    return (a + a.conj().T) / np.sqrt(2.0 * n)


def sample_wishart(rng: np.random.Generator, n: int, ratio: float) -> np.ndarray:
    """(1/n) A A* with A of size n × round(ratio·n), approaching mp(ratio, 1)."""
    m = max(1, int(round(ratio * n)))
    a = (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2.0)
    w = a @ a.conj().T / n
    return 0.5 * (w + w.conj().T)


def sample_ensemble(spec: EnsembleSpec, rep: int) -> List[np.ndarray]:
    """One independent draw of every variable; deterministic in (seed, rep)."""
    if not 0 <= rep < spec.reps:
        raise ValueError(f"rep must be in [0, {spec.reps}), got {rep}")
    mats = []
    for var, ensemble in enumerate(spec.ensembles, start=1):
        rng = _generator(spec.seed, rep, var)
        if ensemble.kind == "gue":
            mats.append(sample_gue(rng, spec.n))
        else:
            mats.append(sample_wishart(rng, spec.n, ensemble.ratio))
    return mats


def _rep_spectrum(p: NCPolynomial, spec: EnsembleSpec, rep: int) -> np.ndarray:
    value = evaluate(p, sample_ensemble(spec, rep))
    value = 0.5 * (value + value.conj().T)
    return sla.eigvalsh(value, check_finite=False)


def empirical_spectrum(
    p: NCPolynomial,
    spec: EnsembleSpec,
    workers: Optional[int] = None,
    progress: bool = False,
) -> np.ndarray:
    """Sorted eigenvalues of p at sampled matrices, pooled over all reps."""
    if not is_selfadjoint(p):
        raise NotSelfAdjointError(f"polynomial is not self-adjoint: {p}")
    if spec.n_vars != p.n_vars:
        raise ValueError(f"{spec.n_vars} ensembles given for {p.n_vars} variables")
    workers = max(1, min(workers or get_config().MAX_WORKERS, spec.reps))
    log.info("sampling {} reps of n={} with {} worker(s)", spec.reps, spec.n, workers)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_rep_spectrum, p, spec, rep) for rep in range(spec.reps)]
        spectra = [f.result() for f in tqdm(futures, desc="reps", disable=not progress)]
    pooled = np.sort(np.concatenate(spectra))
    log.info("pooled {} eigenvalues in [{:.4f}, {:.4f}]", pooled.size, pooled[0], pooled[-1])
    return pooled


def ks_distance(samples: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """sup_i max(|i/n − F(s_i)|, |(i−1)/n − F(s_i)|) over sorted samples."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("ks_distance needs at least one sample")
    return float(scipy.stats.kstest(samples, cdf).statistic)


def empirical_moments(samples: Sequence[float], k_max: int) -> List[float]:
    samples = np.asarray(samples, dtype=float)
    return [float(np.mean(samples**k)) for k in range(1, k_max + 1)]
