"""Self-adjoint linearizations of non-commutative polynomials and their numerical verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from projects.free_spectra.errors import FreeSpectraError, NotSelfAdjointError
from projects.free_spectra.models.linearization import BlockLayout, Linearization
from projects.free_spectra.models.ncpoly import NCPolynomial, Word, evaluate, is_selfadjoint, parse
from shared.config import get_config
from shared.logging import get_logger

log = get_logger(__name__)

METHODS = ("anderson", "compact")


def linearize_monomial(word: Sequence[int], coeff: complex, n_vars: int) -> Linearization:
    """k×k companion pattern with ``coeff`` in the top-row entry; 2×2 for k <= 1."""
    word = tuple(int(i) for i in word)
    if any(not 1 <= i <= n_vars for i in word):
        raise ValueError(f"word {word} uses variables outside 1..{n_vars}")
    k = len(word)
    size = max(k, 2)
    coeffs = np.zeros((n_vars + 1, size, size), dtype=complex)
    if k == 0:
        coeffs[0, 0, 1] = coeff
        coeffs[0, 1, 0] = 1.0
        coeffs[0, 1, 1] = -1.0
    elif k == 1:
        coeffs[word[0], 0, 1] = coeff
        coeffs[0, 1, 0] = 1.0
        coeffs[0, 1, 1] = -1.0
    else:
        coeffs[word[0], 0, k - 1] = coeff
        for r in range(1, k):
            coeffs[word[r], r, k - 1 - r] += 1.0
            coeffs[0, r, k - r] = -1.0
    return Linearization(coeffs, BlockLayout(size, (size,), "monomial"))


def linearize_sum(parts: Sequence[Linearization]) -> Linearization:
    """Stack parts sharing the first row and column; N = ΣN_i − k + 1."""
    if not parts:
        raise ValueError("linearize_sum needs at least one part")
    if len(parts) == 1:
        return parts[0]
    n_vars = parts[0].n_vars
    if any(part.n_vars != n_vars for part in parts):
        raise ValueError("all parts must have the same number of variables")
    dim = sum(part.dim for part in parts) - len(parts) + 1
    coeffs = np.zeros((n_vars + 1, dim, dim), dtype=complex)
    offset = 1
    for part in parts:
        m = part.dim - 1
        block = slice(offset, offset + m)
        coeffs[:, 0, 0] += part.corner
        coeffs[:, 0, block] = part.u
        coeffs[:, block, 0] = part.v
        coeffs[:, block, block] = part.Q
        offset += m
    sub_parts: Tuple[int, ...] = tuple(part.dim for part in parts)
    return Linearization(coeffs, BlockLayout(dim, sub_parts, parts[0].layout.method))


def _double(lin: Linearization) -> Linearization:
    """[[0, u, v*], [u*, 0, Q*], [v, Q, 0]]: linearizes q + q* from a linearization of q."""
    m = lin.dim - 1
    dim = 2 * m + 1
    coeffs = np.zeros((lin.n_vars + 1, dim, dim), dtype=complex)
    top, bottom = slice(1, 1 + m), slice(1 + m, dim)
    u, v, q = lin.u, lin.v, lin.Q
    coeffs[:, 0, top] = u
    coeffs[:, 0, bottom] = np.conj(v)
    coeffs[:, top, 0] = np.conj(u)
    coeffs[:, bottom, 0] = v
    coeffs[:, top, bottom] = np.conj(np.swapaxes(q, 1, 2))
    coeffs[:, bottom, top] = q
    return Linearization(coeffs, BlockLayout(dim, (dim,), "anderson"))


def _palindrome(word: Word, coeff: float, n_vars: int) -> Linearization:
    """Self-adjoint k×k pattern for a palindromic word with real coefficient."""
    k = len(word)
    root = np.sqrt(abs(coeff))
    sign = 1.0 if coeff > 0 else -1.0
    coeffs = np.zeros((n_vars + 1, k, k), dtype=complex)
    coeffs[word[0], 0, k - 1] = root
    coeffs[word[0], k - 1, 0] = root
    # Q carries sign(c); its pattern is symmetric because the word is a palindrome.
    for r in range(1, k - 1):
        coeffs[word[r], r, k - 1 - r] += sign
    for r in range(1, k):
        coeffs[0, r, k - r] = -sign
    return Linearization(coeffs, BlockLayout(k, (k,), "compact"))


def _affine_block(affine: Dict[Word, complex], n_vars: int) -> Linearization:
    """[[0, a/2, 1], [a/2, 0, -1], [1, -1, 0]] linearizes the affine part a."""
    coeffs = np.zeros((n_vars + 1, 3, 3), dtype=complex)
    for word, c in affine.items():
        j = word[0] if word else 0
        coeffs[j, 0, 1] += 0.5 * c.real
        coeffs[j, 1, 0] += 0.5 * c.real
    coeffs[0, 0, 2] = coeffs[0, 2, 0] = 1.0
    coeffs[0, 1, 2] = coeffs[0, 2, 1] = -1.0
    return Linearization(coeffs, BlockLayout(3, (3,), "compact"))


def _affine_bypass(p: NCPolynomial) -> Linearization:
    coeffs = np.zeros((p.n_vars + 1, 1, 1), dtype=complex)
    for term in p.terms:
        j = term.word[0] if term.word else 0
        coeffs[j, 0, 0] = term.coeff.real
    return Linearization(coeffs, BlockLayout(1, (1,), "affine"))


def _anderson(p: NCPolynomial) -> Linearization:
    half = p.scale(0.5)
    parts = [linearize_monomial(t.word, t.coeff, p.n_vars) for t in half.terms]
    return _double(linearize_sum(parts))


def _compact(p: NCPolynomial) -> Linearization:
    coeffs = p.as_dict()
    affine = {w: c for w, c in coeffs.items() if len(w) <= 1}
    units: List[Linearization] = []
    seen = set()
    for term in p.terms:
        word = term.word
        if len(word) <= 1 or word in seen:
            continue
        mirrored = tuple(reversed(word))
        seen.update({word, mirrored})
        if word == mirrored:
            units.append(_palindrome(word, term.coeff.real, p.n_vars))
        else:
            units.append(_double(linearize_monomial(word, term.coeff, p.n_vars)))
    if any(c != 0 for c in affine.values()):
        units.append(_affine_block(affine, p.n_vars))
    lin = linearize_sum(units)
    return Linearization(lin.coeffs, BlockLayout(lin.dim, lin.layout.parts, "compact"))


def selfadjoint_linearize(p: NCPolynomial, method: str = "anderson") -> Linearization:
    """Hermitian linearization of a self-adjoint polynomial.

    ``anderson`` doubles a linearization of q = p/2 (dimension 2N_q − 1); ``compact``
    groups palindromic words and adjoint pairs first. Degree ≤ 1 input returns N = 1.
    """
    if method not in METHODS:
        raise ValueError(f"unknown linearization method {method!r}; expected one of {METHODS}")
    if not is_selfadjoint(p):
        raise NotSelfAdjointError(f"polynomial is not self-adjoint: {p}")
    if p.is_constant:
        raise FreeSpectraError("constant polynomials have no linearization to compute")
    if p.degree <= 1:
        lin = _affine_bypass(p)
    elif method == "compact":
        lin = _compact(p)
    else:
        lin = _anderson(p)
    log.debug("linearized degree-{} polynomial: N={} method={}", p.degree, lin.dim, lin.layout.method)
    return lin


REFERENCE_POLYNOMIALS = {
    "anticommutator": ("x1*x2 + x2*x1", 2),
    "perturbed_anticommutator": ("x1*x2 + x2*x1 + x1^2", 2),
    "cubic_three_variable": ("x1*x2*x1 + x2*x3*x2 + x3*x1*x3", 3),
}


def reference_polynomial(name: str) -> NCPolynomial:
    try:
        text, n_vars = REFERENCE_POLYNOMIALS[name]
    except KeyError:
        raise KeyError(f"unknown reference example {name!r}; known: {sorted(REFERENCE_POLYNOMIALS)}") from None
    return parse(text, n_vars)


def reference_linearization(name: str) -> Linearization:
    """Hand-written linearizations of the worked examples."""
    if name == "anticommutator":
        coeffs = np.zeros((3, 3, 3))
        coeffs[0] = [[0, 0, 0], [0, 0, -1], [0, -1, 0]]
        coeffs[1] = [[0, 1, 0], [1, 0, 0], [0, 0, 0]]
        coeffs[2] = [[0, 0, 1], [0, 0, 0], [1, 0, 0]]
        return Linearization(coeffs, BlockLayout(3, (3,), "reference"))
    if name == "perturbed_anticommutator":
        coeffs = np.zeros((3, 3, 3))
        coeffs[0] = [[0, 0, 0], [0, 0, -1], [0, -1, 0]]
        coeffs[1] = [[0, 1, 0.5], [1, 0, 0], [0.5, 0, 0]]
        coeffs[2] = [[0, 0, 1], [0, 0, 0], [1, 0, 0]]
        return Linearization(coeffs, BlockLayout(3, (3,), "reference"))
    if name == "cubic_three_variable":
        coeffs = np.zeros((4, 7, 7))
        for block, (outer, inner) in enumerate([(1, 2), (2, 3), (3, 1)]):
            a, b = 1 + 2 * block, 2 + 2 * block
            coeffs[outer, 0, b] = coeffs[outer, b, 0] = 1.0
            coeffs[inner, a, a] = 1.0
            coeffs[0, a, b] = coeffs[0, b, a] = -1.0
        return Linearization(coeffs, BlockLayout(7, (3, 3, 3), "reference"))
    raise KeyError(f"unknown reference example {name!r}; known: {sorted(REFERENCE_POLYNOMIALS)}")


# -- verification -------------------------------------------------------------


@dataclass
class TrialFailure:
    trial: int
    message: str


@dataclass
class LinearizationReport:
    trials: int
    dim: int
    tolerance: float
    max_corner_residual: float = 0.0
    max_schur_residual: float = 0.0
    min_q_singular_value: float = float("inf")
    failures: List[TrialFailure] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(self.max_corner_residual, self.max_schur_residual)

    @property
    def passed(self) -> bool:
        return not self.failures and self.max_residual < self.tolerance

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "dim": self.dim,
            "tolerance": self.tolerance,
            "max_corner_residual": self.max_corner_residual,
            "max_schur_residual": self.max_schur_residual,
            "min_q_singular_value": self.min_q_singular_value,
            "passed": self.passed,
            "failures": [{"trial": f.trial, "message": f.message} for f in self.failures],
        }


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    """GUE-style Hermitian matrix with spectrum of order one."""
    a = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    return (a + a.conj().T) / np.sqrt(2.0 * dim)


def verify_linearization(
    lin: Linearization,
    p: NCPolynomial,
    trials: int = 50,
    dim: int = 4,
    rng_seed: Optional[int] = None,
    tolerance: float = 1e-10,
) -> LinearizationReport:
    """Check the resolvent corner identity and the Schur factorization at random points.

    Q invertibility is certified only at the sampled points.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if lin.n_vars != p.n_vars:
        raise ValueError(f"linearization has {lin.n_vars} variables, polynomial has {p.n_vars}")
    seed = get_config().DEFAULT_SEED if rng_seed is None else rng_seed
    report = LinearizationReport(trials=trials, dim=dim, tolerance=tolerance)
    eye = np.eye(dim, dtype=complex)

    for trial in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
        mats = [random_hermitian(rng, dim) for _ in range(p.n_vars)]
        z = rng.uniform(-2.0, 2.0) + 1j * rng.uniform(0.5, 2.0)
        try:
            poly = evaluate(p, mats)
            resolvent = sla.solve(z * eye - poly, eye)
            pencil = lin.pencil(mats)
            lam = np.zeros_like(pencil)
            lam[:dim, :dim] = z * eye
            rhs = np.zeros((pencil.shape[0], dim), dtype=complex)
            rhs[:dim] = eye
            corner = sla.solve(lam - pencil, rhs)[:dim]
            corner_res = np.linalg.norm(corner - resolvent, 2) / (1.0 + np.linalg.norm(resolvent, 2))

            if lin.dim == 1:
                schur = pencil
            else:
                u, v, q = pencil[:dim, dim:], pencil[dim:, :dim], pencil[dim:, dim:]
                sv = np.linalg.svd(q, compute_uv=False)
                report.min_q_singular_value = min(report.min_q_singular_value, float(sv[-1]))
                schur = pencil[:dim, :dim] - u @ sla.solve(q, v)
            schur_res = np.linalg.norm(schur - poly, 2) / (1.0 + np.linalg.norm(poly, 2))
        except (np.linalg.LinAlgError, ValueError) as exc:
            report.failures.append(TrialFailure(trial, str(exc)))
            continue
        report.max_corner_residual = max(report.max_corner_residual, float(corner_res))
        report.max_schur_residual = max(report.max_schur_residual, float(schur_res))

    if not report.passed:
        log.warning(
            "linearization check failed: corner {:.2e}, schur {:.2e}, {} failed trials",
            report.max_corner_residual,
            report.max_schur_residual,
            len(report.failures),
        )
    return report
