"""Moments of polynomials in free variables from non-crossing partitions.

Mixed free cumulants of free variables vanish, so the moment of a word is a sum
over non-crossing partitions of its positions whose blocks each carry a single
letter, weighted by the product of the per-letter free cumulants.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Number
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from projects.free_spectra.errors import BudgetExceededError
from projects.free_spectra.models.measures import SpectralMeasure
from projects.free_spectra.models.ncpoly import NCPolynomial, Word
from shared.config import get_config


def free_cumulants_to_moments(kappa: Sequence[Number]) -> List[Number]:
    """m_0..m_K from κ_1..κ_K via m_n = Σ_s κ_s [z^{n−s}] M(z)^s."""
    k_max = len(kappa)
    moments: List[Number] = [1]
    for n in range(1, k_max + 1):
        total: Number = 0
        # power[j] = [z^j] M(z)^s, built up in s
        power: List[Number] = [1] + [0] * n
        for s in range(1, n + 1):
            power = _convolve(power, moments, n - s)
            total += kappa[s - 1] * power[n - s]
        moments.append(total)
    return moments


def moments_to_free_cumulants(moments: Sequence[Number]) -> List[Number]:
    """κ_1..κ_K from m_0..m_K (m_0 must be 1)."""
    k_max = len(moments) - 1
    kappa: List[Number] = []
    for n in range(1, k_max + 1):
        rest: Number = 0
        power: List[Number] = [1] + [0] * n
        for s in range(1, n):
            power = _convolve(power, moments, n - s)
            rest += kappa[s - 1] * power[n - s]
        kappa.append(moments[n] - rest)
    return kappa


def _convolve(power: Sequence[Number], moments: Sequence[Number], upto: int) -> List[Number]:
    out: List[Number] = [0] * (len(power))
    for j in range(upto + 1):
        acc: Number = 0
        for i in range(j + 1):
            if i < len(moments):
                acc += power[j - i] * moments[i]
        out[j] = acc
    return out


@dataclass(frozen=True)
class CumulantSpec:
    """Free cumulants κ_1..κ_K for each variable (index 0 holds variable 1)."""

    cumulants: Tuple[Tuple[Number, ...], ...]

    @property
    def n_vars(self) -> int:
        return len(self.cumulants)

    @property
    def order(self) -> int:
        return min(len(k) for k in self.cumulants)

    def kappa(self, var: int, size: int) -> Number:
        seq = self.cumulants[var - 1]
        if size > len(seq):
            raise BudgetExceededError(f"cumulant κ_{size} of x{var} requested, only {len(seq)} available")
        return seq[size - 1]

    @classmethod
    def semicircular(cls, n_vars: int, order: int = 16) -> "CumulantSpec":
        seq = tuple(1 if n == 2 else 0 for n in range(1, order + 1))
        return cls((seq,) * n_vars)

    @classmethod
    def free_poisson(cls, rate: Number = 1, jump: Number = 1, order: int = 16) -> "CumulantSpec":
        return cls((tuple(rate * jump**n for n in range(1, order + 1)),))

    @classmethod
    def from_measures(cls, measures: Sequence[SpectralMeasure], order: int = 16) -> "CumulantSpec":
        """Closed forms where known, otherwise the moment–cumulant recursion on numeric moments."""
        out = []
        for mu in measures:
            closed = mu.free_cumulants_closed_form(order)
            if closed is None:
                closed = moments_to_free_cumulants(mu.moments(order))
            out.append(tuple(_exact(c) for c in closed))
        return cls(tuple(out))

    def combine(self, other: "CumulantSpec") -> "CumulantSpec":
        return CumulantSpec(self.cumulants + other.cumulants)


def _exact(value: float) -> Number:
    """Keep integers exact so the oracle runs in rational arithmetic when it can."""
    if isinstance(value, (int, Fraction)):
        return value
    if float(value).is_integer():
        return int(value)
    return float(value)


def _check_word(word: Sequence[int], cumulants: CumulantSpec) -> Word:
    word = tuple(int(i) for i in word)
    limit = get_config().ORACLE_MAX_WORD
    if len(word) > limit:
        raise BudgetExceededError(f"word of length {len(word)} exceeds the oracle budget of {limit}")
    if any(not 1 <= i <= cumulants.n_vars for i in word):
        raise ValueError(f"word {word} uses variables outside 1..{cumulants.n_vars}")
    return word


def word_moment(word: Sequence[int], cumulants: CumulantSpec) -> Number:
    """φ(x_{i1} ⋯ x_{ik}) by recursion on the block containing the first position."""
    word = _check_word(word, cumulants)

    @lru_cache(maxsize=None)
    def interval(a: int, b: int) -> Number:
        if a >= b:
            return 1
        return chain(a, b, 1)

    @lru_cache(maxsize=None)
    def chain(last: int, b: int, size: int) -> Number:
        # block so far ends at ``last`` with ``size`` elements; close it or extend it
        letter = word[last]
        total = cumulants.kappa(letter, size) * interval(last + 1, b)
        for nxt in range(last + 1, b):
            if word[nxt] == letter:
                total += interval(last + 1, nxt) * chain(nxt, b, size + 1)
        return total

    return interval(0, len(word))


def non_crossing_partitions(n: int, start: int = 0) -> Iterator[List[Tuple[int, ...]]]:
    """All non-crossing partitions of {start, ..., start+n-1} as lists of blocks."""
    if n == 0:
        yield []
        return
    rest = list(range(start + 1, start + n))
    for mask in range(1 << len(rest)):
        chosen = [start] + [rest[i] for i in range(len(rest)) if mask >> i & 1]
        gaps = []
        for left, right in zip(chosen, chosen[1:] + [start + n]):
            if right - left - 1 > 0:
                gaps.append((left + 1, right - left - 1))
        yield from _product_of_gaps(tuple(chosen), gaps)


def _product_of_gaps(block: Tuple[int, ...], gaps: List[Tuple[int, int]]) -> Iterator[List[Tuple[int, ...]]]:
    if not gaps:
        yield [block]
        return
    (first, length), remaining = gaps[0], gaps[1:]
    for inner in non_crossing_partitions(length, first):
        for tail in _product_of_gaps(block, remaining):
            yield inner + tail


def word_moment_enumerated(word: Sequence[int], cumulants: CumulantSpec) -> Number:
    """Same value as ``word_moment`` by explicit enumeration of partitions."""
    word = _check_word(word, cumulants)
    total: Number = 0
    for partition in non_crossing_partitions(len(word)):
        weight: Number = 1
        for block in partition:
            letters = {word[i] for i in block}
            if len(letters) != 1:
                weight = 0
                break
            weight *= cumulants.kappa(word[block[0]], len(block))
            if weight == 0:
                break
        total += weight
    return total


def expand_power(p: NCPolynomial, k: int, max_words: Optional[int] = None) -> Dict[Word, complex]:
    """Coefficients of p^k, failing early when the word count would exceed the budget."""
    if k < 0:
        raise ValueError("k must be non-negative")
    limit = max_words or get_config().ORACLE_MAX_WORDS
    current: Dict[Word, complex] = {(): 1.0}
    base = p.as_dict()
    for _ in range(k):
        if len(current) * len(base) > limit:
            raise BudgetExceededError(f"expanding p^{k} exceeds {limit} words")
        nxt: Dict[Word, complex] = {}
        for w1, c1 in current.items():
            for w2, c2 in base.items():
                word = w1 + w2
                nxt[word] = nxt.get(word, 0j) + c1 * c2
        current = {w: c for w, c in nxt.items() if c != 0}
    return current


def poly_moment(p: NCPolynomial, cumulants: CumulantSpec, k: int) -> float:
    """φ(p^k) as a real number (p self-adjoint)."""
    if cumulants.n_vars < p.n_vars:
        raise ValueError(f"cumulants given for {cumulants.n_vars} variables, polynomial has {p.n_vars}")
    total = 0j
    for word, coeff in expand_power(p, k).items():
        total += coeff * complex(word_moment(word, cumulants))
    return float(total.real)


def poly_moments(p: NCPolynomial, cumulants: CumulantSpec, k_max: int) -> List[float]:
    return [poly_moment(p, cumulants, k) for k in range(1, k_max + 1)]
