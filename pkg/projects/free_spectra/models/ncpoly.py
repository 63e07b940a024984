"""Polynomials in non-commuting variables X_1..X_n.

Text grammar (explicit ``*`` required, juxtaposition is an error)::

    expression : expression + term | expression - term | term
    term       : term * factor | factor
    factor     : - factor | + factor | power
    power      : atom ^ INTEGER | atom
    atom       : NUMBER | IMAG | VAR | ( expression )

``VAR`` is ``x<k>`` with 1 <= k <= n_vars; ``IMAG`` is a number suffixed by ``i``
(or a bare ``i``); ``^k`` requires an integer k >= 1 and expands to a repeated
product. The canonical printer emits the same grammar.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
import ply.lex as lex
import ply.yacc as yacc

from projects.free_spectra.errors import (
    DimensionMismatchError,
    PolynomialSyntaxError,
    PowerError,
    VariableIndexError,
)

Word = Tuple[int, ...]


def _word_order(word: Word) -> Tuple[int, Word]:
    return (len(word), word)


@dataclass(frozen=True)
class Monomial:
    coeff: complex
    word: Word

    @property
    def degree(self) -> int:
        return len(self.word)

    def adjoint(self) -> "Monomial":
        return Monomial(complex(self.coeff).conjugate(), tuple(reversed(self.word)))


@dataclass(frozen=True)
class NCPolynomial:
    """Canonical polynomial: terms sorted by (degree, word), no duplicate words, no zero coefficients."""

    n_vars: int
    terms: Tuple[Monomial, ...] = ()

    def __post_init__(self):
        if self.n_vars < 1:
            raise ValueError("n_vars must be positive")
        for term in self.terms:
            if any(not 1 <= i <= self.n_vars for i in term.word):
                raise VariableIndexError(f"variable index in {term.word} outside 1..{self.n_vars}")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_dict(cls, n_vars: int, coeffs: Dict[Word, complex]) -> "NCPolynomial":
        terms = tuple(
            Monomial(complex(c), tuple(w))
            for w, c in sorted(coeffs.items(), key=lambda item: _word_order(item[0]))
            if complex(c) != 0
        )
        return cls(n_vars, terms)

    @classmethod
    def from_terms(cls, n_vars: int, terms: Iterable[Tuple[complex, Sequence[int]]]) -> "NCPolynomial":
        acc: Dict[Word, complex] = {}
        for coeff, word in terms:
            key = tuple(int(i) for i in word)
            acc[key] = acc.get(key, 0j) + complex(coeff)
        return cls.from_dict(n_vars, acc)

    @classmethod
    def constant(cls, n_vars: int, value: complex) -> "NCPolynomial":
        return cls.from_dict(n_vars, {(): value})

    @classmethod
    def variable(cls, n_vars: int, index: int) -> "NCPolynomial":
        return cls.from_dict(n_vars, {(index,): 1.0})

    def as_dict(self) -> Dict[Word, complex]:
        return {t.word: t.coeff for t in self.terms}

    # -- algebra ----------------------------------------------------------

    def _check(self, other: "NCPolynomial") -> None:
        if other.n_vars != self.n_vars:
            raise DimensionMismatchError(f"n_vars differ: {self.n_vars} vs {other.n_vars}")

    def _coerce(self, other) -> "NCPolynomial":
        if isinstance(other, NCPolynomial):
            self._check(other)
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return NCPolynomial.constant(self.n_vars, complex(other))
        return NotImplemented

    def __add__(self, other) -> "NCPolynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        acc = self.as_dict()
        for t in other.terms:
            acc[t.word] = acc.get(t.word, 0j) + t.coeff
        return NCPolynomial.from_dict(self.n_vars, acc)

    __radd__ = __add__

    def __neg__(self) -> "NCPolynomial":
        return self.scale(-1.0)

    def __sub__(self, other) -> "NCPolynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "NCPolynomial":
        return (-self) + other

    def __mul__(self, other) -> "NCPolynomial":
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(complex(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        acc: Dict[Word, complex] = {}
        for a in self.terms:
            for b in other.terms:
                word = a.word + b.word
                acc[word] = acc.get(word, 0j) + a.coeff * b.coeff
        return NCPolynomial.from_dict(self.n_vars, acc)

    def __rmul__(self, other) -> "NCPolynomial":
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(complex(other))
        return NotImplemented

    def __pow__(self, k: int) -> "NCPolynomial":
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise PowerError(f"power must be a non-negative integer, got {k!r}")
        result = NCPolynomial.constant(self.n_vars, 1.0)
        for _ in range(int(k)):
            result = result * self
        return result

    def scale(self, factor: complex) -> "NCPolynomial":
        return NCPolynomial.from_dict(self.n_vars, {t.word: t.coeff * factor for t in self.terms})

    # -- structure --------------------------------------------------------

    @property
    def degree(self) -> int:
        return max((t.degree for t in self.terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(t.degree == 0 for t in self.terms)

    def variables(self) -> List[int]:
        return sorted({i for t in self.terms for i in t.word})

    def __str__(self) -> str:
        return format_polynomial(self)


def adjoint(p: NCPolynomial) -> NCPolynomial:
    """Reverse every word and conjugate every coefficient."""
    return NCPolynomial.from_terms(p.n_vars, ((t.adjoint().coeff, t.adjoint().word) for t in p.terms))


def is_selfadjoint(p: NCPolynomial) -> bool:
    return adjoint(p) == p


def evaluate(p: NCPolynomial, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Substitute square matrices for the variables, products taken in word order."""
    if len(mats) != p.n_vars:
        raise DimensionMismatchError(f"expected {p.n_vars} matrices, got {len(mats)}")
    arrays = [np.asarray(m, dtype=complex) for m in mats]
    dim = arrays[0].shape[0]
    for a in arrays:
        if a.ndim != 2 or a.shape != (dim, dim):
            raise DimensionMismatchError(f"all matrices must be {dim}x{dim}, got {a.shape}")

    result = np.zeros((dim, dim), dtype=complex)
    for term in p.terms:
        factors = [arrays[i - 1] for i in term.word]
        if not factors:
            product = np.eye(dim, dtype=complex)
        elif len(factors) == 1:
            product = factors[0]
        elif len(factors) == 2:
            product = factors[0] @ factors[1]
        else:
            product = np.linalg.multi_dot(factors)
        result += term.coeff * product
    return result


# -- printing ---------------------------------------------------------------


def _format_real(x: float) -> str:
    return repr(float(x))


def _format_coeff(c: complex) -> Tuple[str, str]:
    """Return (sign, magnitude text) for a coefficient; magnitude '' means unit."""
    if c.imag == 0:
        sign = "-" if c.real < 0 else "+"
        mag = abs(c.real)
        return sign, "" if mag == 1 else _format_real(mag)
    if c.real == 0:
        sign = "-" if c.imag < 0 else "+"
        return sign, f"{_format_real(abs(c.imag))}i"
    imag_sign = "-" if c.imag < 0 else "+"
    return "+", f"({_format_real(c.real)}{imag_sign}{_format_real(abs(c.imag))}i)"


def format_polynomial(p: NCPolynomial) -> str:
    """Canonical text in the parser's grammar."""
    if p.is_zero:
        return "0"
    pieces: List[str] = []
    for k, term in enumerate(p.terms):
        sign, mag = _format_coeff(term.coeff)
        letters = [f"x{i}" for i in term.word]
        if not letters:
            body = mag or "1"
        elif mag:
            body = "*".join([mag] + letters)
        else:
            body = "*".join(letters)
        if k == 0:
            pieces.append(body if sign == "+" else f"-{body}")
        else:
            pieces.append(f" {sign} {body}")
    return "".join(pieces)


# -- parsing ----------------------------------------------------------------

_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"


class _PolynomialGrammar:
    tokens = ("IMAG", "NUMBER", "VAR", "PLUS", "MINUS", "TIMES", "POWER", "LPAREN", "RPAREN")

    t_PLUS = r"\+"
    t_MINUS = r"-"
    t_TIMES = r"\*"
    t_POWER = r"\^"
    t_LPAREN = r"\("
    t_RPAREN = r"\)"
    t_ignore = " \t"

    def t_VAR(self, t):
        r"x\d+"
        t.value = int(t.value[1:])
        return t

    def t_IMAG(self, t):
        r"(?:(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)?i"
        t.value = t.value[:-1] or "1"
        return t

    def t_NUMBER(self, t):
        r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
        return t

    def t_error(self, t):
        raise PolynomialSyntaxError(f"illegal character {t.value[0]!r}", t.lexpos)

    def p_expression_plus(self, p):
        "expression : expression PLUS term"
        p[0] = p[1] + p[3]

    def p_expression_minus(self, p):
        "expression : expression MINUS term"
        p[0] = p[1] - p[3]

    def p_expression_term(self, p):
        "expression : term"
        p[0] = p[1]

    def p_term_times(self, p):
        "term : term TIMES factor"
        p[0] = p[1] * p[3]

    def p_term_factor(self, p):
        "term : factor"
        p[0] = p[1]

    def p_factor_neg(self, p):
        "factor : MINUS factor"
        p[0] = -p[2]

    def p_factor_pos(self, p):
        "factor : PLUS factor"
        p[0] = p[2]

    def p_factor_power(self, p):
        "factor : power"
        p[0] = p[1]

    def p_power(self, p):
        "power : atom POWER NUMBER"
        text = p[3]
        if not text.isdigit() or int(text) < 1:
            raise PowerError(f"power must be an integer >= 1, got {text!r}", p.lexpos(3))
        p[0] = p[1] ** int(text)

    def p_power_atom(self, p):
        "power : atom"
        p[0] = p[1]

    def p_atom_number(self, p):
        "atom : NUMBER"
        p[0] = NCPolynomial.constant(self.n_vars, float(p[1]))

    def p_atom_imag(self, p):
        "atom : IMAG"
        p[0] = NCPolynomial.constant(self.n_vars, 1j * float(p[1]))

    def p_atom_var(self, p):
        "atom : VAR"
        index = p[1]
        if not 1 <= index <= self.n_vars:
            raise VariableIndexError(f"variable x{index} outside x1..x{self.n_vars}", p.lexpos(1))
        p[0] = NCPolynomial.variable(self.n_vars, index)

    def p_atom_group(self, p):
        "atom : LPAREN expression RPAREN"
        p[0] = p[2]

    def p_error(self, tok):
        if tok is None:
            raise PolynomialSyntaxError("unexpected end of input", len(self.text))
        raise PolynomialSyntaxError(f"unexpected {tok.value!r}", tok.lexpos)

    def __init__(self):
        self.n_vars = 1
        self.text = ""
        self.lexer = lex.lex(module=self, errorlog=lex.NullLogger())
        self.parser = yacc.yacc(module=self, write_tables=False, debug=False, errorlog=yacc.NullLogger())
        self._lock = threading.Lock()

    def parse(self, text: str, n_vars: int) -> NCPolynomial:
        with self._lock:
            self.n_vars = n_vars
            self.text = text
            return self.parser.parse(text, lexer=self.lexer.clone())


_grammar: _PolynomialGrammar | None = None
_grammar_lock = threading.Lock()


def _get_grammar() -> _PolynomialGrammar:
    global _grammar
    with _grammar_lock:
        if _grammar is None:
            _grammar = _PolynomialGrammar()
        return _grammar


def parse(text: str, n_vars: int) -> NCPolynomial:
    """Parse polynomial text into canonical form."""
    if n_vars < 1:
        raise ValueError("n_vars must be positive")
    if not text.strip():
        raise PolynomialSyntaxError("empty polynomial", 0)
    return _get_grammar().parse(text, n_vars)
