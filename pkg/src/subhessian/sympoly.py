"""Sparse multivariate polynomials with exact rational coefficients.

A :class:`Polynomial` in ``n`` variables stores a mapping from exponent
tuples to non-zero :class:`fractions.Fraction` coefficients. Arithmetic is
exact; floats only appear when a polynomial is evaluated at float points.

Variables are indexed from 0 in the Python API and printed 1-based
(``x1 ... xn``) in the canonical text form, e.g.::

    3/2 * x1^2 x3^1 + -1 * x2^1 + 5
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "Polynomial",
    "DimensionError",
    "poly_combine",
    "poly_diff",
    "poly_eval",
    "poly_is_zero",
    "random_polynomial",
]


class DimensionError(ValueError):
    """Operands live in different ambient dimensions."""


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, float):
        # exact binary value of the float
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as an exact coefficient")


def _glex_key(alpha: tuple[int, ...]):
    return (sum(alpha), alpha)


class Polynomial:
    """Immutable sparse polynomial over Q in ``n`` variables."""

    __slots__ = ("_n", "_terms", "_hash")

    def __init__(self, n: int, terms: Mapping[tuple[int, ...], object] | None = None):
        if n < 1:
            raise ValueError("dimension must be positive")
        clean: dict[tuple[int, ...], Fraction] = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n or any(a < 0 for a in alpha):
                raise ValueError(f"bad exponent {alpha} for dimension {n}")
            c = _as_fraction(c)
            if c:
                clean[alpha] = clean.get(alpha, Fraction(0)) + c
                if not clean[alpha]:
                    del clean[alpha]
        self._n = n
        self._terms = clean
        self._hash = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> Polynomial:
        return cls(n)

    @classmethod
    def constant(cls, n: int, c) -> Polynomial:
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n: int, j: int) -> Polynomial:
        """The coordinate function ``x_j`` (0-based ``j``)."""
        if not 0 <= j < n:
            raise IndexError(f"variable index {j} out of range for n={n}")
        alpha = [0] * n
        alpha[j] = 1
        return cls(n, {tuple(alpha): 1})

    @classmethod
    def _raw(cls, n: int, terms: dict) -> Polynomial:
        # trusted path: terms already pruned and normalised
        p = cls.__new__(cls)
        p._n = n
        p._terms = terms
        p._hash = None
        return p

    # -- basic queries ----------------------------------------------------
    @property
    def n(self) -> int:
        return self._n

    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(a) for a in self._terms), default=-1)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.n == other.n and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Polynomial.constant(self.n, other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self._terms.items())))
        return self._hash

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other.n != self.n:
                raise DimensionError(f"dimension mismatch: {self.n} vs {other.n}")
            return other
        return Polynomial.constant(self.n, other)

    def __add__(self, other) -> Polynomial:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for alpha, c in other._terms.items():
            s = out.get(alpha, 0) + c
            if s:
                out[alpha] = s
            else:
                out.pop(alpha, None)
        return Polynomial._raw(self.n, out)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial._raw(self.n, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other) -> Polynomial:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> Polynomial:
        return (-self) + other

    def scale(self, c) -> Polynomial:
        c = _as_fraction(c)
        if not c:
            return Polynomial.zero(self.n)
        return Polynomial._raw(self.n, {a: v * c for a, v in self._terms.items()})

    def __mul__(self, other) -> Polynomial:
        if not isinstance(other, Polynomial):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        if other.n != self.n:
            raise DimensionError(f"dimension mismatch: {self.n} vs {other.n}")
        out: dict[tuple[int, ...], Fraction] = {}
        for a, ca in self._terms.items():
            for b, cb in other._terms.items():
                key = tuple(x + y for x, y in zip(a, b))
                out[key] = out.get(key, 0) + ca * cb
        return Polynomial._raw(self.n, {k: v for k, v in out.items() if v})

    def __rmul__(self, other) -> Polynomial:
        return self.__mul__(other)

    def __truediv__(self, other) -> Polynomial:
        return self.scale(1 / _as_fraction(other))

    def __pow__(self, k: int) -> Polynomial:
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        out = Polynomial.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- calculus ---------------------------------------------------------
    def diff(self, j: int) -> Polynomial:
        """Partial derivative with respect to ``x_j`` (0-based)."""
        if not 0 <= j < self.n:
            raise IndexError(f"coordinate index {j} out of range for n={self.n}")
        out = {}
        for alpha, c in self._terms.items():
            a = alpha[j]
            if a:
                beta = alpha[:j] + (a - 1,) + alpha[j + 1:]
                out[beta] = c * a
        return Polynomial._raw(self.n, out)

    def gradient(self) -> list[Polynomial]:
        return [self.diff(j) for j in range(self.n)]

    # -- evaluation -------------------------------------------------------
    def __call__(self, x):
        """Evaluate at a point or a stack of points.

        ``x`` may be a length-``n`` sequence (exact when all entries are
        rational) or an array of shape ``(..., n)`` for vectorised float
        evaluation.
        """
        if isinstance(x, np.ndarray) and x.dtype != object:
            return self._eval_array(x)
        x = list(x)
        if len(x) != self.n:
            raise DimensionError(f"point has {len(x)} coordinates, expected {self.n}")
        exact = all(isinstance(v, (int, Fraction)) for v in x)
        total = Fraction(0) if exact else 0.0
        for alpha, c in self._terms.items():
            term = c if exact else float(c)
            for v, a in zip(x, alpha):
                if a:
                    term = term * v**a
            total += term
        return total

    def _eval_array(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.n:
            raise DimensionError(f"points have {x.shape[-1]} coordinates, expected {self.n}")
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        powers: dict[tuple[int, int], np.ndarray] = {}
        for alpha, c in self._terms.items():
            term = float(c)
            for j, a in enumerate(alpha):
                if a:
                    key = (j, a)
                    if key not in powers:
                        powers[key] = x[..., j] ** a
                    term = term * powers[key]
            out = out + term
        return out

    # -- text form --------------------------------------------------------
    def sorted_terms(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """Terms in graded-lex order, highest first."""
        return sorted(self._terms.items(), key=lambda t: _glex_key(t[0]), reverse=True)

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for alpha, c in self.sorted_terms():
            mono = " ".join(f"x{j + 1}^{a}" for j, a in enumerate(alpha) if a)
            parts.append(f"{c} * {mono}" if mono else f"{c}")
        return " + ".join(parts)

    _TERM = re.compile(r"^\s*([-+]?\d+(?:/\d+)?)\s*(?:\*\s*(.*))?$")
    _VAR = re.compile(r"^x(\d+)\^(\d+)$")

    @classmethod
    def from_text(cls, text: str, n: int) -> Polynomial:
        text = text.strip()
        if text == "0":
            return cls.zero(n)
        terms: dict[tuple[int, ...], Fraction] = {}
        for chunk in text.split(" + "):
            m = cls._TERM.match(chunk)
            if not m:
                raise ValueError(f"cannot parse term {chunk!r}")
            coeff = Fraction(m.group(1))
            alpha = [0] * n
            for tok in (m.group(2) or "").split():
                vm = cls._VAR.match(tok)
                if not vm:
                    raise ValueError(f"cannot parse monomial factor {tok!r}")
                j = int(vm.group(1)) - 1
                if not 0 <= j < n:
                    raise ValueError(f"variable x{j + 1} out of range for n={n}")
                alpha[j] += int(vm.group(2))
            key = tuple(alpha)
            terms[key] = terms.get(key, Fraction(0)) + coeff
        return cls(n, terms)

    def __repr__(self) -> str:
        return f"Polynomial({self.n}, {self.to_text()!r})"

    __str__ = to_text


def poly_combine(op: str, p: Polynomial, q) -> Polynomial:
    """Exact ``add``, ``mul`` or ``scale`` of two operands."""
    if op == "add":
        return p + q
    if op == "mul":
        return p * q
    if op == "scale":
        return p.scale(q)
    raise ValueError(f"unknown operation {op!r}")


def poly_diff(p: Polynomial, j: int) -> Polynomial:
    return p.diff(j)


def poly_eval(p: Polynomial, x):
    return p(x)


def poly_is_zero(p: Polynomial) -> bool:
    return p.is_zero()


def random_polynomial(
    n: int,
    rng: np.random.Generator,
    max_degree: int = 4,
    n_terms: int = 6,
    max_num: int = 9,
    max_den: int = 6,
) -> Polynomial:
    """A random polynomial with small rational coefficients.

    Monomials are drawn uniformly by total degree, then by a random
    composition of that degree over the ``n`` variables.
    """
    terms: dict[tuple[int, ...], Fraction] = {}
    for _ in range(n_terms):
        d = int(rng.integers(0, max_degree + 1))
        alpha = np.zeros(n, dtype=int)
        for j in rng.integers(0, n, size=d):
            alpha[j] += 1
        num = int(rng.integers(-max_num, max_num + 1)) or 1
        den = int(rng.integers(1, max_den + 1))
        key = tuple(int(a) for a in alpha)
        terms[key] = terms.get(key, Fraction(0)) + Fraction(num, den)
    return Polynomial(n, terms)


def variables(n: int) -> list[Polynomial]:
    """All coordinate functions ``x_0 ... x_{n-1}``."""
    return [Polynomial.variable(n, j) for j in range(n)]


def monomial(n: int, alpha: Iterable[int], c=1) -> Polynomial:
    return Polynomial(n, {tuple(alpha): c})
