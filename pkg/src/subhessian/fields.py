"""First-order vector fields with polynomial coefficients.

A field ``X = sum_j b_j D_j`` is stored as its coefficient row
``(b_0, ..., b_{n-1})``. Brackets are computed at the coefficient level,
``[X, Y]_j = X(b^Y_j) - Y(b^X_j)``, so second-order terms never appear.

Built-in systems: ``euclidean(n)``, ``heisenberg(n)`` (the Heisenberg group
H^n on R^{2n+1}) and ``engel()`` (the Engel group on R^4).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
import numpy as np

from .sympoly import DimensionError, Polynomial

__all__ = [
    "VectorField",
    "FieldSystem",
    "ConditionReport",
    "apply_field",
    "commutator",
    "y_fields",
    "check_conditions",
    "builtin",
    "euclidean",
    "heisenberg",
    "engel",
    "load_system",
    "dump_system",
]

RANK_TOL = 1e-9


@dataclass(frozen=True)
class VectorField:
    coeffs: tuple[Polynomial, ...]

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        if not coeffs:
            raise ValueError("a vector field needs at least one coefficient")
        n = coeffs[0].n
        if len(coeffs) != n or any(c.n != n for c in coeffs):
            raise DimensionError("coefficients must be n polynomials in n variables")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n(self) -> int:
        return len(self.coeffs)

    @classmethod
    def zero(cls, n: int) -> VectorField:
        return cls(tuple(Polynomial.zero(n) for _ in range(n)))

    @classmethod
    def coordinate(cls, n: int, j: int) -> VectorField:
        """The coordinate field ``D_j``."""
        return cls(tuple(Polynomial.constant(n, int(i == j)) for i in range(n)))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __call__(self, f: Polynomial) -> Polynomial:
        return apply_field(self, f)

    def __add__(self, other: VectorField) -> VectorField:
        return VectorField(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> VectorField:
        return VectorField(tuple(-a for a in self.coeffs))

    def __sub__(self, other: VectorField) -> VectorField:
        return self + (-other)

    def divergence(self) -> Polynomial:
        out = Polynomial.zero(self.n)
        for j, b in enumerate(self.coeffs):
            out = out + b.diff(j)
        return out

    def at(self, x) -> np.ndarray:
        """Coefficient vector at one point, or stacked over an array of points."""
        x = np.asarray(x, dtype=float)
        return np.stack([np.broadcast_to(c(x), x.shape[:-1]) for c in self.coeffs], axis=-1)

    def __repr__(self) -> str:
        return "VectorField(" + ", ".join(c.to_text() for c in self.coeffs) + ")"


def apply_field(X: VectorField, f: Polynomial) -> Polynomial:
    """``X f = sum_j b_j d_j f``."""
    if f.n != X.n:
        raise DimensionError(f"field acts on R^{X.n}, polynomial lives on R^{f.n}")
    out = Polynomial.zero(f.n)
    for j, b in enumerate(X.coeffs):
        if b:
            out = out + b * f.diff(j)
    return out


def commutator(X: VectorField, Y: VectorField) -> VectorField:
    """``[X, Y] = XY - YX`` as a first-order field."""
    if X.n != Y.n:
        raise DimensionError("fields live in different dimensions")
    return VectorField(tuple(apply_field(X, by) - apply_field(Y, bx)
                             for bx, by in zip(X.coeffs, Y.coeffs)))


@dataclass(frozen=True)
class FieldSystem:
    name: str
    fields: tuple[VectorField, ...]
    # known homogeneous dimension, when the system is a standard group
    homogeneous_dim: int | None = None

    def __post_init__(self):
        fields = tuple(self.fields)
        if not fields:
            raise ValueError("a field system needs at least one field")
        n = fields[0].n
        if any(X.n != n for X in fields):
            raise DimensionError("all fields must share the ambient dimension")
        object.__setattr__(self, "fields", fields)

    @property
    def m(self) -> int:
        return len(self.fields)

    @property
    def n(self) -> int:
        return self.fields[0].n

    def __getitem__(self, i: int) -> VectorField:
        return self.fields[i]

    def __iter__(self):
        return iter(self.fields)

    def bracket(self, i: int, j: int) -> VectorField:
        return commutator(self.fields[i], self.fields[j])

    def coefficient_matrix(self, x) -> np.ndarray:
        """``B(x)`` with rows ``b^{i.}``; shape ``(..., m, n)``."""
        return np.stack([X.at(x) for X in self.fields], axis=-2)


def y_fields(S: FieldSystem) -> list[VectorField]:
    """``Y_j = sum_i [X_i, [X_i, X_j]]`` for each ``j``."""
    out = []
    for j in range(S.m):
        Y = VectorField.zero(S.n)
        for i in range(S.m):
            if i != j:
                Y = Y + commutator(S[i], S.bracket(i, j))
        out.append(Y)
    return out


@dataclass
class ConditionReport:
    anti_self_adjoint: list[bool]
    hormander_holds: bool | None
    hormander_step: int | None
    sample_points: list[list[float]]
    step2_vanishing: bool
    nonvanishing_triples: list[tuple[int, int, int]]
    all_second_commutators_vanish: bool
    weakened_span: list[bool] | None
    z_vanishes: bool
    notes: list[str] = field(default_factory=list)

    @property
    def conditions_i_iii(self) -> bool:
        return all(self.anti_self_adjoint) and self.step2_vanishing

    def to_dict(self) -> dict:
        return {
            "anti_self_adjoint": self.anti_self_adjoint,
            "hormander": {
                "holds": self.hormander_holds,
                "step": self.hormander_step,
                "sample_points": self.sample_points,
            },
            "step2_vanishing": self.step2_vanishing,
            "nonvanishing_triples": [list(t) for t in self.nonvanishing_triples],
            "all_second_commutators_vanish": self.all_second_commutators_vanish,
            "weakened_span": self.weakened_span,
            "z_vanishes": self.z_vanishes,
            "notes": self.notes,
        }


def _bracket_layers(S: FieldSystem, max_step: int) -> list[list[VectorField]]:
    # layer k holds all brackets of length k+1 of the generators
    layers = [list(S.fields)]
    for _ in range(1, max_step):
        nxt = []
        for X in S.fields:
            for Z in layers[-1]:
                B = commutator(X, Z)
                if not B.is_zero() and B not in nxt:
                    nxt.append(B)
        layers.append(nxt)
    return layers


def hormander_step(S: FieldSystem, points, max_step: int) -> int | None:
    """Smallest step at which iterated brackets span R^n at every point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    layers = _bracket_layers(S, max_step)
    vectors: list[VectorField] = []
    for step, layer in enumerate(layers, start=1):
        vectors.extend(layer)
        if not vectors:
            continue
        ok = True
        for x in pts:
            M = np.array([V.at(x) for V in vectors])
            sv = np.linalg.svd(M, compute_uv=False)
            if np.sum(sv > RANK_TOL * max(1.0, sv[0])) < S.n:
                ok = False
                break
        if ok:
            return step
    return None


def _in_span(v: np.ndarray, basis: np.ndarray, tol: float) -> bool:
    if not np.any(v):
        return True
    if basis.size == 0:
        return False
    coef, *_ = np.linalg.lstsq(basis.T, v, rcond=None)
    return float(np.linalg.norm(basis.T @ coef - v)) <= tol * max(1.0, float(np.linalg.norm(v)))


def check_conditions(S: FieldSystem, sample_points=None, max_step: int = 4) -> ConditionReport:
    """Check hypotheses (i)-(iii) and the weakened span condition.

    (i) and (iii) are exact symbolic checks and always run; the Hormander
    rank test and the span test need sample points.
    """
    anti = [X.divergence().is_zero() for X in S.fields]

    nonvanishing = []
    step2 = True
    for i, j in itertools.combinations(range(S.m), 2):
        B = S.bracket(i, j)
        for k in range(S.m):
            if not commutator(S[k], B).is_zero():
                nonvanishing.append((k, i, j))
                if k in (i, j):
                    step2 = False
    all_vanish = not nonvanishing

    Ys = y_fields(S)
    Z = VectorField.zero(S.n)
    for X, Y in zip(S.fields, Ys):
        Z = Z + commutator(X, Y)
    z_ok = Z.is_zero()

    notes = []
    hold = step = span = None
    pts: list[list[float]] = []
    if sample_points is not None and len(sample_points):
        pts = [list(map(float, p)) for p in sample_points]
        step = hormander_step(S, pts, max_step)
        hold = step is not None
        brackets = [S.bracket(i, j) for i, j in itertools.combinations(range(S.m), 2)]
        span = []
        for Y in Ys:
            ok = True
            for x in pts:
                basis = np.array([V.at(x) for V in list(S.fields) + brackets])
                if not _in_span(Y.at(x), basis, 1e-9):
                    ok = False
                    break
            span.append(ok)
    else:
        notes.append("no sample points: Hormander and span checks skipped")
    return ConditionReport(anti, hold, step, pts, step2, nonvanishing, all_vanish, span, z_ok, notes)


# -- built-in systems ----------------------------------------------------------

def euclidean(n: int) -> FieldSystem:
    if n < 1:
        raise ValueError("n must be positive")
    return FieldSystem(f"euclidean{n}", tuple(VectorField.coordinate(n, j) for j in range(n)), n)


def heisenberg(n: int = 1) -> FieldSystem:
    """``X_i = D_i - x_{n+i}/2 D_t``, ``X_{n+i} = D_{n+i} + x_i/2 D_t`` on R^{2n+1}."""
    if n < 1:
        raise ValueError("n must be positive")
    N = 2 * n + 1
    half = Fraction(1, 2)
    fields = []
    for i in range(n):
        c = [Polynomial.constant(N, int(j == i)) for j in range(N)]
        c[N - 1] = Polynomial.variable(N, n + i).scale(-half)
        fields.append(VectorField(tuple(c)))
    for i in range(n):
        c = [Polynomial.constant(N, int(j == n + i)) for j in range(N)]
        c[N - 1] = Polynomial.variable(N, i).scale(half)
        fields.append(VectorField(tuple(c)))
    return FieldSystem(f"heisenberg{n}", tuple(fields), 2 * n + 2)


def engel() -> FieldSystem:
    """``X_1 = D_1``, ``X_2 = D_2 + x_1 D_3 + x_1^2/2 D_4`` on R^4."""
    x1 = Polynomial.variable(4, 0)
    one, zero = Polynomial.constant(4, 1), Polynomial.zero(4)
    X1 = VectorField((one, zero, zero, zero))
    X2 = VectorField((zero, one, x1, (x1 * x1).scale(Fraction(1, 2))))
    return FieldSystem("engel", (X1, X2), 7)


def builtin(name: str, n: int | None = None) -> FieldSystem:
    """Look up a built-in system: ``euclidean``/``heisenberg`` with ``n``, or ``engel``.

    Names with a trailing integer (``heisenberg1``, ``euclidean3``) are accepted.
    """
    base = name.rstrip("0123456789")
    suffix = name[len(base):]
    if suffix:
        if n is not None and n != int(suffix):
            raise ValueError(f"conflicting parameters in {name!r} and n={n}")
        n = int(suffix)
    if base == "engel":
        if suffix:
            raise ValueError("engel takes no parameter")
        return engel()
    if base == "euclidean":
        return euclidean(3 if n is None else n)
    if base == "heisenberg":
        return heisenberg(1 if n is None else n)
    raise ValueError(f"unknown system {name!r}")


# -- text format ---------------------------------------------------------------

def dump_system(S: FieldSystem) -> str:
    """Header ``n m name`` then one line per field, coefficients separated by ``;``."""
    lines = [f"{S.n} {S.m} {S.name}"]
    for X in S.fields:
        lines.append(" ; ".join(c.to_text() for c in X.coeffs))
    return "\n".join(lines) + "\n"


def parse_system(text: str) -> FieldSystem:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty field-system file")
    head = lines[0].split(maxsplit=2)
    if len(head) < 2:
        raise ValueError("header must be 'n m [name]'")
    n, m = int(head[0]), int(head[1])
    name = head[2].strip() if len(head) > 2 else "custom"
    if len(lines) - 1 != m:
        raise ValueError(f"expected {m} field lines, found {len(lines) - 1}")
    fields = []
    for k, ln in enumerate(lines[1:], start=2):
        parts = [p.strip() for p in ln.split(";")]
        if len(parts) != n:
            raise ValueError(f"line {k}: expected {n} coefficients, found {len(parts)}")
        fields.append(VectorField(tuple(Polynomial.from_text(p, n) for p in parts)))
    return FieldSystem(name, tuple(fields))


def load_system(path: str | Path) -> FieldSystem:
    return parse_system(Path(path).read_text())


def system_from_spec(spec: str) -> FieldSystem:
    """A built-in name or a path to a field-system file."""
    p = Path(spec)
    if p.suffix or p.exists():
        if not p.exists():
            raise FileNotFoundError(spec)
        return load_system(p)
    return builtin(spec)

