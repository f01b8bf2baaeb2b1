"""Subelliptic Hessians and the second-order operators built on them.

The full Hessian ``r_ij = X_i X_j u`` splits into its symmetric part
``s_ij = (r_ij + r_ji)/2`` and the commutators ``c_ij = [X_i, X_j] u`` so that
``r_ij = s_ij + c_ij/2`` for ``i < j``.

Elementary symmetric functions ``S_j`` are computed as sums of principal
minors, which works for polynomial entries, exact rationals, floats and
numpy arrays alike (entries only need ``+``, ``-`` and ``*``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .fields import FieldSystem, apply_field, y_fields
from .sympoly import DimensionError, Polynomial

__all__ = [
    "HessianPair",
    "full_hessian",
    "sigma_j",
    "determinant",
    "f2_family",
    "f2_first_form",
    "e2",
    "f2_linearized",
    "f2_star",
    "delta_x",
    "delta_p",
    "delta_inf",
    "laplacians",
    "is_k_convex",
    "KConvexReport",
    "SingularPointError",
]

F2_ALPHA = Fraction(3, 4)


class SingularPointError(ValueError):
    """The p-Laplacian is undefined where the horizontal gradient vanishes and p < 2."""


@dataclass(frozen=True)
class HessianPair:
    full: tuple[tuple[Polynomial, ...], ...]
    sym: tuple[tuple[Polynomial, ...], ...]
    comm: dict[tuple[int, int], Polynomial]

    @property
    def m(self) -> int:
        return len(self.full)

    def commutator_sum_sq(self) -> Polynomial:
        n = self.full[0][0].n
        out = Polynomial.zero(n)
        for c in self.comm.values():
            out = out + c * c
        return out


def _check_dim(S: FieldSystem, u: Polynomial):
    if u.n != S.n:
        raise DimensionError(f"system acts on R^{S.n}, u lives on R^{u.n}")


def gradient_x(S: FieldSystem, u: Polynomial) -> list[Polynomial]:
    """The horizontal gradient ``(X_1 u, ..., X_m u)``."""
    _check_dim(S, u)
    return [apply_field(X, u) for X in S.fields]


def full_hessian(S: FieldSystem, u: Polynomial) -> HessianPair:
    Xu = gradient_x(S, u)
    m = S.m
    full = tuple(tuple(apply_field(S[i], Xu[j]) for j in range(m)) for i in range(m))
    half = Fraction(1, 2)
    sym = tuple(tuple(full[i][i] if i == j else (full[i][j] + full[j][i]).scale(half)
                      for j in range(m)) for i in range(m))
    comm = {(i, j): full[i][j] - full[j][i] for i, j in itertools.combinations(range(m), 2)}
    return HessianPair(full, sym, comm)


def determinant(M, idx: Sequence[int]):
    """Leibniz determinant of the principal submatrix on ``idx``.

    Generic over the entry type; sizes here are tiny (at most m).
    """
    idx = list(idx)
    k = len(idx)
    if k == 0:
        return 1
    if k == 1:
        return M[idx[0]][idx[0]]
    if k == 2:
        a, b = idx
        return M[a][a] * M[b][b] - M[a][b] * M[b][a]
    total = None
    for perm in itertools.permutations(range(k)):
        # parity via inversion count
        inv = sum(1 for p, q in itertools.combinations(perm, 2) if p > q)
        term = M[idx[0]][idx[perm[0]]]
        for r in range(1, k):
            term = term * M[idx[r]][idx[perm[r]]]
        if inv % 2:
            term = -term
        total = term if total is None else total + term
    return total


def sigma_j(M, j: int, deleted: Sequence[int] = ()):
    """``S_j`` as the sum of ``j x j`` principal minors of ``M``.

    With ``deleted`` the listed rows/columns are removed first, which gives
    ``S_{j,i}`` (the ``S_j`` of the eigenvalues with ``lambda_i = 0`` for
    diagonal input). ``S_0 = 1``.
    """
    m = len(M)
    keep = [i for i in range(m) if i not in set(deleted)]
    if any(not 0 <= i < m for i in deleted):
        raise IndexError("deleted index out of range")
    if not 0 <= j <= m:
        raise ValueError(f"S_{j} undefined for a {m}x{m} matrix")
    if j == 0:
        return 1
    total = None
    for sub in itertools.combinations(keep, j):
        d = determinant(M, sub)
        total = d if total is None else total + d
    return 0 if total is None else total


def e2(S: FieldSystem, u: Polynomial) -> Polynomial:
    """``sum_{i<j} ([X_i, X_j] u)^2``."""
    return full_hessian(S, u).commutator_sum_sq()


def f2_family(S: FieldSystem, u: Polynomial, alpha=F2_ALPHA) -> Polynomial:
    """``F_2(X_s^2 u) + alpha * sum_{i<j} ([X_i, X_j] u)^2``.

    ``alpha = 3/4`` gives the divergence-form operator, ``alpha = 0`` the
    plain 2-Hessian of the symmetric Hessian.
    """
    H = full_hessian(S, u)
    out = sigma_j(H.sym, 2)
    if not isinstance(out, Polynomial):
        out = Polynomial.constant(S.n, out)
    if alpha:
        out = out + H.commutator_sum_sq().scale(alpha)
    return out


def f2_first_form(r) -> object:
    """``1/2 {(tr r)^2 - r_ij r_ji + 1/2 (r_ij - r_ji)^2}`` with summation over i, j."""
    m = len(r)
    tr = r[0][0]
    for i in range(1, m):
        tr = tr + r[i][i]
    cross = None
    skew = None
    for i in range(m):
        for j in range(m):
            t = r[i][j] * r[j][i]
            cross = t if cross is None else cross + t
            if i != j:
                d = r[i][j] - r[j][i]
                skew = d * d if skew is None else skew + d * d
    half = Fraction(1, 2)
    out = tr * tr - cross
    if skew is not None:
        out = out + skew * half
    return out * half


def f2_linearized(M):
    """``(tr M) delta_ij + M_ij - 2 M_ji``, the derivative of the divergence-form F_2."""
    m = len(M)
    if any(len(row) != m for row in M):
        raise ValueError("matrix must be square")
    tr = M[0][0]
    for i in range(1, m):
        tr = tr + M[i][i]
    return [[(tr if i == j else 0) + M[i][j] - 2 * M[j][i] for j in range(m)] for i in range(m)]


def f2_star(S: FieldSystem, u: Polynomial) -> Polynomial:
    """Divergence-form F_2 plus ``1/2 sum_j (X_j u)(Y_j u)``."""
    out = f2_family(S, u, F2_ALPHA)
    Xu = gradient_x(S, u)
    half = Fraction(1, 2)
    for Xju, Y in zip(Xu, y_fields(S)):
        if not Y.is_zero():
            out = out + (Xju * apply_field(Y, u)).scale(half)
    return out


# -- Laplacians ----------------------------------------------------------------

def delta_x(S: FieldSystem, u: Polynomial) -> Polynomial:
    """Sub-Laplacian ``sum_i X_i X_i u``."""
    Xu = gradient_x(S, u)
    out = Polynomial.zero(S.n)
    for X, f in zip(S.fields, Xu):
        out = out + apply_field(X, f)
    return out


def _pointwise(S: FieldSystem, u: Polynomial, x):
    H = full_hessian(S, u)
    Xu = gradient_x(S, u)
    g = np.array([f(x) for f in Xu], dtype=float)
    s = np.array([[H.sym[i][j](x) for j in range(S.m)] for i in range(S.m)], dtype=float)
    return g, s


def _delta_p_from(g: np.ndarray, s: np.ndarray, p: float) -> np.ndarray:
    """Vectorised expanded p-Laplacian; ``g`` has shape (m, ...), ``s`` (m, m, ...)."""
    g2 = np.einsum("i...,i...->...", g, g)
    lap = np.einsum("ii...->...", s)
    quad = np.einsum("i...,ij...,j...->...", g, s, g)
    if math.isinf(p):
        return quad
    with np.errstate(divide="ignore", invalid="ignore"):
        core = lap + (p - 2) * np.where(g2 > 0, quad / np.where(g2 > 0, g2, 1), 0.0)
        pref = np.where(g2 > 0, g2 ** ((p - 2) / 2), 0.0 if p > 2 else 1.0)
    return pref * core


def delta_p(S: FieldSystem, u: Polynomial, p: float, x) -> float:
    """``|Xu|^{p-2} {Delta_X u + (p-2) X_i u X_j u s_ij / |Xu|^2}`` at ``x``.

    At ``|Xu| = 0`` the value is the continuous extension for ``p >= 2``
    (zero for ``p > 2``, ``Delta_X u`` for ``p = 2``); ``p < 2`` raises.
    """
    g, s = _pointwise(S, u, x)
    if not np.any(g) and p < 2:
        raise SingularPointError(f"|Xu| = 0 at {list(x)} with p = {p} < 2")
    return float(_delta_p_from(g, s, p))


def delta_inf(S: FieldSystem, u: Polynomial, x) -> float:
    """``X_i u X_j u s_ij`` at ``x``."""
    g, s = _pointwise(S, u, x)
    return float(g @ s @ g)


def laplacians(S: FieldSystem, u: Polynomial, kind: str = "delta_X", x=None, p: float | None = None):
    """Dispatch on ``kind`` in {``delta_X``, ``delta_p``, ``delta_inf``}.

    ``delta_X`` is returned as an exact polynomial (evaluated if ``x`` given).
    """
    if kind == "delta_X":
        L = delta_x(S, u)
        return L if x is None else L(x)
    if x is None:
        raise ValueError(f"{kind} needs an evaluation point")
    if kind == "delta_p":
        if p is None:
            raise ValueError("delta_p needs p")
        return delta_p(S, u, p, x)
    if kind == "delta_inf":
        return delta_inf(S, u, x)
    raise ValueError(f"unknown Laplacian kind {kind!r}")


class CompiledOperators:
    """Float evaluators for ``Xu`` and ``X_s^2 u`` over point arrays."""

    def __init__(self, S: FieldSystem, u: Polynomial):
        self.S = S
        self.H = full_hessian(S, u)
        self.Xu = gradient_x(S, u)

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return np.stack([np.broadcast_to(f(pts), pts.shape[:-1]) for f in self.Xu])

    def sym(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        m = self.S.m
        return np.array([[np.broadcast_to(self.H.sym[i][j](pts), pts.shape[:-1])
                          for j in range(m)] for i in range(m)])

    def delta_p(self, pts: np.ndarray, p: float) -> np.ndarray:
        return _delta_p_from(self.gradient(pts), self.sym(pts), p)


# -- k-convexity ------------------------------------------------------------------

@dataclass
class KConvexReport:
    holds: bool
    worst_point: list[float]
    worst_j: int
    worst_value: float

    def to_dict(self) -> dict:
        return {"holds": self.holds, "worst": {"point": self.worst_point, "j": self.worst_j,
                                               "value": self.worst_value}}


def is_k_convex(S: FieldSystem, u: Polynomial, k: int, samples, tol: float = 1e-9) -> KConvexReport:
    """Check ``S_j(X_s^2 u) >= -tol`` for ``j <= k`` at every sample point."""
    if not 1 <= k <= S.m:
        raise ValueError(f"k must lie in 1..{S.m}")
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    if pts.size == 0:
        raise ValueError("need at least one sample point")
    s = CompiledOperators(S, u).sym(pts)
    worst = (math.inf, 0, 1)
    for j in range(1, k + 1):
        vals = np.asarray(sigma_j(s, j), dtype=float) * np.ones(len(pts))
        idx = int(np.argmin(vals))
        if vals[idx] < worst[0]:
            worst = (float(vals[idx]), idx, j)
    value, idx, j = worst
    return KConvexReport(value >= -tol, pts[idx].tolist(), j, value)


def ellipticity_margin(s: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of ``(tr s) I - s`` for a stack ``s`` of shape (m, m, ...)."""
    m = s.shape[0]
    mats = np.moveaxis(s.reshape(m, m, -1), -1, 0)
    tr = np.trace(mats, axis1=1, axis2=2)
    lin = tr[:, None, None] * np.eye(m) - 0.5 * (mats + mats.transpose(0, 2, 1))
    return np.linalg.eigvalsh(lin)[:, 0].reshape(s.shape[2:])
