"""Certification of structural identities and inequalities.

Symbolic identities are reported as ``exact_zero`` only when the residual
is literally the zero polynomial. Inequalities checked on samples report
the worst witness. Inputs that fail a stated hypothesis are rejected with
:class:`RejectedInput`, which is never counted as a violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .fields import FieldSystem, apply_field, check_conditions
from .hessian import (
    CompiledOperators,
    _delta_p_from,
    f2_family,
    f2_linearized,
    f2_star,
    full_hessian,
    is_k_convex,
    sigma_j,
    ellipticity_margin,
)
from .measures import Domain
from .sympoly import Polynomial

__all__ = [
    "IdentityResult",
    "RejectedInput",
    "verify_divergence_identity",
    "verify_maclaurin_chain",
    "verify_p_subharmonicity",
    "monotonicity_gap",
    "MonotonicityResult",
    "ball_moment",
    "integrate_over_ball",
    "bump_polynomial",
    "admissible_pairs",
    "principal_minor_identity",
    "ratio_chain",
]


class RejectedInput(ValueError):
    """The input does not satisfy the hypotheses of the checked statement."""


@dataclass
class IdentityResult:
    name: str
    status: str  # "exact_zero" | "holds_within" | "violated"
    residual: Polynomial | float
    tol: float | None = None
    witness: object = None
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in ("exact_zero", "holds_within")

    def residual_norm(self) -> float:
        if isinstance(self.residual, Polynomial):
            return float(sum(abs(c) for _, c in self.residual.items()))
        return float(abs(self.residual))

    def to_dict(self) -> dict:
        res = self.residual.to_text() if isinstance(self.residual, Polynomial) else self.residual
        return {"name": self.name, "status": self.status, "residual": res,
                "residual_norm": self.residual_norm(), "tol": self.tol,
                "witness": self.witness, **self.details}


# -- divergence identity ---------------------------------------------------------

def _column_divergence(S: FieldSystem, lin, j: int) -> Polynomial:
    out = Polynomial.zero(S.n)
    for i in range(S.m):
        out = out + apply_field(S[i], lin[i][j])
    return out


def verify_divergence_identity(S: FieldSystem, u: Polynomial) -> list[IdentityResult]:
    """Residuals ``sum_i X_i F^{ij}(X^2 u)`` for the divergence-form F_2, per column.

    For commuting systems the classical F_2 columns ``(tr r) delta_ij - r_ji``
    are checked as well.
    """
    H = full_hessian(S, u)
    lin = f2_linearized(H.full)
    out = []
    for j in range(S.m):
        res = _column_divergence(S, lin, j)
        out.append(IdentityResult(f"divergence[script_F2, col {j}]",
                                  "exact_zero" if res.is_zero() else "violated", res))
    if all(c.is_zero() for c in H.comm.values()) and _commuting(S):
        m = S.m
        tr = H.full[0][0]
        for i in range(1, m):
            tr = tr + H.full[i][i]
        classical = [[(tr if i == j else 0) - H.full[j][i] for j in range(m)] for i in range(m)]
        for j in range(m):
            res = _column_divergence(S, classical, j)
            out.append(IdentityResult(f"divergence[F2, col {j}]",
                                      "exact_zero" if res.is_zero() else "violated", res))
    return out


def _commuting(S: FieldSystem) -> bool:
    return all(S.bracket(i, j).is_zero() for i in range(S.m) for j in range(i + 1, S.m))


# -- MacLaurin chain -------------------------------------------------------------

def _esym(lam: Sequence, j: int, deleted: Sequence[int] = ()):
    keep = [v for i, v in enumerate(lam) if i not in set(deleted)]
    if j == 0:
        return 1
    if j > len(keep):
        return 0
    # coefficient recursion, exact for Fractions
    e = [1] + [0] * j
    for v in keep:
        for t in range(j, 0, -1):
            e[t] = e[t] + e[t - 1] * v
    return e[j]


def verify_maclaurin_chain(lam: Sequence, k: int, tol: float = 1e-12) -> IdentityResult:
    """Check the ``S_{j,i} >= 0`` signs, the splitting ``S_k = S_{k,i} + S_{k-1,i} lambda_i``
    and the ratio chain ``-lambda_i <= S_{k,i}/S_{k-1,i} <= (m-k)/(k(m-1)) S_{1,i}``.

    The chain is checked in multiplied-out form, which is equivalent when
    ``S_{k-1,i} > 0`` and stable when it is small.
    """
    lam = list(lam)
    m = len(lam)
    if not 1 <= k <= m:
        raise RejectedInput(f"k={k} outside 1..{m}")
    exact = all(isinstance(v, (int, Fraction)) for v in lam)
    eps = 0 if exact else tol
    scale = 1.0 + max(abs(float(v)) for v in lam) ** k
    for j in range(1, k + 1):
        if _esym(lam, j) < -eps * scale:
            raise RejectedInput(f"S_{j}(lambda) < 0: lambda is not in the Garding cone for k={k}")

    worst = 0.0
    witness = None
    decomposition_exact = True
    c = Fraction(m - k, k * (m - 1)) if m > 1 else Fraction(0)
    if not exact:
        c = float(c)
    for i in range(m):
        for j in range(0, k):
            v = _esym(lam, j, [i])
            if v < -eps * scale and -float(v) > worst:
                worst, witness = -float(v), {"i": i, "check": f"S_{j},i >= 0"}
        Sk, Ski = _esym(lam, k), _esym(lam, k, [i])
        Skm1i = _esym(lam, k - 1, [i])
        split = Sk - (Ski + Skm1i * lam[i])
        if exact:
            decomposition_exact &= split == 0
        elif abs(split) > eps * scale and abs(float(split)) > worst:
            worst, witness = abs(float(split)), {"i": i, "check": "S_k split"}
        if m == 1:
            continue
        lower = Ski + lam[i] * Skm1i  # >= 0
        upper = c * _esym(lam, 1, [i]) * Skm1i - Ski  # >= 0
        for name, val in (("lower", lower), ("upper", upper)):
            if val < -eps * scale and -float(val) > worst:
                worst, witness = -float(val), {"i": i, "check": f"ratio {name} bound"}
    status = "violated" if witness is not None or not decomposition_exact else (
        "exact_zero" if exact else "holds_within")
    return IdentityResult("maclaurin_chain", status, worst, None if exact else tol, witness,
                          {"k": k, "m": m, "decomposition_exact": decomposition_exact})


def ratio_chain(lam: Sequence[float], k: int, i: int) -> tuple[float, float, float] | None:
    """``(-lambda_i, S_{k,i}/S_{k-1,i}, c S_{1,i})`` or ``None`` if the denominator vanishes."""
    m = len(lam)
    d = _esym(lam, k - 1, [i])
    if d <= 0:
        return None
    return (-lam[i], _esym(lam, k, [i]) / d, (m - k) / (k * (m - 1)) * _esym(lam, 1, [i]))


# -- p-subharmonicity --------------------------------------------------------------

def verify_p_subharmonicity(S: FieldSystem, u: Polynomial, k: int, samples, p: float,
                            tol: float = 1e-9) -> IdentityResult:
    """``Delta_p u >= -tol`` at the samples, plus the weighted sub-Laplacian bound
    ``|Xu|^r Delta_X u <= m(k-1)/(m(k-1) - r(m-k)) Delta_p u`` with ``r = p - 2``
    wherever that denominator is positive.
    """
    m = S.m
    pmax = math.inf if k == m else 1 + k * (m - 1) / (m - k)
    if p - 1 > pmax - 1 + 1e-12:
        raise RejectedInput(f"p={p} exceeds the admissible range p - 1 <= {pmax - 1}")
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    if not is_k_convex(S, u, k, pts, tol).holds:
        raise RejectedInput(f"u is not {k}-convex on the samples")
    ops = CompiledOperators(S, u)
    g, s = ops.gradient(pts), ops.sym(pts)
    g2 = np.einsum("i...,i...->...", g, g)
    singular = g2 == 0
    if p < 2:
        keep = ~singular
    else:
        keep = np.ones(len(pts), dtype=bool)
    vals = _delta_p_from(g[:, keep], s[:, :, keep], p)
    worst_idx = int(np.argmin(vals)) if vals.size else -1
    worst = float(vals[worst_idx]) if vals.size else 0.0
    witness = pts[keep][worst_idx].tolist() if vals.size and worst < -tol else None

    r = p - 2
    bound_checked = 0
    bound_worst = 0.0
    if not math.isinf(p) and r >= 0:
        den = m * (k - 1) - r * (m - k)
        if den > 0:
            C = m * (k - 1) / den
            lap = np.einsum("ii...->...", s)[keep]
            lhs = g2[keep] ** (r / 2) * lap
            gap = C * vals - lhs
            bound_checked = int(gap.size)
            bound_worst = float(np.min(gap)) if gap.size else 0.0
            if bound_worst < -tol * (1 + float(np.max(np.abs(lhs)))) and witness is None:
                witness = pts[keep][int(np.argmin(gap))].tolist()
    status = "violated" if witness is not None else "holds_within"
    return IdentityResult("p_subharmonicity", status, worst, tol, witness,
                          {"p": p, "k": k, "singular_skipped": int(np.sum(~keep)),
                           "weighted_bound_checked": bound_checked,
                           "weighted_bound_min_gap": bound_worst})


# -- monotonicity ------------------------------------------------------------------

@dataclass
class MonotonicityResult:
    gap: float
    gap_coarse: float
    quadrature_error: float
    scale: float  # int |integrand|, the size against which agreement is judged
    which: str
    h: float
    ellipticity_margin: float
    richardson_agreement: float

    @property
    def holds(self) -> bool:
        return self.gap >= -self.quadrature_error

    def to_dict(self) -> dict:
        return {**self.__dict__, "holds": self.holds}


def _midpoint_nodes(domain: Domain, h: float):
    lo, hi = domain.bounding_box()
    counts = np.maximum(np.rint((hi - lo) / h).astype(int), 1)
    hs = (hi - lo) / counts
    axes = [lo[j] + hs[j] * (np.arange(N) + 0.5) for j, N in enumerate(counts)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain.n)
    return pts[domain.contains(pts)], float(np.prod(hs))


def monotonicity_gap(S: FieldSystem, u: Polynomial, v: Polynomial, domain: Domain,
                     which: str = "f2", h: float = 0.05, boundary_tol: float = 1e-12,
                     shell_samples: int = 2000, seed: int = 0) -> MonotonicityResult:
    """``int_Omega (F[u] - F[v])`` by midpoint quadrature at ``h`` and ``2h``.

    ``F`` is the divergence-form F_2 (``which="f2"``) or its Y-corrected
    variant (``"f2_star"``). Hypotheses (``u <= v``, ``u = v`` near the
    boundary, ellipticity of the F_2 linearisation at ``u + v``) are checked
    at the quadrature nodes and raise :class:`RejectedInput` when they fail.
    """
    if which == "f2":
        op = lambda w: f2_family(S, w)  # noqa: E731
    elif which == "f2_star":
        op = lambda w: f2_star(S, w)  # noqa: E731
    else:
        raise ValueError(f"unknown operator {which!r}")

    nodes, dv = _midpoint_nodes(domain, h)
    diff = u - v
    if np.any(diff(nodes) > 1e-12):
        raise RejectedInput("u <= v fails at a quadrature node")

    rng = np.random.default_rng(seed)
    shell = _boundary_samples(domain, shell_samples, rng)
    if np.max(np.abs(diff(shell))) > boundary_tol:
        raise RejectedInput("u and v differ on the boundary")

    s = CompiledOperators(S, u + v).sym(nodes)
    margin = float(np.min(ellipticity_margin(s)))
    if margin < -1e-12:
        raise RejectedInput(f"F_2 not degenerate elliptic at u + v (margin {margin:.3g})")

    integrand = op(u) - op(v)
    fine = integrand(nodes)
    gap = float(np.sum(fine) * dv)
    scale = float(np.sum(np.abs(fine)) * dv)
    cn, cdv = _midpoint_nodes(domain, 2 * h)
    coarse = float(np.sum(integrand(cn)) * cdv)
    # midpoint rule is second order: the fine-level error is about a third of the difference
    err = abs(gap - coarse) / 3.0
    agree = abs(gap - coarse) / scale if scale > 0 else 0.0
    return MonotonicityResult(gap, coarse, err, scale, which, h, margin, agree)


def _boundary_samples(domain: Domain, k: int, rng) -> np.ndarray:
    if domain.shape == "ball":
        d = rng.standard_normal((k, domain.n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return np.array(domain.center) + domain.radius * d
    lo, hi = domain.bounding_box()
    pts = rng.uniform(lo, hi, size=(k, domain.n))
    axis = rng.integers(0, domain.n, size=k)
    side = rng.integers(0, 2, size=k)
    pts[np.arange(k), axis] = np.where(side == 1, hi[axis], lo[axis])
    return pts


def ball_moment(alpha: Sequence[int], radius: float = 1.0) -> float:
    """``int_{|x| <= radius} x^alpha dx`` in closed form."""
    if any(a % 2 for a in alpha):
        return 0.0
    n = len(alpha)
    b = [(a + 1) / 2 for a in alpha]
    sphere = 2 * math.prod(math.gamma(v) for v in b) / math.gamma(sum(b))
    d = sum(alpha) + n
    return sphere * radius**d / d


def integrate_over_ball(p: Polynomial, center=None, radius: float = 1.0) -> float:
    """Exact integral of a polynomial over a ball centred at the origin."""
    if center is not None and any(center):
        raise ValueError("only origin-centred balls are supported")
    return float(sum(float(c) * ball_moment(a, radius) for a, c in p.items()))


def bump_polynomial(n: int, power: int = 3, radius=1) -> Polynomial:
    """``(1 - |x|^2 / radius^2)^power`` as a polynomial (valid inside the ball)."""
    r2 = Polynomial.zero(n)
    for j in range(n):
        x = Polynomial.variable(n, j)
        r2 = r2 + x * x
    return (Polynomial.constant(n, 1) - r2.scale(Fraction(1) / Fraction(radius) ** 2)) ** power


def admissible_pairs(S: FieldSystem, count: int, seed: int = 0, power: int = 3,
                     t_max: Fraction = Fraction(1, 4)) -> list[tuple[Polynomial, Polynomial]]:
    """Monotone pairs ``u <= v = u + t * bump`` on the unit ball with convex ``u``.

    ``u`` is a strongly convex base ``2|x|^2`` plus a random convex quadratic
    in the horizontal variables; ``t`` is drawn in ``(0, t_max]``.
    """
    rng = np.random.default_rng(seed)
    n = S.n
    xs = [Polynomial.variable(n, j) for j in range(n)]
    bump = bump_polynomial(n, power)
    pairs = []
    for _ in range(count):
        u = Polynomial.zero(n)
        for x in xs:
            u = u + (x * x).scale(2)
        L = rng.integers(-3, 4, size=(n, n))
        for a in range(n):
            w = Polynomial.zero(n)
            for b in range(n):
                w = w + xs[b].scale(Fraction(int(L[a, b]), 6))
            u = u + w * w
        for x in xs:
            u = u + x.scale(Fraction(int(rng.integers(-5, 6)), 10))
        t = Fraction(int(rng.integers(1, 11)), 10) * t_max
        pairs.append((u, u + bump.scale(t)))
    return pairs


def condition_summary(S: FieldSystem) -> dict:
    rep = check_conditions(S, sample_points=None)
    return {"anti_self_adjoint": rep.anti_self_adjoint, "step2_vanishing": rep.step2_vanishing}


def principal_minor_identity(r: np.ndarray) -> tuple[float, float]:
    """Both sides of ``sum_{i<j} (r_ii r_jj - r_ij r_ji) = F_2(sym r) + 1/4 sum_{i<j} (r_ij - r_ji)^2``."""
    m = r.shape[0]
    lhs = sum(r[i, i] * r[j, j] - r[i, j] * r[j, i] for i in range(m) for j in range(i + 1, m))
    sym = 0.5 * (r + r.T)
    rhs = sigma_j(sym, 2) + 0.25 * sum((r[i, j] - r[j, i]) ** 2 for i in range(m) for j in range(i + 1, m))
    return float(lhs), float(rhs)


def sample_garding_cone(m: int, k: int, count: int, rng, low: float = -1.0, high: float = 1.0,
                        max_draws: int = 10**7) -> np.ndarray:
    """Rejection-sample ``count`` vectors of the cube with ``S_1, ..., S_k >= 0``."""
    out, drawn = [], 0
    while sum(len(a) for a in out) < count:
        if drawn > max_draws:
            raise RuntimeError("acceptance rate too low for the requested cone")
        lam = rng.uniform(low, high, size=(max(4 * count, 1000), m))
        drawn += len(lam)
        ok = np.ones(len(lam), dtype=bool)
        coef = [np.ones(len(lam))] + [np.zeros(len(lam)) for _ in range(k)]
        for c in range(m):
            for t in range(k, 0, -1):
                coef[t] = coef[t] + coef[t - 1] * lam[:, c]
        for t in range(1, k + 1):
            ok &= coef[t] >= 0
        out.append(lam[ok])
    return np.concatenate(out)[:count]


def random_k_convex_quadratic(S: FieldSystem, k: int, rng, margin: float = 0.05,
                              with_vertical: bool = True) -> Polynomial:
    """A quadratic ``1/2 x^T A x`` in the first ``m`` coordinates with ``A`` in the
    k-th Garding cone, plus a random linear part.

    Valid for systems whose fields are ``D_i`` plus terms in coordinates
    beyond ``m``; the symmetric Hessian is then exactly ``A``.
    """
    m, n = S.m, S.n
    while True:
        lam = sample_garding_cone(m, k, 1, rng)[0]
        if min(_esym(list(lam), j) for j in range(1, k + 1)) >= margin:
            break
    Qm, _ = np.linalg.qr(rng.standard_normal((m, m)))
    A = (Qm * lam) @ Qm.T
    A = np.round(A * 64) / 64
    A = (A + A.T) / 2
    xs = [Polynomial.variable(n, j) for j in range(n)]
    u = Polynomial.zero(n)
    for a in range(m):
        for b in range(m):
            u = u + (xs[a] * xs[b]).scale(Fraction(float(A[a, b])) / 2)
    for j in range(m):
        u = u + xs[j].scale(Fraction(int(rng.integers(-4, 5)), 4))
    if with_vertical and n > m:
        # a linear vertical term keeps the Hessian constant on step-two groups only
        tilted = u + xs[n - 1].scale(Fraction(int(rng.integers(-4, 5)), 4))
        if _constant_sym(S, tilted):
            u = tilted
    if not _constant_sym(S, u):
        raise ValueError("symmetric Hessian of the quadratic is not constant for this system")
    return u


def _constant_sym(S: FieldSystem, u: Polynomial) -> bool:
    H = full_hessian(S, u)
    return all(H.sym[i][j].degree() <= 0 for i in range(S.m) for j in range(S.m))
