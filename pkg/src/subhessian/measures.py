"""Grid functions, mollification and Hessian-measure pairings.

Smooth test functions are sampled on uniform node lattices; subelliptic
derivatives of grid data are composed from central differences through the
field coefficients, so ``X_i X_j g`` loses two cells of margin on each side.
Pairings ``int eta (F_2 + alpha E_2)`` are computed against polynomial bump
cutoffs ``((1 - |x - c|^2 / rho^2)_+)^3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import betainc, beta as beta_fn

from .fields import FieldSystem
from .hessian import (
    F2_ALPHA,
    delta_x,
    f2_family,
    full_hessian,
    gradient_x,
    sigma_j,
)
from .sympoly import Polynomial

__all__ = [
    "Domain",
    "Cutoff",
    "GridFunction",
    "PairingResult",
    "BudgetError",
    "MarginError",
    "sample_to_grid",
    "mollify",
    "mollify_polynomial",
    "kernel_moment",
    "MaxOfQuadratics",
    "PolynomialTarget",
    "grid_hessian",
    "pairing",
    "weak_continuity_experiment",
    "local_bounds",
]

NODE_BUDGET = 20_000_000


class BudgetError(MemoryError):
    """Requested lattice exceeds the node budget."""


class MarginError(ValueError):
    """Not enough lattice margin for a stencil or a cutoff support."""


# -- domains and cutoffs ---------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """An axis box (``lo``, ``hi``) or a Euclidean ball (``center``, ``radius``)."""

    shape: str
    lo: tuple[float, ...] = ()
    hi: tuple[float, ...] = ()
    center: tuple[float, ...] = ()
    radius: float = 0.0
    shell: float = 0.0

    @classmethod
    def box(cls, lo, hi, shell: float = 0.0) -> Domain:
        lo, hi = tuple(map(float, lo)), tuple(map(float, hi))
        if len(lo) != len(hi) or any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("box needs lo < hi on every axis")
        d = cls("box", lo=lo, hi=hi, shell=float(shell))
        if shell >= d.inradius:
            raise ValueError("shell width must be smaller than the inradius")
        return d

    @classmethod
    def cube(cls, n: int, half: float, shell: float = 0.0) -> Domain:
        return cls.box([-half] * n, [half] * n, shell)

    @classmethod
    def ball(cls, center, radius: float, shell: float = 0.0) -> Domain:
        if radius <= 0:
            raise ValueError("radius must be positive")
        if shell >= radius:
            raise ValueError("shell width must be smaller than the radius")
        return cls("ball", center=tuple(map(float, center)), radius=float(radius), shell=float(shell))

    @property
    def n(self) -> int:
        return len(self.lo) if self.shape == "box" else len(self.center)

    @property
    def inradius(self) -> float:
        if self.shape == "box":
            return min(b - a for a, b in zip(self.lo, self.hi)) / 2
        return self.radius

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.shape == "box":
            return np.array(self.lo), np.array(self.hi)
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.shape == "box":
            return np.all((pts >= np.array(self.lo)) & (pts <= np.array(self.hi)), axis=-1)
        return np.sum((pts - np.array(self.center)) ** 2, axis=-1) <= self.radius**2

    def inner(self, offset: float | None = None) -> Domain:
        """The subdomain obtained by moving the boundary inwards."""
        d = self.shell if offset is None else offset
        if d >= self.inradius:
            raise ValueError("offset exhausts the domain")
        if self.shape == "box":
            return Domain("box", lo=tuple(a + d for a in self.lo), hi=tuple(b - d for b in self.hi))
        return Domain("ball", center=self.center, radius=self.radius - d)

    def volume(self) -> float:
        if self.shape == "box":
            return float(np.prod(np.array(self.hi) - np.array(self.lo)))
        n = self.n
        return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * self.radius**n

    def to_dict(self) -> dict:
        if self.shape == "box":
            return {"shape": "box", "lo": list(self.lo), "hi": list(self.hi), "shell": self.shell}
        return {"shape": "ball", "center": list(self.center), "radius": self.radius, "shell": self.shell}


@dataclass(frozen=True)
class Cutoff:
    """``scale * ((1 - |x - c|^2 / rho^2)_+)^3``; ``normalize`` makes the integral 1."""

    center: tuple[float, ...]
    radius: float
    normalize: bool = True
    power: int = 3

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def raw_integral(self) -> float:
        # rho^n |S^{n-1}| int_0^1 (1 - r^2)^p r^{n-1} dr
        n, p = self.n, self.power
        sphere = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
        return self.radius**n * sphere * 0.5 * beta_fn(n / 2, p + 1)

    @property
    def scale(self) -> float:
        return 1.0 / self.raw_integral if self.normalize else 1.0

    @property
    def integral(self) -> float:
        return 1.0 if self.normalize else self.raw_integral

    @property
    def eta_id(self) -> str:
        c = ",".join(f"{v:g}" for v in self.center)
        return f"bump{self.power}(c=({c}),rho={self.radius:g}{',normalized' if self.normalize else ''})"

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        r2 = np.sum((pts - np.array(self.center)) ** 2, axis=-1) / self.radius**2
        return self.scale * np.clip(1.0 - r2, 0.0, None) ** self.power

    def support_inside(self, lo, hi) -> bool:
        c = np.array(self.center)
        return bool(np.all(c - self.radius >= np.asarray(lo) - 1e-12)
                    and np.all(c + self.radius <= np.asarray(hi) + 1e-12))


# -- grid functions --------------------------------------------------------------

def _trap_weights(counts, h) -> np.ndarray:
    w = np.ones(())
    for N, hj in zip(counts, h):
        wj = np.full(N, hj)
        wj[0] = wj[-1] = hj / 2
        w = np.multiply.outer(w, wj)
    return w


@dataclass
class GridFunction:
    """Samples on the lattice ``lo + i * h`` (inclusive of both ends)."""

    lo: np.ndarray
    h: np.ndarray
    values: np.ndarray
    provenance: str = "loaded"

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.h = np.broadcast_to(np.asarray(self.h, dtype=float), self.lo.shape).copy()
        if self.values.ndim != self.lo.size:
            raise ValueError("values rank must match the dimension")
        if np.any(self.h <= 0):
            raise ValueError("spacing must be positive")

    @property
    def n(self) -> int:
        return self.lo.size

    @property
    def counts(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def hi(self) -> np.ndarray:
        return self.lo + (np.array(self.counts) - 1) * self.h

    def axes(self) -> list[np.ndarray]:
        return [self.lo[j] + self.h[j] * np.arange(N) for j, N in enumerate(self.counts)]

    def nodes(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def integrate(self, values: np.ndarray | None = None, region: Domain | None = None) -> float:
        """Trapezoid rule over the lattice, optionally masked to ``region``."""
        v = self.values if values is None else values
        w = _trap_weights(self.counts, self.h)
        if region is not None:
            w = w * region.contains(self.nodes())
        return float(np.sum(w * v))

    def restrict(self, k: int) -> GridFunction:
        """Drop ``k`` cells on every side."""
        sl = tuple(slice(k, N - k) for N in self.counts)
        return GridFunction(self.lo + k * self.h, self.h, self.values[sl], self.provenance)

    def coarsen(self) -> GridFunction:
        """Every other node (spacing 2h); needs odd counts for the same box."""
        sl = tuple(slice(None, None, 2) for _ in self.counts)
        return GridFunction(self.lo, 2 * self.h, self.values[sl], self.provenance)

    # text format: n, per-axis "lo hi count", h, provenance, then values
    def dumps(self) -> str:
        lines = [str(self.n)]
        for lo, hi, N in zip(self.lo, self.hi, self.counts):
            lines.append(f"{float(lo):.17g} {float(hi):.17g} {N}")
        lines.append(" ".join(f"{float(v):.17g}" for v in self.h))
        lines.append(self.provenance.replace("\n", " "))
        lines.extend(f"{v:.17g}" for v in self.values.ravel(order="C"))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> GridFunction:
        lines = text.splitlines()
        n = int(lines[0])
        lo, counts = [], []
        for ln in lines[1:1 + n]:
            a, _, N = ln.split()
            lo.append(float(a))
            counts.append(int(N))
        h = [float(v) for v in lines[1 + n].split()]
        prov = lines[2 + n]
        vals = np.array([float(v) for v in lines[3 + n:3 + n + int(np.prod(counts))]])
        if vals.size != int(np.prod(counts)):
            raise ValueError("value count does not match header")
        return cls(np.array(lo), np.array(h), vals.reshape(counts), prov)

    def save(self, path: str | Path):
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> GridFunction:
        return cls.loads(Path(path).read_text())


def _lattice(domain: Domain, h: float):
    lo, hi = domain.bounding_box()
    counts = np.rint((hi - lo) / h).astype(int) + 1
    if np.any(counts < 2):
        raise ValueError("spacing too coarse for the domain")
    if float(np.prod(counts.astype(float))) > NODE_BUDGET:
        raise BudgetError(f"{int(np.prod(counts.astype(float)))} nodes exceed budget {NODE_BUDGET}")
    hs = (hi - lo) / (counts - 1)
    return lo, hs, tuple(int(c) for c in counts)


def sample_to_grid(u, domain: Domain, h: float) -> GridFunction:
    """Evaluate a polynomial (or any vectorised callable) at the lattice nodes."""
    if h <= 0:
        raise ValueError("h must be positive")
    lo, hs, counts = _lattice(domain, h)
    g = GridFunction(lo, hs, np.zeros(counts), "sampled")
    vals = u(g.nodes())
    g.values = np.broadcast_to(vals, counts).astype(float)
    g.provenance = f"sampled-from-polynomial({u.to_text()})" if isinstance(u, Polynomial) else "sampled"
    return g


# -- mollification ---------------------------------------------------------------

KERNEL_POWER = 4


def _kernel(h: np.ndarray, eps: float) -> np.ndarray:
    r = np.floor(eps / h + 1e-12).astype(int)
    axes = [hj * np.arange(-rj, rj + 1) for hj, rj in zip(h, r)]
    Y = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    k = np.clip(1.0 - np.sum(Y**2, axis=-1) / eps**2, 0.0, None) ** KERNEL_POWER
    return k / k.sum()


def mollify(g: GridFunction, eps: float) -> GridFunction:
    """Discrete convolution with the normalised kernel ``((1 - |y/eps|^2)_+)^4``.

    The output lattice shrinks by ``floor(eps/h)`` cells on each side.
    """
    if np.any(eps < 2 * g.h - 1e-12):
        raise MarginError(f"eps={eps} is below twice the spacing {g.h.max()}")
    K = _kernel(g.h, eps)
    r = (np.array(K.shape) - 1) // 2
    if np.any(np.array(g.counts) - 2 * r < 3):
        raise MarginError("mollifier support exhausts the lattice")
    vals = fftconvolve(g.values, K, mode="valid")
    return GridFunction(g.lo + r * g.h, g.h, vals, f"mollified({eps:g}) of {g.provenance}")


def _rising(a: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for i in range(k):
        out *= a + i
    return out


def kernel_moment(alpha: Sequence[int], eps) -> Fraction:
    """``int y^alpha rho_eps(y) dy`` for the normalised kernel on R^n, exactly.

    Odd moments vanish; even ones are rational multiples of ``eps^|alpha|``.
    """
    alpha = tuple(int(a) for a in alpha)
    if any(a % 2 for a in alpha):
        return Fraction(0)
    n = len(alpha)
    k = sum(alpha) // 2
    half_n = Fraction(n, 2)
    angular = Fraction(1)
    for a in alpha:
        angular *= _rising(Fraction(1, 2), a // 2)
    angular /= _rising(half_n, k)
    # B(n/2 + k, p+1) / B(n/2, p+1)
    radial = Fraction(1)
    for i in range(KERNEL_POWER + 1):
        radial *= (half_n + i) / (half_n + k + i)
    return angular * radial * Fraction(eps) ** (2 * k)


def mollify_polynomial(p: Polynomial, eps) -> Polynomial:
    """Exact continuum mollification ``p * rho_eps`` via kernel moments."""
    from itertools import product

    out = Polynomial.zero(p.n)
    d = p.degree()
    if d < 0:
        return out
    for alpha in product(range(0, d + 1, 2), repeat=p.n):
        if sum(alpha) > d:
            continue
        q = p
        fact = 1
        for j, a in enumerate(alpha):
            for _ in range(a):
                q = q.diff(j)
            fact *= math.factorial(a)
        if q.is_zero():
            continue
        out = out + q.scale(kernel_moment(alpha, eps) / fact)
    return out


class PolynomialTarget:
    """A smooth target whose mollifications are exact polynomials."""

    def __init__(self, p: Polynomial):
        self.p = p
        self.n = p.n
        self._cache: dict = {}

    def __call__(self, pts):
        return self.p(pts)

    def mollified(self, eps) -> Callable:
        if eps == 0:
            return self.p
        key = Fraction(eps).limit_denominator(10**9)
        if key not in self._cache:
            self._cache[key] = mollify_polynomial(self.p, key)
        return self._cache[key]

    def describe(self) -> str:
        return f"polynomial({self.p.to_text()})"


class MaxOfQuadratics:
    """``max(q1, q2)`` with ``q2 - q1`` affine, and its exact mollifications.

    Writing ``max(q1, q2) = q1 + (l)_+`` with ``l = q2 - q1``, the kernel's
    one-dimensional marginal ``(1 - t^2)^b``, ``b = 4 + (n-1)/2``, gives the
    mollified ramp in closed form through the regularised incomplete beta.
    """

    def __init__(self, q1: Polynomial, q2: Polynomial):
        if q1.degree() > 2 or q2.degree() > 2:
            raise ValueError("targets must be quadratics")
        ell = q2 - q1
        if ell.degree() > 1:
            raise ValueError("q2 - q1 must be affine")
        self.q1, self.q2, self.n = q1, q2, q1.n
        self.ell = ell
        self.grad = np.array([float(ell.diff(j)(tuple([0] * self.n))) for j in range(self.n)])
        self.offset = float(ell(tuple([0] * self.n)))
        self.b = KERNEL_POWER + (self.n - 1) / 2

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.maximum(self.q1(pts), self.q2(pts))

    def ramp(self, s: np.ndarray, eps: float) -> np.ndarray:
        """``(s - |a| eps w)_+`` averaged over the marginal density of ``w``."""
        a = float(np.linalg.norm(self.grad))
        if a == 0 or eps == 0:
            return np.maximum(s, 0.0)
        b = self.b
        tau = np.clip(s / (a * eps), -1.0, 1.0)
        m0 = betainc(b + 1, b + 1, (tau + 1) / 2)
        m1 = -((1 - tau**2) ** (b + 1)) / (2 * (b + 1) * beta_fn(0.5, b + 1))
        return s * m0 - a * eps * m1

    def mollified(self, eps) -> Callable:
        q1e = mollify_polynomial(self.q1, Fraction(eps).limit_denominator(10**9)) if eps else self.q1

        def u_eps(pts):
            pts = np.asarray(pts, dtype=float)
            s = pts @ self.grad + self.offset
            return q1e(pts) + self.ramp(s, float(eps))

        return u_eps

    def describe(self) -> str:
        return f"max({self.q1.to_text()}, {self.q2.to_text()})"


# -- grid derivatives ------------------------------------------------------------

def _central(v: np.ndarray, j: int, h: float) -> np.ndarray:
    """Central difference along axis ``j``, interior of every axis."""
    nd = v.ndim
    sl_p = [slice(1, -1)] * nd
    sl_m = [slice(1, -1)] * nd
    sl_p[j] = slice(2, None)
    sl_m[j] = slice(None, -2)
    return (v[tuple(sl_p)] - v[tuple(sl_m)]) / (2 * h)


def _apply_grid_field(S: FieldSystem, i: int, v: np.ndarray, nodes: np.ndarray, h) -> np.ndarray:
    # nodes are the interior nodes matching the output shape
    out = 0.0
    for j, b in enumerate(S[i].coeffs):
        if b:
            out = out + b(nodes) * _central(v, j, h[j])
    return np.broadcast_to(out, nodes.shape[:-1])


@dataclass
class GridHessian:
    """Derivatives of grid data on the lattice shrunk by two cells per side."""

    grid: GridFunction  # geometry of the doubly-interior lattice (values = u there)
    grad: np.ndarray  # (m, ...) horizontal gradient
    full: np.ndarray  # (m, m, ...)

    @property
    def sym(self) -> np.ndarray:
        return 0.5 * (self.full + np.swapaxes(self.full, 0, 1))

    def comm_sum_sq(self) -> np.ndarray:
        m = self.full.shape[0]
        out = np.zeros(self.full.shape[2:])
        for i in range(m):
            for j in range(i + 1, m):
                out = out + (self.full[i, j] - self.full[j, i]) ** 2
        return out

    def f2(self) -> np.ndarray:
        return np.asarray(sigma_j(self.sym, 2), dtype=float) * np.ones(self.full.shape[2:])

    def delta_x(self) -> np.ndarray:
        return np.einsum("ii...->...", self.full)


def grid_hessian(S: FieldSystem, g: GridFunction) -> GridHessian:
    if g.n != S.n:
        raise ValueError("grid dimension does not match the system")
    if min(g.counts) < 5:
        raise MarginError("need at least 5 nodes per axis for second differences")
    n1 = g.restrict(1).nodes()
    n2 = g.restrict(2).nodes()
    first = [_apply_grid_field(S, j, g.values, n1, g.h) for j in range(S.m)]
    full = np.array([[_apply_grid_field(S, i, first[j], n2, g.h) for j in range(S.m)]
                     for i in range(S.m)])
    grad = np.array([f[(slice(1, -1),) * g.n] for f in first])
    return GridHessian(g.restrict(2), grad, full)


# -- pairings ----------------------------------------------------------------------

@dataclass
class PairingResult:
    eta_id: str
    alpha: float
    value: float
    resolution: float
    error_estimate: float
    l1_delta: float | None = None
    l1_mass: float | None = None
    f2_part: float = 0.0
    e2_part: float = 0.0

    def with_alpha(self, alpha: float) -> PairingResult:
        return PairingResult(self.eta_id, alpha, self.f2_part + alpha * self.e2_part,
                             self.resolution, self.error_estimate, self.l1_delta, self.l1_mass,
                             self.f2_part, self.e2_part)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("eta_id", "alpha", "value", "l1_delta", "l1_mass",
                                              "resolution", "error_estimate")}


def _grid_parts(S: FieldSystem, g: GridFunction, eta: Cutoff) -> tuple[float, float]:
    gh = grid_hessian(S, g)
    if not eta.support_inside(gh.grid.lo, gh.grid.hi):
        raise MarginError("cutoff support leaves the doubly-interior lattice")
    w = eta(gh.grid.nodes()) * np.prod(gh.grid.h)
    return float(np.sum(w * gh.f2())), float(np.sum(w * gh.comm_sum_sq()))


def _poly_parts(S: FieldSystem, u: Polynomial, eta: Cutoff, lo, h, counts) -> tuple[float, float]:
    g = GridFunction(lo, h, np.zeros(counts))
    if not eta.support_inside(g.lo, g.hi):
        raise MarginError("cutoff support leaves the domain")
    nodes = g.nodes()
    w = eta(nodes) * np.prod(g.h)
    H = full_hessian(S, u)
    f2 = sigma_j(H.sym, 2)
    f2 = f2 if isinstance(f2, Polynomial) else Polynomial.constant(S.n, f2)
    e2 = H.commutator_sum_sq()
    return float(np.sum(w * f2(nodes))), float(np.sum(w * e2(nodes)))


def pairing(S: FieldSystem, u, eta: Cutoff, alpha=F2_ALPHA, *, domain: Domain | None = None,
            h: float | None = None, reference=None) -> PairingResult:
    """``int eta (F_2[u] + alpha E_2[u])`` by lattice quadrature.

    Polynomial ``u`` uses the exact symbolic operator on the lattice of
    ``domain`` at spacing ``h``; grid data uses composed central differences.
    The error estimate is the Richardson difference against spacing ``2h``.
    """
    alpha = float(alpha)
    if isinstance(u, Polynomial):
        if domain is None or h is None:
            raise ValueError("polynomial input needs a domain and a spacing")
        lo, hs, counts = _lattice(domain, h)
        f2, e2 = _poly_parts(S, u, eta, lo, hs, counts)
        lo2, hs2, counts2 = _lattice(domain, 2 * h)
        f2c, e2c = _poly_parts(S, u, eta, lo2, hs2, counts2)
        res = float(np.max(hs))
    elif isinstance(u, GridFunction):
        f2, e2 = _grid_parts(S, u, eta)
        try:
            f2c, e2c = _grid_parts(S, u.coarsen(), eta)
        except MarginError:
            f2c, e2c = f2, e2
        res = float(np.max(u.h))
    else:
        raise TypeError("u must be a Polynomial or a GridFunction")
    val = f2 + alpha * e2
    err = abs(val - (f2c + alpha * e2c)) / 3.0
    out = PairingResult(eta.eta_id, alpha, val, res, err, f2_part=f2, e2_part=e2)
    if reference is not None:
        out.l1_delta, out.l1_mass = _l1_pair(u, reference, domain)
    return out


def _l1_pair(u, v, domain: Domain | None) -> tuple[float, float]:
    if isinstance(u, GridFunction) and isinstance(v, GridFunction):
        return u.integrate(np.abs(u.values - v.values)), u.integrate(np.abs(u.values + v.values))
    raise TypeError("L1 distances need two grid functions on the same lattice")


# -- weak continuity ---------------------------------------------------------------

@dataclass
class LadderRow:
    eps: float
    l1_delta: float
    pairing_gap: float
    kconvex_margin: float
    pairing: float
    pairing_error: float
    f2_integral: float
    l1_mass: float

    def csv(self) -> str:
        return f"{self.eps!r},{self.l1_delta!r},{self.pairing_gap!r},{self.kconvex_margin!r}"


@dataclass
class LadderResult:
    alpha: float
    rows: list[LadderRow]
    valid: bool
    notes: list[str] = field(default_factory=list)

    @property
    def gaps(self) -> list[float]:
        return [r.pairing_gap for r in self.rows]

    def monotone(self) -> bool:
        g = self.gaps
        return all(a > b for a, b in zip(g, g[1:]))

    def final_gap(self) -> float:
        """Gap of the last rung strictly coarser than the reference."""
        return self.rows[-2].pairing_gap if len(self.rows) > 1 else 0.0

    def to_csv(self) -> str:
        return "eps,l1_delta,pairing_gap,kconvex_margin\n" + "\n".join(r.csv() for r in self.rows) + "\n"

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "valid": self.valid, "monotone": self.monotone(),
                "final_gap": self.final_gap(), "notes": self.notes,
                "rows": [r.__dict__.copy() for r in self.rows]}


def kconvex_margin(gh: GridHessian, k: int = 2, region_mask: np.ndarray | None = None) -> float:
    s = gh.sym
    vals = [np.asarray(sigma_j(s, j), dtype=float) * np.ones(s.shape[2:]) for j in range(1, k + 1)]
    v = np.min(np.stack(vals), axis=0)
    if region_mask is not None:
        v = v[region_mask]
    return float(np.min(v))


def weak_continuity_experiment(
    S: FieldSystem,
    target,
    eps_ladder: Sequence[float],
    eta: Cutoff,
    alphas: Sequence[float] = (0.0, 0.25, 0.75),
    *,
    domain: Domain,
    h: float,
    k: int = 2,
    margin_tol: float = 1e-6,
) -> list[LadderResult]:
    """Pairings of the mollified target along a ladder of eps values.

    Each ``u_eps`` is the exact continuum mollification sampled on the
    working lattice; the reference is the finest rung. L1 quantities are
    measured on the inner domain (``domain.shell`` offset).
    """
    if isinstance(target, Polynomial):
        target = PolynomialTarget(target)
    ladder = sorted(map(float, eps_ladder), reverse=True)
    lo, hs, counts = _lattice(domain, h)
    base = GridFunction(lo, hs, np.zeros(counts))
    nodes = base.nodes()
    inner = domain.inner()

    grids, parts, margins = [], [], []
    for eps in ladder:
        g = GridFunction(lo, hs, np.asarray(target.mollified(eps)(nodes), dtype=float),
                         f"mollified({eps:g})")
        gh = grid_hessian(S, g)
        mask = inner.contains(gh.grid.nodes())
        margins.append(kconvex_margin(gh, k, mask))
        if not eta.support_inside(*inner.bounding_box()):
            raise MarginError("cutoff support must lie in the inner domain")
        w = eta(gh.grid.nodes()) * np.prod(gh.grid.h)
        f2 = float(np.sum(w * gh.f2()))
        e2 = float(np.sum(w * gh.comm_sum_sq()))
        Fint = float(np.sum(np.prod(gh.grid.h) * mask * (gh.f2() + 0.75 * gh.comm_sum_sq())))
        grids.append(g)
        parts.append((f2, e2, Fint))

    ref = grids[-1]
    out = []
    for alpha in alphas:
        rows = []
        ref_val = parts[-1][0] + alpha * parts[-1][1]
        for eps, g, (f2, e2, Fint), marg in zip(ladder, grids, parts, margins):
            val = f2 + alpha * e2
            rows.append(LadderRow(
                eps=eps,
                l1_delta=g.integrate(np.abs(g.values - ref.values), inner),
                pairing_gap=abs(val - ref_val),
                kconvex_margin=marg,
                pairing=val,
                pairing_error=0.0,
                f2_integral=Fint,
                l1_mass=g.integrate(np.abs(g.values), domain),
            ))
        valid = all(r.kconvex_margin >= -margin_tol for r in rows)
        notes = [] if valid else ["a mollified iterate failed the 2-convexity check; experiment invalid"]
        out.append(LadderResult(float(alpha), rows, valid, notes))
    return out


# -- local bounds ----------------------------------------------------------------

@dataclass
class LocalBoundsReport:
    sup_ratio: float
    gradient_ratio: float
    energy_ratio: float
    f2_ratio: float
    l1_outer: float
    q: float
    r: float
    h: float

    @property
    def ratios(self) -> tuple[float, float, float, float]:
        return (self.sup_ratio, self.gradient_ratio, self.energy_ratio, self.f2_ratio)

    def finite(self) -> bool:
        return all(math.isfinite(v) for v in self.ratios)

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def local_bounds(S: FieldSystem, u, inner: Domain, outer: Domain, q: float = 1.0, r: float = 0.0,
                 *, h: float = 0.05, k: int = 2, Q: int | None = None) -> LocalBoundsReport:
    """Ratios of local quantities on ``inner`` to powers of ``||u||_{L1(outer)}``.

    ``u`` is a polynomial or a vectorised callable sampled on the lattice of
    ``outer``; derivatives come from composed central differences in both
    cases, so smooth and mollified inputs are treated alike.
    """
    from .geometry import ExponentError, exponent_report

    Q = Q if Q is not None else (S.homogeneous_dim or S.n)
    rep = exponent_report(k, S.m, Q)
    if not (1 <= q < rep.q_gradient_max):
        raise ExponentError(f"q={q} outside [1, {rep.q_gradient_max})")
    if not (0 <= r < rep.r_energy_max):
        raise ExponentError(f"r={r} outside [0, {rep.r_energy_max})")

    if isinstance(u, GridFunction):
        g = u
    else:
        g = sample_to_grid(u, outer, h)
    l1 = g.integrate(np.abs(g.values), outer)
    gh = grid_hessian(S, g)
    inner_nodes = gh.grid.nodes()
    mask = inner.contains(inner_nodes)
    if not np.any(mask):
        raise MarginError("inner domain contains no interior nodes")
    wq = _trap_weights(gh.grid.counts, gh.grid.h) * mask
    u_in = gh.grid.values[mask]
    gnorm = np.sqrt(np.sum(gh.grad**2, axis=0))
    lap = gh.delta_x()
    F = gh.f2() + 0.75 * gh.comm_sum_sq()
    sup_pos = max(float(np.max(u_in)), 0.0)
    grad_q = float(np.sum(wq * gnorm**q)) ** (1.0 / q)
    energy = float(np.sum(wq * gnorm**r * lap))
    f2i = float(np.sum(wq * F))
    return LocalBoundsReport(sup_pos / l1, grad_q / l1, energy / l1 ** (1 + r), f2i / l1**2,
                             l1, q, r, float(np.max(g.h)))


def exact_operators(S: FieldSystem, u: Polynomial) -> dict[str, Polynomial]:
    """Symbolic ``Delta_X``, ``F_2`` and ``E_2`` for cross-checking grid paths."""
    H = full_hessian(S, u)
    f2 = sigma_j(H.sym, 2)
    return {
        "delta_x": delta_x(S, u),
        "f2": f2 if isinstance(f2, Polynomial) else Polynomial.constant(S.n, f2),
        "e2": H.commutator_sum_sq(),
        "script_f2": f2_family(S, u, F2_ALPHA),
        "grad": gradient_x(S, u),
    }
