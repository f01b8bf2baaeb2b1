"""Carnot-Caratheodory distance estimates, ball volumes and exponents.

Distances are upper bounds: every returned value comes with a feasible
piecewise-constant-control path ``gamma' = sum_i c_i X_i(gamma)``,
``|c| <= 1``. Paths are found by minimum-norm Gauss-Newton on the controls
of a unit-horizon problem (which drives the path towards constant speed),
then each segment is rescaled to unit speed so the horizon equals the length.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .fields import FieldSystem

log = logging.getLogger(__name__)

__all__ = [
    "CCPath",
    "DistanceBudget",
    "UnreachableError",
    "ExponentError",
    "cc_distance",
    "cc_distances",
    "ball_volume",
    "VolumeEstimate",
    "DimensionFit",
    "doubling_check",
    "homogeneous_dimension",
    "ExponentReport",
    "exponent_report",
]

INF = math.inf


class UnreachableError(RuntimeError):
    """No feasible path was found within the budget (not a claim that d is infinite)."""


class ExponentError(ValueError):
    """Parameters outside the admissible range."""


@dataclass(frozen=True)
class DistanceBudget:
    segments: int = 32
    iterations: int = 60
    restarts: int = 8
    substeps: int = 1
    reach_tol: float = 1e-3  # times (1 + |y|)


COARSE = DistanceBudget(segments=16, iterations=30, restarts=3)


@dataclass
class CCPath:
    """A sub-unitary path: unit controls held for the given durations."""

    T: float
    nodes: np.ndarray  # (K+1, n)
    controls: np.ndarray  # (K, m), each row of norm <= 1
    durations: np.ndarray  # (K,)

    def is_subunitary(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.linalg.norm(self.controls, axis=1) <= 1 + tol))

    def to_csv(self) -> str:
        n = self.nodes.shape[1]
        head = "t," + ",".join(f"x{j + 1}" for j in range(n))
        t = np.concatenate([[0.0], np.cumsum(self.durations)])
        rows = [",".join(repr(float(v)) for v in (ti, *x)) for ti, x in zip(t, self.nodes)]
        return head + "\n" + "\n".join(rows) + "\n"


class _Dynamics:
    """Vectorised coefficient evaluation ``B(x)`` and ``dB/dx`` for a system."""

    def __init__(self, S: FieldSystem):
        self.m, self.n = S.m, S.n
        self.entries = [(i, j, b) for i, X in enumerate(S.fields) for j, b in enumerate(X.coeffs) if b]
        self.jac = [(i, j, k, b.diff(k)) for i, j, b in self.entries for k in range(S.n)]
        self.jac = [e for e in self.jac if e[3]]

    def B(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape[:-1] + (self.m, self.n))
        for i, j, b in self.entries:
            out[..., i, j] = b(x)
        return out

    def dB(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape[:-1] + (self.m, self.n, self.n))
        for i, j, k, d in self.jac:
            out[..., i, j, k] = d(x)
        return out

    def rollout(self, x0: np.ndarray, C: np.ndarray, substeps: int) -> np.ndarray:
        """Euler states for controls ``C`` of shape (P, N, m) over unit time."""
        P, N, _ = C.shape
        dt = 1.0 / (N * substeps)
        xs = np.empty((N * substeps + 1, P, self.n))
        xs[0] = x0
        x = x0
        for t in range(N * substeps):
            c = C[:, t // substeps]
            x = x + dt * np.einsum("pmn,pm->pn", self.B(x), c)
            xs[t + 1] = x
        return xs

    def jacobian(self, xs: np.ndarray, C: np.ndarray, substeps: int) -> np.ndarray:
        """``d x_end / d C`` with shape (P, n, N*m) by backward sensitivity."""
        P, N, m = C.shape
        dt = 1.0 / (N * substeps)
        lam = np.broadcast_to(np.eye(self.n), (P, self.n, self.n)).copy()
        J = np.zeros((P, self.n, N, m))
        for t in range(N * substeps - 1, -1, -1):
            k = t // substeps
            x = xs[t]
            Bt = self.B(x)
            J[:, :, k, :] += dt * np.einsum("pab,pmb->pam", lam, Bt)
            if self.jac:
                A = np.einsum("pm,pmjk->pjk", C[:, k], self.dB(x))
                lam = lam + dt * np.einsum("paj,pjk->pak", lam, A)
        return J.reshape(P, self.n, N * m)


def _solve_batch(dyn: _Dynamics, x0: np.ndarray, Y: np.ndarray, budget: DistanceBudget,
                 rng: np.random.Generator):
    """Run multi-start Gauss-Newton for each target; returns (T, C_best, reached)."""
    P = Y.shape[0]
    R, N, m, n = budget.restarts, budget.segments, dyn.m, dyn.n
    Yr = np.repeat(Y, R, axis=0)
    X0 = np.broadcast_to(x0, Yr.shape).copy()
    dist = np.linalg.norm(Yr - X0, axis=1)
    scale = (dist + np.sqrt(dist))[:, None, None]
    C = rng.standard_normal((P * R, N, m)) * scale / math.sqrt(m)
    tol = budget.reach_tol * (1 + np.linalg.norm(Yr, axis=1))
    step = np.ones(P * R)
    xs = dyn.rollout(X0, C, budget.substeps)
    err = np.linalg.norm(Yr - xs[-1], axis=1)
    for _ in range(budget.iterations):
        active = err > 1e-10 * (1 + np.linalg.norm(Yr, axis=1))
        if not np.any(active):
            break
        J = dyn.jacobian(xs, C, budget.substeps)
        cf = C.reshape(P * R, N * m)
        rhs = (Yr - xs[-1]) + np.einsum("pnk,pk->pn", J, cf)
        JJt = np.einsum("pak,pbk->pab", J, J) + 1e-12 * np.eye(n)
        nu = np.linalg.solve(JJt, rhs[..., None])[..., 0]
        target = np.einsum("pnk,pn->pk", J, nu).reshape(C.shape)
        Cn = C + step[:, None, None] * (target - C)
        xn = dyn.rollout(X0, Cn, budget.substeps)
        errn = np.linalg.norm(Yr - xn[-1], axis=1)
        # accept improving (or already tight) steps; shrink the step otherwise
        ok = (errn <= np.maximum(err, tol)) & np.isfinite(errn)
        ok &= active
        C = np.where(ok[:, None, None], Cn, C)
        xs = np.where(ok[None, :, None], xn, xs)
        err = np.where(ok, errn, err)
        step = np.where(ok, np.minimum(1.0, step * 2), step * 0.5)
    T = np.linalg.norm(C, axis=2).sum(axis=1) / N
    reached = err <= tol
    T = np.where(reached, T, np.inf).reshape(P, R)
    best = np.argmin(T, axis=1)
    Tbest = T[np.arange(P), best]
    Cbest = C.reshape(P, R, N, m)[np.arange(P), best]
    return Tbest, Cbest, np.isfinite(Tbest)


def _certificate(dyn: _Dynamics, x0: np.ndarray, C: np.ndarray, substeps: int) -> CCPath:
    N = C.shape[0]
    xs = dyn.rollout(x0[None, :], C[None], substeps)[:, 0]
    nodes = xs[::substeps]
    speed = np.linalg.norm(C, axis=1)
    unit = np.divide(C, speed[:, None], out=np.zeros_like(C), where=speed[:, None] > 0)
    return CCPath(float(speed.sum() / N), nodes, unit, speed / N)


def cc_distance(S: FieldSystem, x, y, budget: DistanceBudget = DistanceBudget(),
                seed: int = 0) -> tuple[float, CCPath]:
    """Upper-bound estimate of ``d(x, y)`` with its certificate path."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dyn = _Dynamics(S)
    if np.array_equal(x, y):
        return 0.0, CCPath(0.0, x[None, :], np.zeros((0, S.m)), np.zeros(0))
    rng = np.random.default_rng(seed)
    T, C, ok = _solve_batch(dyn, x, y[None, :], budget, rng)
    if not ok[0]:
        raise UnreachableError(f"no feasible path from {x.tolist()} to {y.tolist()} within budget")
    path = _certificate(dyn, x, C[0], budget.substeps)
    return float(T[0]), path


def cc_distances(S: FieldSystem, x, Y, budget: DistanceBudget = COARSE, seed: int = 0,
                 chunk: int = 2048) -> np.ndarray:
    """Distance estimates from ``x`` to each row of ``Y``; ``inf`` where unreached."""
    x = np.asarray(x, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    dyn = _Dynamics(S)
    rng = np.random.default_rng(seed)
    out = np.empty(len(Y))
    for s in range(0, len(Y), chunk):
        T, _, _ = _solve_batch(dyn, x, Y[s:s + chunk], budget, rng)
        out[s:s + chunk] = T
    out[np.all(Y == x, axis=1)] = 0.0
    return out


# -- ball volumes ----------------------------------------------------------------

def _probe_extent(dyn: _Dynamics, x: np.ndarray, R: float, rng: np.random.Generator,
                  n_paths: int = 64, N: int = 32) -> np.ndarray:
    """Per-axis reach of a family of sub-unitary paths of length ``R``."""
    m = dyn.m
    t = (np.arange(N) + 0.5) / N
    paths = []
    for _ in range(n_paths // 2):
        d = rng.standard_normal(m)
        paths.append(np.tile(d / np.linalg.norm(d), (N, 1)))
    for k in range(n_paths - len(paths)):
        # rotating controls sweep loops, which reach the bracket directions
        omega = math.pi * (1 + k % 4)
        c = np.zeros((N, m))
        i, j = rng.choice(m, size=2, replace=False) if m > 1 else (0, 0)
        phase = rng.uniform(0, 2 * math.pi)
        c[:, i] = np.cos(omega * t + phase)
        if m > 1:
            c[:, j] = np.sin(omega * t + phase)
        c /= np.maximum(np.linalg.norm(c, axis=1, keepdims=True), 1e-12)
        paths.append(c)
    C = np.array(paths) * R
    xs = dyn.rollout(np.broadcast_to(x, (len(C), dyn.n)).copy(), C, 2)
    return np.max(np.abs(xs - x), axis=(0, 1))


@dataclass
class VolumeEstimate:
    R: float
    volume: float
    stderr: float
    box_lo: np.ndarray
    box_hi: np.ndarray
    inside_fraction: float
    enlargements: int = 0

    def csv_row(self) -> str:
        return f"{self.R!r},{self.volume!r},{self.stderr!r}"


def ball_volume(S: FieldSystem, x, R: float, samples: int = 2000, seed: int = 0,
                budget: DistanceBudget = COARSE, max_enlarge: int = 4) -> VolumeEstimate:
    """Monte Carlo volume of the C-C ball ``{z : d(x, z) <= R}``."""
    if R <= 0:
        raise ValueError("R must be positive")
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    x = np.asarray(x, dtype=float)
    dyn = _Dynamics(S)
    rng = np.random.default_rng(seed)
    half = 1.25 * _probe_extent(dyn, x, R, rng) + 1e-9 * R
    U = rng.uniform(-1.0, 1.0, size=(samples, S.n))
    for enlarge in range(max_enlarge + 1):
        Z = x + U * half
        d = cc_distances(S, x, Z, budget, seed=seed + 1)
        inside = d <= R
        near_face = np.abs(U[inside]) > 0.9
        grow = np.any(near_face, axis=0)
        if not np.any(grow) or enlarge == max_enlarge:
            break
        log.info("ball_volume: enlarging bounding box along axes %s", np.flatnonzero(grow).tolist())
        half = np.where(grow, 1.5 * half, half)
    box = float(np.prod(2 * half))
    p = float(np.mean(inside))
    return VolumeEstimate(R, p * box, box * math.sqrt(max(p * (1 - p), 0.0) / samples),
                          x - half, x + half, p, enlarge)


@dataclass
class DimensionFit:
    Q_fit: float
    Q_int: int
    doubling_ok: bool
    status: str
    volumes: list[VolumeEstimate] = field(default_factory=list)

    def to_csv(self) -> str:
        return "R,volume,stderr\n" + "\n".join(v.csv_row() for v in self.volumes) + "\n"

    def to_dict(self) -> dict:
        return {"Q_fit": self.Q_fit, "Q_int": self.Q_int, "doubling_ok": self.doubling_ok,
                "status": self.status,
                "volumes": [{"R": v.R, "volume": v.volume, "stderr": v.stderr} for v in self.volumes]}


def doubling_check(volumes: list[VolumeEstimate], Q: float, C: float = 1.0, nsigma: float = 3.0) -> bool:
    """``|B_{tR}| >= C t^Q |B_R|`` for consecutive radii, up to Monte Carlo error."""
    vs = sorted(volumes, key=lambda v: v.R)
    for a, b in zip(vs, vs[1:]):
        t = a.R / b.R
        rhs = C * t**Q * b.volume
        slack = nsigma * math.hypot(a.stderr, C * t**Q * b.stderr)
        if a.volume < rhs - slack:
            return False
    return True


def homogeneous_dimension(S: FieldSystem, x, radii, samples: int = 2000, seed: int = 0,
                          budget: DistanceBudget = COARSE, Q: int | None = None) -> DimensionFit:
    """Least-squares slope of ``log |B_R|`` against ``log R``."""
    radii = sorted(float(r) for r in radii)
    if len(radii) < 3 or radii[-1] / radii[0] < 4 - 1e-12:
        raise ValueError("need at least 3 radii spanning a factor of 4")
    vols = [ball_volume(S, x, R, samples, seed, budget) for R in radii]
    V = np.array([v.volume for v in vols])
    se = np.array([v.stderr for v in vols])
    if np.any(V <= 0) or np.any(se / np.where(V > 0, V, 1) > 0.2):
        return DimensionFit(float("nan"), 0, False, "inconclusive", vols)
    slope = float(np.polyfit(np.log(radii), np.log(V), 1)[0])
    Qi = int(math.ceil(slope - 1e-9)) if Q is None else int(Q)
    return DimensionFit(slope, Qi, doubling_check(vols, Qi), "ok", vols)


# -- exponents -------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentReport:
    k: int
    m: int
    Q: int
    p_laplace_max: Fraction | float
    q_gradient_max: Fraction | float
    r_energy_max: Fraction | float
    p_sobolev_max: Fraction | float
    sobolev_branch: str  # "finite" or "infinite"
    holder_threshold_k: Fraction
    holder_alpha: Fraction | None

    def to_dict(self) -> dict:
        def enc(v):
            if v is None:
                return None
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            return str(v)

        return {"k": self.k, "m": self.m, "Q": self.Q,
                "p_laplace_max": enc(self.p_laplace_max),
                "q_gradient_max": enc(self.q_gradient_max),
                "r_energy_max": enc(self.r_energy_max),
                "p_sobolev_max": enc(self.p_sobolev_max),
                "sobolev_branch": self.sobolev_branch,
                "holder_threshold_k": enc(self.holder_threshold_k),
                "holder_alpha": enc(self.holder_alpha)}


def exponent_report(k: int, m: int, Q: int) -> ExponentReport:
    """Integrability and Holder exponents for k-convex functions, exactly."""
    if not (isinstance(k, int) and isinstance(m, int) and isinstance(Q, int)):
        raise ExponentError("k, m, Q must be integers")
    if m < 1 or not 1 <= k <= m:
        raise ExponentError(f"need 1 <= k <= m, got k={k}, m={m}")
    if Q < 2:
        raise ExponentError(f"need Q >= 2, got Q={Q}")
    F = Fraction
    if k == m:
        p_lap = q_grad = r_en = INF
    else:
        p_lap = 1 + F(k * (m - 1), m - k)
        q_grad = F(Q * k * (m - 1), (Q - 1) * (m - k))
        r_en = F(m * (k - 1), m - k)
    lhs, rhs = (Q - 1) * m, (Q + m - 2) * k
    if lhs < rhs:
        branch, p_sob = "infinite", INF
    elif lhs == rhs:
        # every finite p is admissible; the closed form degenerates
        branch, p_sob = "finite", INF
    else:
        branch, p_sob = "finite", F(Q * k * (m - 1), lhs - rhs)
    threshold = F((Q - 1) * m, Q + m - 2)
    if k == m:
        alpha = F(1)
    elif k > threshold:
        alpha = F(k * (Q + m - 2) - m * (Q - 1), k * (m - 1))
    else:
        alpha = None
    return ExponentReport(k, m, Q, p_lap, q_grad, r_en, p_sob, branch, threshold, alpha)
