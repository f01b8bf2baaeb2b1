"""Independent reference computations used by the tests.

Nothing here imports the package's own numerics for the quantity being
checked: elementary symmetric functions come from eigenvalues, derivatives
from finite differences of point evaluations, integrals from scipy.
"""

import math

import numpy as np
from scipy import integrate


def jacobi_eigenvalues(M, tol=1e-14, sweeps=100):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(M, dtype=float)
    m = A.shape[0]
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.triu(A, 1) ** 2))
        scale = max(1.0, np.linalg.norm(A))
        if off <= tol * scale:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                if abs(A[p, q]) <= tol * tol * scale:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t**2 + 1)
                s = t * c
                J = np.eye(m)
                J[p, p] = J[q, q] = c
                J[p, q], J[q, p] = s, -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))


def esym_from_eigenvalues(M, j):
    """``S_j`` of the eigenvalues of a symmetric matrix."""
    return esym(jacobi_eigenvalues(M), j)


def esym(lam, j):
    # np.poly gives prod (x - lam_i) = sum (-1)^j S_j x^{m-j}
    coeffs = np.poly(np.asarray(lam, dtype=float))
    return (-1) ** j * coeffs[j]


def field_derivative_fd(u, coeff_at, x, t=1e-5):
    """Directional derivative of ``u`` along the vector ``coeff_at(x)`` by central differences."""
    x = np.asarray(x, dtype=float)
    b = np.asarray(coeff_at(x), dtype=float)
    return (u(x + t * b) - u(x - t * b)) / (2 * t)


def disc_moment_2d(a1, a2, radius=1.0):
    """``int_{|x| <= radius} x1^a1 x2^a2`` in polar coordinates with scipy."""
    val, _ = integrate.dblquad(
        lambda r, th: r ** (a1 + a2 + 1) * math.cos(th) ** a1 * math.sin(th) ** a2,
        0, 2 * math.pi, 0, radius, epsabs=1e-13, epsrel=1e-12)
    return val


def heisenberg_vertical_distance(z):
    """C-C distance from the origin to ``(0, 0, z)`` for the first Heisenberg group.

    The vertical coordinate is the signed area swept by the horizontal
    projection, so the isoperimetric inequality gives length ``sqrt(4 pi |z|)``.
    """
    return math.sqrt(4 * math.pi * abs(z))


def unit_ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)
