from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import esym_from_eigenvalues
from subhessian.fields import apply_field, engel, euclidean, heisenberg, y_fields
from subhessian.hessian import (
    CompiledOperators,
    SingularPointError,
    delta_inf,
    delta_p,
    delta_x,
    e2,
    ellipticity_margin,
    f2_family,
    f2_first_form,
    f2_linearized,
    f2_star,
    full_hessian,
    is_k_convex,
    laplacians,
    sigma_j,
)
from subhessian.identities import random_k_convex_quadratic
from subhessian.sympoly import DimensionError, Polynomial, random_polynomial, variables

half = Fraction(1, 2)
P = lambda c, n=3: Polynomial.constant(n, c)  # noqa: E731


def as_float(M):
    return np.array([[float(v(np.zeros(3))) if isinstance(v, Polynomial) else float(v) for v in row]
                     for row in M])


def test_hessian_of_vertical_coordinate(h1):
    x3 = variables(3)[2]
    H = full_hessian(h1, x3)
    assert H.full == ((P(0), P(half)), (P(-half), P(0)))
    assert H.sym == ((P(0), P(0)), (P(0), P(0)))
    assert H.comm == {(0, 1): P(1)}


def test_hessian_of_horizontal_paraboloid(h1):
    x1, x2, _ = variables(3)
    H = full_hessian(h1, half * (x1 * x1 + x2 * x2))
    assert H.full == H.sym == ((P(1), P(0)), (P(0), P(1)))
    assert H.comm[(0, 1)].is_zero()


def test_euclidean_quadratic_hessian():
    A = [[2, 1, 0], [1, -3, 4], [0, 4, 5]]
    xs = variables(3)
    u = Polynomial.zero(3)
    for a in range(3):
        for b in range(3):
            u = u + Fraction(A[a][b], 2) * xs[a] * xs[b]
    H = full_hessian(euclidean(3), u)
    assert H.full == H.sym == tuple(tuple(P(v) for v in row) for row in A)


@pytest.mark.parametrize("S", [heisenberg(1), heisenberg(2), engel()])
@pytest.mark.parametrize("seed", range(3))
def test_hessian_pair_invariants(S, seed):
    u = random_polynomial(S.n, np.random.default_rng(seed), max_degree=4)
    H = full_hessian(S, u)
    for i in range(S.m):
        for j in range(S.m):
            assert H.sym[i][j] == H.sym[j][i]
    for (i, j), c in H.comm.items():
        assert H.full[i][j] == H.sym[i][j] + half * c
        assert H.full[j][i] == H.sym[i][j] - half * c
        assert c == apply_field(S.bracket(i, j), u)


def test_dimension_mismatch(h1):
    with pytest.raises(DimensionError):
        full_hessian(h1, Polynomial.variable(4, 0))


def test_sigma_identity():
    eye = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert sigma_j(eye, 2) == 3
    assert sigma_j(eye, 0) == 1
    assert sigma_j(eye, 3) == 1
    assert sigma_j(eye, 2, deleted=[0]) == 1
    assert sigma_j(eye, 1, deleted=[0]) == 2
    with pytest.raises(ValueError):
        sigma_j(eye, 4)


@pytest.mark.parametrize("seed", range(10))
def test_sigma_matches_eigenvalue_oracle(seed):
    A = np.random.default_rng(seed).standard_normal((4, 4))
    A = A + A.T
    for j in range(5):
        assert sigma_j(A.tolist(), j) == pytest.approx(esym_from_eigenvalues(A, j), abs=1e-9)


def test_sigma_vectorised_over_stacks():
    rng = np.random.default_rng(0)
    s = rng.standard_normal((3, 3, 7))
    s = s + s.transpose(1, 0, 2)
    vals = sigma_j(s, 2)
    for t in range(7):
        assert vals[t] == pytest.approx(esym_from_eigenvalues(s[:, :, t], 2), abs=1e-9)


@pytest.mark.parametrize("u, alpha, expected", [
    ("1 * x3^1", Fraction(3, 4), Fraction(3, 4)),
    ("1 * x3^1", 0, 0),
    ("1/2 * x1^2 + 1/2 * x2^2", Fraction(3, 4), 1),
    ("1/2 * x1^2 + 1/2 * x2^2", 5, 1),
])
def test_f2_family_examples(h1, u, alpha, expected):
    assert f2_family(h1, Polynomial.from_text(u, 3), alpha) == P(expected)


@pytest.mark.parametrize("seed", range(8))
def test_first_form_equals_three_quarters(h1, seed):
    u = random_polynomial(3, np.random.default_rng(seed), max_degree=4)
    H = full_hessian(h1, u)
    assert f2_first_form(H.full) == f2_family(h1, u, Fraction(3, 4))


@pytest.mark.parametrize("seed", range(5))
def test_alpha_family_difference_is_e2(h2, seed):
    u = random_polynomial(5, np.random.default_rng(seed), max_degree=3)
    assert f2_family(h2, u, Fraction(3, 4)) - f2_family(h2, u, 0) == Fraction(3, 4) * e2(h2, u)


def test_family_alpha_independent_on_commuting_system(e3):
    u = random_polynomial(3, np.random.default_rng(2), max_degree=4)
    assert f2_family(e3, u, 0) == f2_family(e3, u, Fraction(3, 4)) == f2_star(e3, u)


def test_linearized_examples():
    m = 3
    eye = [[Fraction(int(i == j)) for j in range(m)] for i in range(m)]
    assert f2_linearized(eye) == [[(m - 1) * int(i == j) for j in range(m)] for i in range(m)]
    assert f2_linearized([[0, half], [-half, 0]]) == [[0, Fraction(3, 2)], [Fraction(-3, 2), 0]]
    with pytest.raises(ValueError):
        f2_linearized([[1, 2]])


@st.composite
def rational_matrices(draw, m=4):
    vals = draw(st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=7), min_size=m * m, max_size=m * m))
    return [vals[i * m:(i + 1) * m] for i in range(m)]


@settings(max_examples=80, deadline=None)
@given(rational_matrices())
def test_linearization_euler_identity(r):
    L = f2_linearized(r)
    m = len(r)
    assert sum(L[i][j] * r[i][j] for i in range(m) for j in range(m)) == 2 * f2_first_form(r)


@settings(max_examples=80, deadline=None)
@given(rational_matrices())
def test_linearization_symmetric_reduces_to_classical(r):
    m = len(r)
    s = [[(r[i][j] + r[j][i]) / 2 for j in range(m)] for i in range(m)]
    tr = sum(s[i][i] for i in range(m))
    assert f2_linearized(s) == [[(tr if i == j else 0) - s[i][j] for j in range(m)] for i in range(m)]


@settings(max_examples=80, deadline=None)
@given(rational_matrices())
def test_principal_minor_identity_exact(r):
    m = len(r)
    minors = sum(r[i][i] * r[j][j] - r[i][j] * r[j][i] for i in range(m) for j in range(i + 1, m))
    s = [[(r[i][j] + r[j][i]) / 2 for j in range(m)] for i in range(m)]
    comm = sum((r[i][j] - r[j][i]) ** 2 for i in range(m) for j in range(i + 1, m))
    assert minors == sigma_j(s, 2) + Fraction(1, 4) * comm


def test_f2_star_heisenberg_is_script_f2(h1):
    u = random_polynomial(3, np.random.default_rng(5), max_degree=4)
    assert f2_star(h1, u) == f2_family(h1, u)


def test_f2_star_engel_vertical_coordinate(eng):
    x1, _, _, x4 = variables(4)
    u = x4
    # X_2 x4 = x1^2 / 2, Y_2 = D_4 so Y_2 u = 1
    Y = y_fields(eng)
    assert apply_field(Y[1], u) == P(1, 4)
    assert f2_star(eng, u) == f2_family(eng, u) + half * (half * x1 * x1)


def test_sub_laplacian(h1):
    x1, x2, _ = variables(3)
    assert delta_x(h1, half * (x1 * x1 + x2 * x2)) == P(2)
    assert laplacians(h1, half * (x1 * x1 + x2 * x2), "delta_X", x=(1, 2, 3)) == 2


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.5])
def test_p_laplacian_radial(n, p):
    xs = variables(n)
    u = half * sum((x * x for x in xs), Polynomial.zero(n))
    x = np.random.default_rng(n).uniform(-1, 1, n)
    r = float(np.linalg.norm(x))
    assert delta_p(euclidean(n), u, p, x) == pytest.approx(r ** (p - 2) * (n + p - 2), rel=1e-12)


def test_p_laplacian_singular_point(e3):
    xs = variables(3)
    u = half * (xs[0] * xs[0] + xs[1] * xs[1] + xs[2] * xs[2])
    with pytest.raises(SingularPointError):
        delta_p(e3, u, 1.5, (0, 0, 0))
    assert delta_p(e3, u, 3.0, (0, 0, 0)) == 0
    assert delta_p(e3, u, 2.0, (0, 0, 0)) == 3


def test_p_laplacian_divergence_form_oracle(h1):
    # X_i(|Xu|^{p-2} X_i u) by finite differences along the fields
    u = random_polynomial(3, np.random.default_rng(9), max_degree=3)
    ops = CompiledOperators(h1, u)
    p = 3.0
    x = np.array([0.3, -0.2, 0.5])
    t = 1e-5
    total = 0.0
    for i in range(2):
        b = h1[i].at(x)

        def flux(y):
            g = ops.gradient(y[None, :])[:, 0]
            return np.linalg.norm(g) ** (p - 2) * g[i]
        total += (flux(x + t * b) - flux(x - t * b)) / (2 * t)
    assert delta_p(h1, u, p, x) == pytest.approx(total, rel=1e-6)


def test_infinity_laplacian(h1):
    x3 = variables(3)[2]
    rng = np.random.default_rng(0)
    for x in rng.uniform(-1, 1, size=(5, 3)):
        assert delta_inf(h1, x3, x) == 0
    with pytest.raises(ValueError):
        laplacians(h1, x3, "delta_inf")


def test_k_convex_examples(h1):
    x1, x2, x3 = variables(3)
    pts = np.random.default_rng(0).uniform(-2, 2, size=(50, 3))
    assert is_k_convex(h1, half * (x1 * x1 + x2 * x2), 2, pts).holds
    assert is_k_convex(h1, x3, 2, pts).holds
    xs = variables(2)
    rep = is_k_convex(euclidean(2), -half * (xs[0] * xs[0] + xs[1] * xs[1]), 1, pts[:, :2])
    assert not rep.holds and rep.worst_value == pytest.approx(-2) and rep.worst_j == 1
    with pytest.raises(ValueError):
        is_k_convex(h1, x3, 1, np.empty((0, 3)))


@pytest.mark.parametrize("seed", range(10))
def test_degenerate_ellipticity_of_two_convex(h2, seed):
    rng = np.random.default_rng(seed)
    u = random_k_convex_quadratic(h2, 2, rng)
    pts = rng.uniform(-1, 1, size=(20, 5))
    assert is_k_convex(h2, u, 2, pts).holds
    s = CompiledOperators(h2, u).sym(pts)
    assert np.all(ellipticity_margin(s) >= -1e-9)
