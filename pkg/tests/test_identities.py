import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import disc_moment_2d, esym, unit_ball_volume
from subhessian.fields import engel, heisenberg
from subhessian.hessian import f2_family, f2_star
from subhessian.identities import (
    RejectedInput,
    admissible_pairs,
    ball_moment,
    bump_polynomial,
    integrate_over_ball,
    monotonicity_gap,
    principal_minor_identity,
    random_k_convex_quadratic,
    ratio_chain,
    sample_garding_cone,
    verify_divergence_identity,
    verify_maclaurin_chain,
    verify_p_subharmonicity,
)
from subhessian.measures import Domain
from subhessian.sympoly import random_polynomial, variables


def corpus(n, count, seed, degree=4):
    rng = np.random.default_rng(seed)
    return [random_polynomial(n, rng, max_degree=degree) for _ in range(count)]


@pytest.mark.parametrize("S", [heisenberg(1), heisenberg(2)], ids=["h1", "h2"])
def test_divergence_identity_heisenberg(S):
    for u in corpus(S.n, 20, seed=11):
        results = verify_divergence_identity(S, u)
        assert len(results) == S.m
        assert all(r.status == "exact_zero" and r.residual.is_zero() for r in results)


def test_divergence_identity_euclidean_includes_classical(e3):
    for u in corpus(3, 10, seed=3, degree=3):
        results = verify_divergence_identity(e3, u)
        assert len(results) == 2 * e3.m
        assert all(r.status == "exact_zero" for r in results)
        assert sum(r.name.startswith("divergence[F2") for r in results) == 3


def test_divergence_identity_engel_residual(eng):
    x1, _, _, x4 = variables(4)
    results = verify_divergence_identity(eng, x1 * x1 * x4)
    assert results[0].status == "exact_zero"
    assert results[1].status == "violated"
    # the residual equals Y_2 u = D_4 (x1^2 x4)
    assert results[1].residual == x1 * x1
    assert results[1].to_dict()["residual"] == "1 * x1^2"


def test_divergence_residual_equals_y_field(eng):
    from subhessian.fields import apply_field, y_fields
    Y = y_fields(eng)
    for u in corpus(4, 5, seed=2):
        for j, r in enumerate(verify_divergence_identity(eng, u)):
            assert r.residual == apply_field(Y[j], u)


def test_maclaurin_equality_case():
    lam = [Fraction(1)] * 3
    res = verify_maclaurin_chain(lam, 2)
    assert res.status == "exact_zero" and res.details["decomposition_exact"]
    lower, ratio, upper = ratio_chain([1.0, 1.0, 1.0], 2, 0)
    assert ratio == pytest.approx(0.5) and upper == pytest.approx(0.5) and lower == -1


def test_maclaurin_k_equals_m_forces_nonnegative():
    assert verify_maclaurin_chain([0.5, 0.2, 0.1], 3).ok
    with pytest.raises(RejectedInput):
        verify_maclaurin_chain([0.5, 0.2, -0.1], 3)


@pytest.mark.parametrize("lam, k", [([-1.0, -1.0, 0.5], 1), ([1.0, -1.0, -1.0, 0.0], 2)])
def test_maclaurin_rejects_outside_cone(lam, k):
    with pytest.raises(RejectedInput):
        verify_maclaurin_chain(lam, k)


@pytest.mark.parametrize("m, k", [(3, 2), (4, 2), (5, 2), (5, 3)])
def test_maclaurin_monte_carlo(m, k):
    lams = sample_garding_cone(m, k, 1000, np.random.default_rng(m * 10 + k))
    for j in range(1, k + 1):
        assert np.all([esym(lam, j) >= -1e-12 for lam in lams])
    assert all(verify_maclaurin_chain(lam, k).ok for lam in lams)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=9), min_size=2, max_size=6),
       st.integers(1, 6))
def test_decomposition_exact_on_rationals(lam, k):
    from subhessian.identities import _esym
    k = min(k, len(lam))
    for i in range(len(lam)):
        assert _esym(lam, k) == _esym(lam, k, [i]) + _esym(lam, k - 1, [i]) * lam[i]


def test_p_subharmonicity_reduces_to_sub_laplacian(h1):
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(200, 3))
    for _ in range(5):
        u = random_k_convex_quadratic(h1, 1, rng)
        res = verify_p_subharmonicity(h1, u, 1, pts, 2.0)
        assert res.ok and res.residual >= 0


def test_p_subharmonicity_heisenberg2_boundary_exponent(h2):
    rng = np.random.default_rng(1)
    pts = rng.uniform(-2, 2, size=(300, 5))
    for _ in range(5):
        u = random_k_convex_quadratic(h2, 2, rng)
        res = verify_p_subharmonicity(h2, u, 2, pts, 4.0)
        assert res.ok
        # denominator m(k-1) - r(m-k) vanishes at the boundary exponent
        assert res.details["weighted_bound_checked"] == 0


def test_weighted_bound_checked_below_boundary(h2):
    rng = np.random.default_rng(2)
    pts = rng.uniform(-2, 2, size=(300, 5))
    u = random_k_convex_quadratic(h2, 2, rng)
    res = verify_p_subharmonicity(h2, u, 2, pts, 3.0)
    assert res.ok and res.details["weighted_bound_checked"] == 300
    assert res.details["weighted_bound_min_gap"] >= -1e-9


def test_infinity_case_k_equals_m(h1):
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, size=(200, 3))
    u = random_k_convex_quadratic(h1, 2, rng)
    assert verify_p_subharmonicity(h1, u, 2, pts, math.inf).ok


def test_p_subharmonicity_rejections(h1, h2):
    x1, x2, _ = variables(3)
    pts = np.random.default_rng(0).uniform(-1, 1, size=(20, 3))
    with pytest.raises(RejectedInput):
        verify_p_subharmonicity(h1, -(x1 * x1 + x2 * x2), 1, pts, 2.0)
    u = random_k_convex_quadratic(h2, 2, np.random.default_rng(0))
    with pytest.raises(RejectedInput):
        verify_p_subharmonicity(h2, u, 2, np.zeros((1, 5)), 4.5)


def test_singular_points_counted(h1):
    x1, x2, _ = variables(3)
    u = Fraction(1, 2) * (x1 * x1 + x2 * x2)
    pts = np.array([[0.0, 0.0, 0.0], [0.5, 0.1, 0.0]])
    res = verify_p_subharmonicity(h1, u, 1, pts, 1.5)
    assert res.details["singular_skipped"] == 1 and res.ok


@pytest.mark.parametrize("alpha", [(0, 0), (2, 0), (0, 2), (2, 2), (4, 2), (1, 1), (3, 0)])
def test_ball_moment_against_scipy(alpha):
    assert ball_moment(alpha, 0.8) == pytest.approx(disc_moment_2d(*alpha, 0.8), rel=1e-10, abs=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_ball_moment_volume(n):
    assert ball_moment((0,) * n) == pytest.approx(unit_ball_volume(n), rel=1e-13)


def test_bump_vanishes_to_second_order_on_sphere():
    b = bump_polynomial(3)
    x = (Fraction(3, 5), 0, Fraction(4, 5))
    assert b(x) == 0
    for j in range(3):
        assert b.diff(j)(x) == 0
        for k in range(3):
            assert b.diff(j).diff(k)(x) == 0
    assert bump_polynomial(3, power=1).diff(0)(x) != 0


def test_monotonicity_identical_pair(h1):
    u, _ = admissible_pairs(h1, 1)[0]
    res = monotonicity_gap(h1, u, u, Domain.ball((0, 0, 0), 1.0))
    assert res.gap == 0 and res.holds


@pytest.mark.parametrize("S, which, h", [(heisenberg(1), "f2", 0.05), (engel(), "f2_star", 0.1)],
                         ids=["h1", "engel"])
def test_monotonicity_pairs(S, which, h):
    op = f2_family if which == "f2" else f2_star
    ball = Domain.ball((0,) * S.n, 1.0)
    for u, v in admissible_pairs(S, 3, seed=5):
        res = monotonicity_gap(S, u, v, ball, which, h)
        assert res.holds
        assert res.richardson_agreement < 0.05
        exact = integrate_over_ball(op(S, u) - op(S, v))
        # integration by parts against a bump vanishing to second order leaves no gap
        assert abs(exact) < 1e-10 * (1 + res.scale)
        assert abs(res.gap - exact) <= 4 * res.quadrature_error + 1e-12


def test_monotonicity_strictly_positive_for_flat_bump(h1):
    # a bump with a non-zero normal derivative leaves a positive boundary contribution
    x1, x2, x3 = variables(3)
    u = 2 * (x1 * x1 + x2 * x2 + x3 * x3)
    v = u + Fraction(1, 10) * bump_polynomial(3, power=1)
    ball = Domain.ball((0, 0, 0), 1.0)
    res = monotonicity_gap(h1, u, v, ball, "f2", 0.04)
    exact = integrate_over_ball(f2_family(h1, u) - f2_family(h1, v))
    assert exact > 0
    assert res.gap == pytest.approx(exact, rel=0.02)


def test_monotonicity_rejections(h1):
    x1, x2, x3 = variables(3)
    u = 2 * (x1 * x1 + x2 * x2 + x3 * x3)
    ball = Domain.ball((0, 0, 0), 1.0)
    with pytest.raises(RejectedInput, match="u <= v"):
        monotonicity_gap(h1, u + bump_polynomial(3), u, ball)
    with pytest.raises(RejectedInput, match="boundary"):
        monotonicity_gap(h1, u, u + 1 - x1 * x1 / 4, ball)
    concave = -10 * (x1 * x1 + x2 * x2)
    with pytest.raises(RejectedInput, match="elliptic"):
        monotonicity_gap(h1, concave, concave + bump_polynomial(3), ball)
    with pytest.raises(ValueError):
        monotonicity_gap(h1, u, u, ball, which="f3")


def test_monotonicity_serialises(h1):
    u, v = admissible_pairs(h1, 1)[0]
    d = monotonicity_gap(h1, u, v, Domain.ball((0, 0, 0), 1.0), h=0.1).to_dict()
    assert {"gap", "quadrature_error", "holds"} <= set(d)
    json.dumps(d)


@pytest.mark.parametrize("seed", range(3))
def test_principal_minor_identity_float(seed):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        lhs, rhs = principal_minor_identity(rng.standard_normal((4, 4)))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_identity_result_serialises(h1):
    res = verify_divergence_identity(h1, corpus(3, 1, 0)[0])[0]
    d = res.to_dict()
    assert d["status"] == "exact_zero" and d["residual"] == "0" and d["residual_norm"] == 0
    json.dumps(d)
