from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import field_derivative_fd
from subhessian.fields import (
    FieldSystem,
    VectorField,
    apply_field,
    builtin,
    check_conditions,
    commutator,
    dump_system,
    engel,
    euclidean,
    heisenberg,
    load_system,
    parse_system,
    y_fields,
)
from subhessian.sympoly import DimensionError, Polynomial, random_polynomial, variables

half = Fraction(1, 2)


def coordinate(n, j):
    return VectorField.coordinate(n, j)


@st.composite
def random_fields(draw, n=3):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return VectorField(tuple(random_polynomial(n, rng, max_degree=2, n_terms=3) for _ in range(n)))


def test_heisenberg_fields_match_definition(h1):
    x1, x2, x3 = variables(3)
    u = x1 * x1 * x3 + x2 * x3 * x3
    assert apply_field(h1[0], u) == u.diff(0) - half * x2 * u.diff(2)
    assert apply_field(h1[1], u) == u.diff(1) + half * x1 * u.diff(2)


@pytest.mark.parametrize("field_index, f, expected", [
    (0, (0, 0, 1), Polynomial(3, {(0, 1, 0): Fraction(-1, 2)})),
    (0, (1, 0, 0), Polynomial.constant(3, 1)),
    (1, (0, 0, 1), Polynomial(3, {(1, 0, 0): Fraction(1, 2)})),
])
def test_apply_field_heisenberg(h1, field_index, f, expected):
    assert apply_field(h1[field_index], Polynomial(3, {f: 1})) == expected


@pytest.mark.parametrize("i", range(3))
@pytest.mark.parametrize("j", range(3))
def test_euclidean_coordinate_derivatives(e3, i, j):
    assert apply_field(e3[i], variables(3)[j]) == Polynomial.constant(3, int(i == j))


def test_apply_field_matches_finite_difference(eng):
    rng = np.random.default_rng(0)
    u = random_polynomial(4, rng, max_degree=4)
    for X in eng.fields:
        Xu = apply_field(X, u)
        for x in rng.uniform(-1, 1, size=(5, 4)):
            fd = field_derivative_fd(lambda y: u(list(y)), X.at, x)
            assert fd == pytest.approx(float(Xu(list(x))), rel=1e-6, abs=1e-6)


def test_heisenberg_bracket_is_vertical(h1):
    assert h1.bracket(0, 1) == coordinate(3, 2)
    assert h1.bracket(1, 0) == -coordinate(3, 2)


@pytest.mark.parametrize("n", [2, 3])
def test_higher_heisenberg_brackets(n):
    S = heisenberg(n)
    N = 2 * n + 1
    for i in range(2 * n):
        for j in range(2 * n):
            B = S.bracket(i, j)
            if j == i + n:
                assert B == coordinate(N, N - 1)
            elif i == j + n:
                assert B == -coordinate(N, N - 1)
            else:
                assert B.is_zero()


def test_euclidean_brackets_vanish(e3):
    assert all(e3.bracket(i, j).is_zero() for i in range(3) for j in range(3))


def test_engel_brackets(eng):
    x1 = Polynomial.variable(4, 0)
    B = eng.bracket(0, 1)
    assert B == VectorField((Polynomial.zero(4), Polynomial.zero(4), Polynomial.constant(4, 1), x1))
    assert commutator(eng[0], B) == coordinate(4, 3)
    assert commutator(eng[1], B).is_zero()


def test_y_fields():
    assert all(Y.is_zero() for Y in y_fields(heisenberg(1)))
    assert all(Y.is_zero() for Y in y_fields(euclidean(3)))
    Y = y_fields(engel())
    assert Y[0].is_zero()
    assert Y[1] == coordinate(4, 3)


@settings(max_examples=40, deadline=None)
@given(random_fields(), random_fields())
def test_commutator_antisymmetric(X, Y):
    assert commutator(X, Y) == -commutator(Y, X)


@settings(max_examples=25, deadline=None)
@given(random_fields(), random_fields(), random_fields())
def test_jacobi_identity(X, Y, Z):
    total = commutator(X, commutator(Y, Z)) + commutator(Y, commutator(Z, X)) + commutator(Z, commutator(X, Y))
    assert total.is_zero()


@settings(max_examples=25, deadline=None)
@given(random_fields(), random_fields(), st.integers(0, 2**32 - 1))
def test_commutator_is_operator_commutator(X, Y, seed):
    # second-order terms cancel: XYu - YXu is the first-order field [X, Y] applied to u
    u = random_polynomial(3, np.random.default_rng(seed), max_degree=3)
    lhs = apply_field(X, apply_field(Y, u)) - apply_field(Y, apply_field(X, u))
    assert lhs == apply_field(commutator(X, Y), u)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply_field(coordinate(3, 0), Polynomial.variable(4, 0))
    with pytest.raises(DimensionError):
        commutator(coordinate(3, 0), coordinate(4, 0))


@pytest.mark.parametrize("S, step", [(heisenberg(1), 2), (heisenberg(2), 2), (euclidean(3), 1), (engel(), 3)])
def test_conditions_builtins(S, step):
    pts = np.random.default_rng(1).uniform(-1, 1, size=(8, S.n))
    rep = check_conditions(S, pts)
    assert all(rep.anti_self_adjoint)
    assert rep.hormander_holds
    assert rep.hormander_step == step
    assert rep.z_vanishes
    if S.name == "engel":
        assert not rep.step2_vanishing
        assert rep.nonvanishing_triples == [(0, 0, 1)]
        assert rep.weakened_span == [True, False]
    else:
        assert rep.step2_vanishing and rep.all_second_commutators_vanish
        assert all(rep.weakened_span)
        assert all(Y.is_zero() for Y in y_fields(S))


def test_symbolic_checks_run_without_samples(h1):
    rep = check_conditions(h1)
    assert rep.hormander_holds is None and rep.weakened_span is None
    assert rep.conditions_i_iii
    assert rep.notes


def test_non_divergence_free_field_fails_condition_i():
    x1 = Polynomial.variable(2, 0)
    S = FieldSystem("skewed", (VectorField((x1, Polynomial.zero(2))), coordinate(2, 1)))
    assert check_conditions(S).anti_self_adjoint == [False, True]


def test_hormander_failure_detected():
    # two fields in R^3 without a vertical bracket never span
    S = FieldSystem("flat", (coordinate(3, 0), coordinate(3, 1)))
    rep = check_conditions(S, [[0.1, 0.2, 0.3]])
    assert rep.hormander_holds is False
    assert rep.hormander_step is None


@pytest.mark.parametrize("name, m, n", [("heisenberg1", 2, 3), ("heisenberg2", 4, 5), ("euclidean2", 2, 2),
                                        ("engel", 2, 4)])
def test_builtin_names(name, m, n):
    S = builtin(name)
    assert (S.m, S.n) == (m, n)


@pytest.mark.parametrize("bad", ["sphere", "engel2"])
def test_builtin_unknown(bad):
    with pytest.raises(ValueError):
        builtin(bad)


@pytest.mark.parametrize("S", [heisenberg(1), heisenberg(2), engel(), euclidean(3)])
def test_system_file_round_trip(S, tmp_path):
    path = tmp_path / "system.txt"
    path.write_text(dump_system(S))
    T = load_system(path)
    assert T.fields == S.fields and T.name == S.name


def test_system_file_golden(h1):
    assert dump_system(h1) == (
        "3 2 heisenberg1\n"
        "1 ; 0 ; -1/2 * x2^1\n"
        "0 ; 1 ; 1/2 * x1^1\n"
    )


@pytest.mark.parametrize("text", ["", "3\n", "3 2 x\n1 ; 0 ; 0\n", "3 1 x\n1 ; 0\n"])
def test_system_file_errors(text):
    with pytest.raises(ValueError):
        parse_system(text)


def test_vectorised_coefficients(eng):
    pts = np.random.default_rng(0).uniform(-1, 1, size=(6, 4))
    vals = eng[1].at(pts)
    for x, v in zip(pts, vals):
        assert np.allclose(v, [0, 1, x[0], x[0] ** 2 / 2])
