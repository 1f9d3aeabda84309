from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subalgebroid.polycore import (
    Polynomial,
    PolynomialSyntaxError,
    PolyVector,
    QMatrix,
    compile_polys,
    monomials_upto,
    nullspace,
    poly_diff,
    poly_eval,
    poly_parse,
    poly_print,
    rank,
    solve_affine,
)

F = Fraction

# -- strategies


def polynomials(nvars=2, max_terms=4, max_deg=3):
    exps = st.tuples(*[st.integers(0, max_deg)] * nvars)
    coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=6)
    return st.dictionaries(exps, coeffs, max_size=max_terms).map(lambda d: Polynomial(nvars, d))


rational_points = st.tuples(*[st.fractions(min_value=-4, max_value=4, max_denominator=5)] * 2)
small_matrices = st.integers(1, 4).flatmap(
    lambda c: st.lists(st.lists(st.integers(-3, 3), min_size=c, max_size=c), min_size=1, max_size=4)
)


# -- parsing


def test_parse_simple_terms():
    p = poly_parse("x0^2 - 2*x1", 2)
    assert p.terms == {(2, 0): 1, (0, 1): -2}


def test_parse_zero_is_empty():
    p = poly_parse("0", 3)
    assert p.is_zero() and p.terms == {}


def test_parse_expands_products():
    assert poly_parse("(x0+x1)*(x0-x1)", 2) == poly_parse("x0^2 - x1^2", 2)


def test_parse_rational_coefficients():
    p = poly_parse("3/4*x0 - 1/2", 1)
    assert p.coefficient((1,)) == F(3, 4) and p.coefficient((0,)) == F(-1, 2)


@pytest.mark.parametrize(
    "text, offset",
    [("x0 + ", 5), ("x2", 0), ("x0 ** 2", 4), ("(x0", 3), ("x0 $ 1", 3)],
)
def test_parse_errors_carry_offsets(text, offset):
    with pytest.raises(PolynomialSyntaxError) as err:
        poly_parse(text, 2)
    assert err.value.offset == offset


def test_parse_rejects_negative_power():
    with pytest.raises(PolynomialSyntaxError):
        poly_parse("x0^-1", 1)


# -- evaluation and differentiation


def test_eval_examples():
    p = poly_parse("x0^2 - 2*x1", 2)
    assert poly_eval(p, (3, 1)) == 7
    assert poly_eval(poly_parse("x0*x1 + 5", 2), (0, 0)) == 5
    assert poly_eval(poly_parse("(x0+x1)^3", 2), (1, 1)) == 8


def test_eval_float_points_give_floats():
    v = poly_eval(poly_parse("1/2*x0", 1), (0.5,))
    assert isinstance(v, float) and v == 0.25


def test_diff_examples():
    assert poly_diff(Polynomial.constant(1, 5), 0).is_zero()
    assert poly_diff(poly_parse("x0^2*x1", 2), 0) == poly_parse("2*x0*x1", 2)
    assert poly_diff(poly_parse("x0^2 - 2*x1", 2), 1) == Polynomial.constant(2, -2)


def test_compile_matches_exact_evaluation():
    ps = [poly_parse("x0^3 - 1/3*x0*x1", 2), poly_parse("7", 2)]
    fn = compile_polys(ps, 2)
    out = fn((1.5, -2.0))
    assert out[0] == pytest.approx(float(poly_eval(ps[0], (F(3, 2), F(-2)))), abs=1e-14)
    assert out[1] == 7.0


def test_monomials_upto_counts():
    assert len(monomials_upto(2, 2)) == 6
    assert monomials_upto(2, 1) == [(0, 0), (0, 1), (1, 0)]


def test_polyvector_helpers():
    v = PolyVector.parse(["x0", "-x1"], 2)
    assert v.to_strings() == ["x0", "-x1"]
    assert (v - v).is_zero()
    assert v.evaluate((F(2), F(3))) == [2, -3]
    assert v.degree == 1


# -- linear algebra


def test_nullspace_examples():
    assert nullspace(QMatrix.identity(2)) == []
    assert nullspace(QMatrix.from_rows([[1, 1]])) == [[1, -1]]


def test_nullspace_of_degree_one_syzygy_system():
    # unknowns (a0, a1, b0, b1) for s0 = a0*x0 + a1*x1, s1 = b0*x0 + b1*x1
    # with s0*x0 + s1*x1 = 0: coefficients of x0^2, x0x1, x1^2
    m = QMatrix.from_rows([[1, 0, 0, 0], [0, 1, 1, 0], [0, 0, 0, 1]])
    basis = nullspace(m)
    assert len(basis) == 1
    a0, a1, b0, b1 = basis[0]
    assert (a0, b1) == (0, 0) and a1 == -b0 != 0  # (x1, -x0) up to scale


def test_solve_affine_examples():
    assert solve_affine(QMatrix.identity(2), [1, 2]) == [1, 2]
    assert solve_affine(QMatrix.from_rows([[1, 1]]), [0]) == [0, 0]
    assert solve_affine(QMatrix.from_rows([[1], [1]]), [0, 1]) is None


# -- properties


@given(polynomials(), polynomials(), polynomials())
def test_ring_laws(p, q, r):
    assert (p + q) * r == p * r + q * r
    assert p * q == q * p
    assert (p + q) + r == p + (q + r)
    assert p - p == Polynomial.zero(2)


@given(polynomials(), polynomials(), rational_points)
def test_eval_is_a_ring_morphism(p, q, x):
    assert poly_eval(p * q, x) == poly_eval(p, x) * poly_eval(q, x)
    assert poly_eval(p + q, x) == poly_eval(p, x) + poly_eval(q, x)


@given(polynomials())
def test_parse_print_round_trip(p):
    assert poly_parse(poly_print(p), 2) == p
    assert hash(poly_parse(poly_print(p), 2)) == hash(p)


@given(polynomials(), polynomials())
def test_leibniz_rule_for_diff(p, q):
    assert poly_diff(p * q, 0) == poly_diff(p, 0) * q + p * poly_diff(q, 0)


@settings(max_examples=60)
@given(small_matrices)
def test_nullspace_vectors_are_annihilated(rows):
    m = QMatrix.from_rows(rows)
    basis = nullspace(m)
    for v in basis:
        assert all(x == 0 for x in m.matvec(v))
    assert len(basis) + rank(rows) == m.cols


@settings(max_examples=60)
@given(small_matrices, st.data())
def test_solve_affine_solutions_satisfy_system(rows, data):
    m = QMatrix.from_rows(rows)
    x = data.draw(st.lists(st.integers(-3, 3), min_size=m.cols, max_size=m.cols))
    rhs = m.matvec(x)
    sol = solve_affine(m, rhs)
    assert sol is not None and m.matvec(sol) == rhs
