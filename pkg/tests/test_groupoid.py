import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subalgebroid.algebroid import Section
from subalgebroid.groupoid import (
    DomainExit,
    GroupoidError,
    MatrixGroup,
    NotComposable,
    PairBox,
    PairTorus,
    RKParams,
    TorusGroupCovering,
    TorusPairCovering,
    Transformation,
    anchor_flow,
    covering_lift_path,
    integrate,
    invert,
    multiply,
    right_invariant_flow,
    source,
    target,
    torus_diff,
    unit,
    wrap01,
)

PAIR = PairBox(2)
SO2 = MatrixGroup(2)
SO3 = MatrixGroup(3)
ROT = Transformation(SO2, 2)


def rot2(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


# -- units, source and target


def test_units():
    u = unit(PAIR, (1, 2))
    assert np.allclose(u.first, [1, 2]) and np.allclose(u.second, [1, 2])
    v = unit(ROT, (1, 0))
    assert np.allclose(v.first, np.eye(2)) and np.allclose(v.second, [1, 0])
    w = unit(PairTorus(1), (0.25,))
    assert np.allclose(w.first, [0.25]) and np.allclose(w.second, [0.25])


def test_unit_outside_the_box_is_rejected():
    with pytest.raises(GroupoidError):
        unit(PAIR, (4, 0))


def test_pair_multiplication():
    g = PAIR.element((2, 2), (1, 1))
    h = PAIR.element((1, 1), (0, 0))
    gh = multiply(g, h)
    assert np.allclose(gh.first, [2, 2]) and np.allclose(gh.second, [0, 0])


def test_non_composable_pair_raises():
    with pytest.raises(NotComposable):
        multiply(PAIR.element((2, 2), (1, 1)), PAIR.element((0.5, 0), (0, 0)))


def test_small_gaps_are_snapped():
    g = PAIR.element((2, 2), (1, 1 + 5e-8))
    h = PAIR.element((1, 1), (0, 0))
    assert np.allclose(multiply(g, h).second, [0, 0])


def test_so2_inverse_law():
    g = SO2.from_matrix(rot2(0.7))
    h = SO2.from_matrix(rot2(-0.7))
    assert SO2.distance(multiply(g, h), SO2.unit()) < 1e-12


def test_transformation_law_coordinatewise():
    gm, hm, x = rot2(0.4), rot2(1.1), np.array([1.0, 0.5])
    h = ROT.make(hm, x)
    g = ROT.make(gm, hm @ x)
    gh = multiply(g, h)
    assert np.allclose(gh.first, gm @ hm, atol=1e-12)
    assert np.allclose(gh.second, x) and np.allclose(target(gh), gm @ hm @ x)


def test_torus_wrap_conventions():
    assert np.allclose(wrap01(np.array([1.25, -0.25])), [0.25, 0.75])
    assert np.allclose(torus_diff(np.array([0.95]), np.array([0.05])), [-0.1])
    T = PairTorus(1)
    assert T.distance(T.element((0.999,), (0.0,)), T.element((0.001,), (0.0,))) == pytest.approx(0.002)


# -- random groupoid laws


def elements(spec, rng):
    if spec is PAIR:
        return lambda x: PAIR.element(rng.uniform(-2, 2, 2), x)
    if spec is ROT:
        return lambda x: ROT.make(rot2(rng.uniform(-3, 3)), x)
    if spec is SO3:
        return lambda x: SO3.flow(Section.frame(3, int(rng.integers(3)), 0), SO3.unit(), rng.uniform(-3, 3))
    raise AssertionError


@pytest.mark.parametrize("spec", [PAIR, ROT, SO3], ids=["pair", "rotation-action", "so3"])
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_groupoid_laws(spec, seed):
    rng = np.random.default_rng(seed)
    make = elements(spec, rng)
    x = rng.uniform(-0.5, 0.5, spec.base_dim)
    h = make(x)
    g = make(target(h))
    f = make(target(g))
    tol = 1e-10
    assert spec.distance(multiply(multiply(f, g), h), multiply(f, multiply(g, h))) < tol
    assert spec.distance(multiply(g, unit(spec, source(g))), g) < tol
    assert spec.distance(multiply(unit(spec, target(g)), g), g) < tol
    assert spec.distance(multiply(g, invert(g)), unit(spec, target(g))) < tol
    assert spec.distance(multiply(invert(g), g), unit(spec, source(g))) < tol
    gh = multiply(g, h)
    assert np.allclose(source(gh), source(h), atol=tol) and np.allclose(target(gh), target(g), atol=tol)


def test_so3_orthogonality_after_many_products():
    rng = np.random.default_rng(1)
    g = SO3.unit()
    for _ in range(1000):
        step = SO3.flow(Section.frame(3, int(rng.integers(3)), 0), SO3.unit(), rng.uniform(-1, 1))
        g = multiply(step, g)
    assert SO3.membership_residual(g.first) < SO3.tol


# -- flows

DX = Section.parse(["1", "0"], 2)
ROTF = Section.parse(["-x1", "x0"], 2)


def test_zero_field_flow_is_identity():
    g0 = PAIR.element((1, 0), (0, 0))
    assert PAIR.distance(right_invariant_flow(PAIR, Section.parse(["0", "0"], 2), g0, 3.0), g0) == 0.0
    assert np.allclose(anchor_flow(PAIR, Section.parse(["0", "0"], 2), (0.3, 0.1), 2.0), [0.3, 0.1])


def test_translation_flow():
    g = right_invariant_flow(PAIR, DX, unit(PAIR, (0, 0)), 1.0)
    assert np.allclose(g.first, [1, 0], atol=1e-12) and np.allclose(g.second, [0, 0])


def test_so2_flow_is_the_matrix_exponential():
    g = right_invariant_flow(SO2, Section.parse(["1"], 0), SO2.unit(), math.pi / 2)
    assert np.max(np.abs(g.first - rot2(math.pi / 2))) < 1e-9


def test_rotation_anchor_flow_quarter_turn():
    y = anchor_flow(PAIR, ROTF, (1.0, 0.0), math.pi / 2)
    assert np.max(np.abs(y - [0.0, 1.0])) < 1e-9


def test_nonlinear_flow_uses_rk4_and_matches_closed_form():
    # x' = 1, y' = x^2 from the origin: (t, t^3/3)
    field = Section.parse(["1", "x0^2"], 2)
    y = anchor_flow(PAIR, field, (0.0, 0.0), 0.5)
    assert np.max(np.abs(y - [0.5, 0.5**3 / 3])) < 1e-10


def test_flow_leaving_the_box_raises():
    with pytest.raises(DomainExit):
        anchor_flow(PAIR, DX, (2.5, 0.0), 1.0)


def test_integrate_refines_until_converged():
    out = integrate(lambda x: -x, np.array([1.0]), 1.0, RKParams(step=0.1))
    assert out[0] == pytest.approx(math.exp(-1), abs=1e-10)


def _sections_for(spec):
    if spec is PAIR:
        return [DX, ROTF, Section.parse(["1/2*x1", "1 - 1/4*x0^2"], 2)]
    if spec is ROT:
        return [Section.parse(["1"], 2), Section.parse(["1/2*x0 + 1/4*x1^2"], 2)]
    if spec is SO3:
        return [Section.parse(["1", "-1/2", "1/3"], 0)]
    raise AssertionError


@pytest.mark.parametrize("spec", [PAIR, ROT, SO3], ids=["pair", "rotation-action", "so3"])
@settings(max_examples=35, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_flow_semigroup_and_t_relatedness(spec, seed):
    rng = np.random.default_rng(seed)
    secs = _sections_for(spec)
    alpha = secs[int(rng.integers(len(secs)))]
    x = rng.uniform(-0.5, 0.5, spec.base_dim)
    g0 = right_invariant_flow(spec, secs[0], unit(spec, x), rng.uniform(-0.3, 0.3))
    a, b = rng.uniform(-0.5, 0.5, 2)
    one = right_invariant_flow(spec, alpha, g0, a + b)
    two = right_invariant_flow(spec, alpha, right_invariant_flow(spec, alpha, g0, b), a)
    assert spec.distance(one, two) < 1e-8
    lhs = target(right_invariant_flow(spec, alpha, g0, a))
    rhs = anchor_flow(spec, alpha, target(g0), a)
    assert spec.base_distance(lhs, rhs) < 1e-8


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_t_relatedness_from_units(seed):
    rng = np.random.default_rng(seed)
    alpha = Section.parse(["1/2*x1", "1/4 - 1/4*x0^2"], 2)
    x = rng.uniform(-0.5, 0.5, 2)
    t = rng.uniform(0, 2)
    lhs = target(right_invariant_flow(PAIR, alpha, unit(PAIR, x), t))
    assert np.max(np.abs(lhs - anchor_flow(PAIR, alpha, x, t))) < 1e-8


def test_action_flow_target_matches_anchor_flow():
    alpha = Section.parse(["1/2*x0 + 1/4*x1^2"], 2)
    g = right_invariant_flow(ROT, alpha, unit(ROT, (0.6, -0.2)), 0.8)
    assert np.max(np.abs(target(g) - anchor_flow(ROT, alpha, (0.6, -0.2), 0.8))) < 1e-8
    assert SO2.membership_residual(g.first) < 1e-9


# -- coverings


def test_constant_path_lifts_to_unit():
    cov = TorusPairCovering.build(1)
    u = cov.target_spec.unit((0.3,))
    lifted = covering_lift_path(cov, [u] * 5)
    assert cov.source_spec.distance(lifted, cov.source_spec.unit((0.3,))) < 1e-12


@pytest.mark.parametrize("turns", [1.0, 0.5, -2.0])
def test_winding_path_lift(turns):
    cov = TorusPairCovering.build(1)
    T = cov.target_spec
    path = [T.element((t % 1.0,), (0.0,)) for t in np.linspace(0, turns, 101)]
    lifted = covering_lift_path(cov, path)
    assert cov.source_spec.group.translation_part(lifted)[0] == pytest.approx(turns, abs=1e-12)
    assert T.distance(cov(lifted), path[-1]) < 1e-12


def test_coarse_path_is_rejected():
    cov = TorusPairCovering.build(1)
    T = cov.target_spec
    with pytest.raises(GroupoidError, match="coarse"):
        covering_lift_path(cov, [T.element((0.0,), (0.0,)), T.element((0.3,), (0.0,))])


def test_group_covering_reduces_mod_one():
    cov = TorusGroupCovering(1)
    g = cov.source_spec.from_translation([2.25])
    assert np.allclose(cov.target_spec.translation_part(cov(g)), [0.25])
    path = [cov.target_spec.from_translation([t % 1]) for t in np.linspace(0, 2.25, 50)]
    assert cov.source_spec.translation_part(cov.lift_path(path))[0] == pytest.approx(2.25)
