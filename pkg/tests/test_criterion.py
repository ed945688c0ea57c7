"""Determinant criterion, quotient convex-position test, and the
supporting-distribution verifier."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoctrl.criterion import (
    STATUS_CONTROLLABLE,
    STATUS_NOT_REGULAR,
    STATUS_UNCONTROLLABLE,
    check_condition,
    criterion_value,
    global_verdict,
    interior_convex_test,
    quotient_projection,
    sign_change_on_leaf,
    switched_condition,
    verify_supporting_distribution,
)
from geoctrl.fields import VectorField
from geoctrl.flows import LeafSample, Segment, sample_leaf
from geoctrl.lie import NotRegularError, generate_bracket_basis
from geoctrl.system import SystemSpec

N2 = ("x1", "x2")
N3 = ("x1", "x2", "x3")
PI = float(np.pi)


def planar_shear() -> SystemSpec:
    return SystemSpec(
        name="shear",
        var_names=N2,
        drifts=(VectorField.parse(["x2", "0"], N2),),
        controls=(VectorField.parse(["0", "1"], N2),),
        window=((-2.0, 2.0), (-2.0, 2.0)),
        assume_not_dense=True,
    )


def planar_forward() -> SystemSpec:
    return SystemSpec(
        name="forward",
        var_names=N2,
        drifts=(VectorField.parse(["1 + x2^2", "0"], N2),),
        controls=(VectorField.parse(["0", "1"], N2),),
        window=((-2.0, 2.0), (-2.0, 2.0)),
        assume_not_dense=True,
    )


def unicycle(offset: float = 0.0, rotate: float = 0.0) -> SystemSpec:
    """Unit-speed car, optional forward drift offset.

    `rotate` applies a rotation of the x1-x2 plane to the whole system;
    the square window is preserved for multiples of pi/2.
    """
    ox = float(offset * np.cos(rotate))
    oy = float(offset * np.sin(rotate))
    phase = f" + {rotate!r}" if rotate else ""
    f1 = f"cos(x3{phase})" if offset == 0 else f"{ox!r} + cos(x3{phase})"
    f2 = f"sin(x3{phase})" if offset == 0 else f"{oy!r} + sin(x3{phase})"
    return SystemSpec(
        name="unicycle",
        var_names=N3,
        drifts=(VectorField.parse([f1, f2, "0"], N3),),
        controls=(VectorField.parse(["0", "0", "1"], N3),),
        window=((-2.0, 2.0), (-2.0, 2.0), (-PI, PI)),
        assume_not_dense=True,
    )


# --- criterion_value -------------------------------------------------------


def test_criterion_value_planar_is_x2():
    f = VectorField.parse(["x2", "0"], N2)
    g = VectorField.parse(["0", "1"], N2)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.uniform(-2, 2, size=2)
        # hand 2x2 determinant as the oracle
        expected = f(x)[0] * g(x)[1] - f(x)[1] * g(x)[0]
        assert np.isclose(criterion_value(f, [g], x), expected, atol=1e-12)
        assert np.isclose(criterion_value(f, [g], x), x[1], atol=1e-12)


def test_criterion_value_saddle_is_sin_x1():
    f = VectorField.parse(["0", "0", "sin(x1)"], N3)
    g1 = VectorField.parse(["1", "0", "0"], N3)
    g2 = VectorField.parse(["0", "1", "0"], N3)
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.uniform(-2, 2, size=3)
        assert np.isclose(criterion_value(f, [g1, g2], x), np.sin(x[0]), atol=1e-12)


def test_criterion_value_repeated_column_vanishes():
    g = VectorField.parse(["0", "1"], N2)
    assert criterion_value(g, [g], [0.3, 0.8]) == 0.0


def test_criterion_value_wrong_field_count():
    f = VectorField.parse(["x2", "0"], N2)
    with pytest.raises(ValueError):
        criterion_value(f, [], [0.0, 0.0])


def test_criterion_value_alternating_and_homogeneous():
    f = VectorField.parse(["0", "0", "sin(x1)"], N3)
    g1 = VectorField.parse(["1", "0", "x2"], N3)
    g2 = VectorField.parse(["0", "1", "x1"], N3)
    x = np.array([0.7, -0.4, 0.2])
    c = criterion_value(f, [g1, g2], x)
    swapped = criterion_value(f, [g2, g1], x)
    assert np.isclose(swapped, -c, atol=1e-12)
    f3 = VectorField.parse(["0", "0", "3*sin(x1)"], N3)
    assert np.isclose(criterion_value(f3, [g1, g2], x), 3 * c, atol=1e-12)
    fneg = f.negate()
    assert np.isclose(criterion_value(fneg, [g1, g2], x), -c, atol=1e-12)


# --- sign_change_on_leaf ---------------------------------------------------


def _fake_leaf(base, visit_points):
    visits = tuple(
        (np.asarray(p, dtype=float), (Segment(0, 1, 0.1),)) for p in visit_points
    )
    return LeafSample(base=np.asarray(base, dtype=float), visits=visits, discarded=0)


def test_sign_change_detects_pair():
    leaf = _fake_leaf([0.1, 0.0], [[0.5, 0.0], [-0.3, 0.0]])
    v = sign_change_on_leaf(leaf, lambda p: p[0])
    assert v.condition_holds
    assert v.witness["kind"] == "sign_change"
    assert np.isclose(v.witness["value_pos"], 0.5)
    assert np.isclose(v.witness["value_neg"], -0.3)


def test_sign_change_ignores_values_inside_eps_band():
    leaf = _fake_leaf([0.5, 0.0], [[0.2, 0.0], [1e-12, 0.0]])
    v = sign_change_on_leaf(leaf, lambda p: p[0], eps_sign=1e-9)
    assert not v.condition_holds
    assert v.witness["kind"] == "no_sign_change"


def test_sign_change_verdict_invariant_under_scaling():
    leaf = _fake_leaf([0.1, 0.0], [[0.5, 0.0], [-0.3, 0.0], [0.0, 0.9]])
    base = sign_change_on_leaf(leaf, lambda p: p[0])
    doubled = sign_change_on_leaf(leaf, lambda p: 2.0 * p[0])
    flipped = sign_change_on_leaf(leaf, lambda p: -p[0])
    assert base.condition_holds == doubled.condition_holds == flipped.condition_holds


def test_sign_change_on_real_shear_leaf():
    g = VectorField.parse(["0", "1"], N2)
    fam = generate_bracket_basis([g])
    f = VectorField.parse(["x2", "0"], N2)
    leaf = sample_leaf(fam, [0.0, 0.0], budget=16, max_duration=1.0, rng_seed=0)
    v = sign_change_on_leaf(leaf, lambda p: criterion_value(f, [g], p))
    assert v.condition_holds


# --- quotient_projection ---------------------------------------------------


def test_quotient_of_vertical_span_is_first_coordinate():
    Q = quotient_projection([[0.0, 1.0]])
    assert Q.shape == (1, 2)
    assert np.allclose(Q, [[1.0, 0.0]], atol=1e-12)


def test_quotient_of_e3_span_in_r3():
    Q = quotient_projection([[0.0, 0.0, 1.0]])
    assert Q.shape == (2, 3)
    assert np.allclose(Q @ np.array([0.0, 0.0, 1.0]), 0.0, atol=1e-12)
    assert np.allclose(Q @ Q.T, np.eye(2), atol=1e-12)
    for v in (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])):
        assert np.isclose(np.linalg.norm(Q @ v), 1.0, atol=1e-12)


def test_quotient_full_rank_is_empty():
    Q = quotient_projection(np.eye(3))
    assert Q.shape == (0, 3)


def test_quotient_rank_mismatch_raises():
    with pytest.raises(NotRegularError):
        quotient_projection([[0.0, 1.0]], expected_rank=2)


def test_quotient_deterministic_frame():
    M = np.array([[1.0, 0.5], [0.2, -0.3], [0.1, 0.9]])
    a = quotient_projection(M)
    b = quotient_projection(M)
    assert np.array_equal(a, b)


# --- interior_convex_test --------------------------------------------------


def test_interior_k1_examples():
    inside, wit = interior_convex_test(np.array([[0.5], [-0.3]]), margin=1e-6)
    assert inside and wit is None
    inside, wit = interior_convex_test(np.array([[0.5], [0.2]]), margin=1e-6)
    assert not inside
    assert np.all(np.asarray([[0.5], [0.2]]) @ wit >= -1e-6)


def test_interior_k2_eighth_roots():
    ang = np.arange(8) * (2 * PI / 8)
    P = np.column_stack([np.cos(ang), np.sin(ang)])
    inside, wit = interior_convex_test(P)
    assert inside and wit is None


def test_interior_k2_shifted_circle_witness():
    ang = np.arange(8) * (2 * PI / 8)
    P = np.column_stack([2 + np.cos(ang), np.sin(ang)])
    inside, wit = interior_convex_test(P)
    assert not inside
    assert np.allclose(wit, [1.0, 0.0], atol=1e-9)
    assert np.all(P @ wit >= -1e-7)


def test_interior_empty_raises():
    with pytest.raises(ValueError):
        interior_convex_test(np.zeros((0, 2)))


def test_interior_k2_matches_brute_force():
    # exactness against a dense direction scan; near-ties are excluded
    # because a finite scan cannot resolve them
    angles = np.linspace(0, 2 * PI, 10_000, endpoint=False)
    D = np.column_stack([np.cos(angles), np.sin(angles)])
    margin = 1e-7
    rng = np.random.default_rng(42)
    checked = 0
    for _ in range(1000):
        m = int(rng.integers(2, 10))
        P = rng.uniform(-1, 1, size=(m, 2))
        support = (P @ D.T).max(axis=0)
        brute = bool(support.min() > margin)
        ang = np.sort(np.arctan2(P[:, 1], P[:, 0]))
        gaps = np.diff(ang, append=ang[0] + 2 * PI)
        if abs(gaps.max() - PI) < 1e-3 or np.linalg.norm(P, axis=1).min() < 1e-3:
            continue
        inside, _ = interior_convex_test(P, margin)
        assert inside == brute, f"disagreement on {P!r}"
        checked += 1
    assert checked > 900


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 4))
def test_interior_monotone_under_extra_points(seed, k):
    rng = np.random.default_rng(seed)
    P = rng.uniform(-1, 1, size=(int(rng.integers(2, 8)), k))
    inside, _ = interior_convex_test(P)
    extra = rng.uniform(-1, 1, size=(3, k))
    grown, _ = interior_convex_test(np.vstack([P, extra]))
    if inside:
        assert grown


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 4))
def test_interior_witness_is_valid_post_hoc(seed, k):
    rng = np.random.default_rng(seed)
    P = rng.uniform(0.05, 1, size=(int(rng.integers(2, 8)), k))  # first orthant
    inside, wit = interior_convex_test(P)
    assert not inside
    assert wit is not None
    assert np.isclose(np.linalg.norm(wit), 1.0, atol=1e-9)
    assert np.all(P @ wit >= -1e-7)


def test_interior_k3_cross_polytope_and_halfspace():
    P = np.vstack([2 * np.eye(3), -2 * np.eye(3)])
    inside, _ = interior_convex_test(P)
    assert inside
    shifted = P + np.array([5.0, 0.0, 0.0])
    inside, wit = interior_convex_test(shifted)
    assert not inside
    assert np.all(shifted @ wit >= -1e-7)


# --- check_condition -------------------------------------------------------


def test_condition_unicycle_origin_holds():
    v = check_condition(unicycle(), [0.0, 0.0, 0.0], leaf_budget=24, seed=0)
    assert v.condition_holds
    assert v.witness["kind"] == "interior"
    assert v.witness["max_angular_gap"] < PI


def test_condition_offset_unicycle_fails_with_forward_witness():
    v = check_condition(unicycle(offset=2.0), [0.0, 0.0, 0.0], leaf_budget=24, seed=0)
    assert not v.condition_holds
    assert v.witness["kind"] == "separating"
    d = np.array(v.witness["covector"])
    ambient = v.quotient_frame.T @ d
    assert abs(ambient[0]) > 0.95 and abs(ambient[2]) < 1e-9
    # the covector blames the unremovable forward drift component
    f = VectorField.parse(["2 + cos(x3)", "sin(x3)", "0"], N3)
    for s in np.linspace(-PI, PI, 17):
        proj = v.quotient_frame @ f(np.array([0.0, 0.0, s]))
        assert proj @ d >= -1e-7


def test_condition_shear_origin_holds_and_det_route_agrees():
    v = check_condition(planar_shear(), [0.0, 0.0], leaf_budget=16, seed=0)
    assert v.condition_holds
    assert v.det_agrees is True


def test_condition_rejects_switched_system():
    f = VectorField.parse(["x2", "0"], N2)
    sys_ = SystemSpec(
        name="sw",
        var_names=N2,
        drifts=(f, f.negate()),
        controls=(VectorField.parse(["0", "1"], N2),),
        window=((-2.0, 2.0), (-2.0, 2.0)),
    )
    with pytest.raises(ValueError):
        check_condition(sys_, [0.0, 0.0])


def test_switched_matches_single_drift_bit_for_bit():
    sys_ = planar_shear()
    a = check_condition(sys_, [0.3, -0.4], leaf_budget=12, seed=5)
    b = switched_condition(sys_, [0.3, -0.4], leaf_budget=12, seed=5)
    assert a.condition_holds == b.condition_holds
    assert a.samples_used == b.samples_used
    assert a.witness == b.witness
    assert np.array_equal(a.quotient_frame, b.quotient_frame)


def test_switched_pair_certifies_where_single_drift_fails():
    f = VectorField.parse(["1 + x2^2", "0"], N2)
    base = planar_forward()
    single = check_condition(base, [0.0, 0.0], leaf_budget=16, seed=2)
    assert not single.condition_holds
    switched = SystemSpec(
        name="sw",
        var_names=N2,
        drifts=(f, f.negate()),
        controls=(VectorField.parse(["0", "1"], N2),),
        window=((-2.0, 2.0), (-2.0, 2.0)),
    )
    v = switched_condition(switched, [0.0, 0.0], leaf_budget=16, seed=2)
    assert v.condition_holds


def test_rotational_equivariance_of_condition():
    # rotating the plane by pi/2 maps the system onto itself up to a
    # heading shift; booleans must match at mapped points under one seed
    p = np.array([0.5, 0.3, 0.2])
    R = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    a = check_condition(unicycle(), p, leaf_budget=16, seed=7)
    b = check_condition(unicycle(rotate=PI / 2), R @ p, leaf_budget=16, seed=7)
    assert a.condition_holds == b.condition_holds
    ao = check_condition(unicycle(offset=2.0), p, leaf_budget=16, seed=7)
    bo = check_condition(unicycle(offset=2.0, rotate=PI / 2), R @ p, leaf_budget=16, seed=7)
    assert ao.condition_holds == bo.condition_holds is False


def test_separating_witness_rotates_with_the_system():
    turn = 0.4
    v = check_condition(unicycle(offset=2.0, rotate=turn), [0.0, 0.0, 0.0], leaf_budget=32, seed=0)
    assert not v.condition_holds
    ambient = v.quotient_frame.T @ np.array(v.witness["covector"])
    expected = np.array([np.cos(turn), np.sin(turn), 0.0])
    assert np.allclose(ambient, expected, atol=0.05) or np.allclose(
        ambient, -expected, atol=0.05
    )


# --- global_verdict --------------------------------------------------------


def test_global_verdict_shear_controllable():
    out = global_verdict(planar_shear(), grid_per_axis=5, leaf_budget=24)
    assert out.status == STATUS_CONTROLLABLE
    assert all(p.condition_holds for p in out.points)
    assert all(p.det_agrees for p in out.points)
    assert out.assumptions["leaves_not_dense_asserted"] is True


def test_global_verdict_forward_uncontrollable():
    out = global_verdict(planar_forward(), grid_per_axis=4, leaf_budget=16)
    assert out.status == STATUS_UNCONTROLLABLE
    assert all(not p.condition_holds for p in out.points)
    failing = out.points[0]
    assert failing.witness["kind"] == "separating"


def test_global_verdict_not_regular_short_circuits():
    sys_ = SystemSpec(
        name="sing",
        var_names=N2,
        drifts=(VectorField.parse(["1", "0"], N2),),
        controls=(
            VectorField.parse(["1", "0"], N2),
            VectorField.parse(["0", "x1"], N2),
        ),
        window=((-2.0, 2.0), (-2.0, 2.0)),
    )
    out = global_verdict(sys_, grid_per_axis=5)
    assert out.status == STATUS_NOT_REGULAR
    assert out.points == ()


def test_global_verdict_deterministic():
    a = global_verdict(planar_shear(), grid_per_axis=3, leaf_budget=8, seed=1)
    b = global_verdict(planar_shear(), grid_per_axis=3, leaf_budget=8, seed=1)
    assert a.status == b.status
    for pa, pb in zip(a.points, b.points):
        assert pa.condition_holds == pb.condition_holds
        assert pa.samples_used == pb.samples_used
        assert pa.witness == pb.witness


# --- verify_supporting_distribution ---------------------------------------


def test_verifier_accepts_constant_candidate():
    rep = verify_supporting_distribution(
        unicycle(offset=2.0), [VectorField.parse(["0", "1", "0"], N3)]
    )
    assert rep.accepted
    assert all(rep.clauses.values())
    assert rep.failed_clause is None
    assert "not globally controllable" in rep.conclusion
    assert rep.details["one_sided_worst_margin"] >= 1.0 - 1e-6


def test_verifier_rejects_non_invariant_candidate_at_clause_b():
    rep = verify_supporting_distribution(
        unicycle(offset=2.0), [VectorField.parse(["0", "x3", "0"], N3)]
    )
    assert not rep.accepted
    assert rep.failed_clause == "control_invariance"
    assert "rejected" in rep.conclusion


def test_verifier_rejects_candidate_inside_control_span():
    rep = verify_supporting_distribution(
        unicycle(offset=2.0), [VectorField.parse(["0", "0", "1"], N3)]
    )
    assert not rep.accepted
    assert rep.failed_clause == "complement_rank"


def test_verifier_rejects_drift_inside_lie_closure():
    # S = (1,0,0) is G-invariant and transverse, but Lie(S) absorbs a
    # drift pointing along x1
    sys_ = SystemSpec(
        name="axis",
        var_names=N3,
        drifts=(VectorField.parse(["1", "0", "0"], N3),),
        controls=(VectorField.parse(["0", "0", "1"], N3),),
        window=((-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)),
    )
    rep = verify_supporting_distribution(sys_, [VectorField.parse(["1", "0", "0"], N3)])
    assert not rep.accepted
    assert rep.failed_clause in ("one_sided_drift", "drift_outside_closure")


def test_verifier_wrong_candidate_count():
    with pytest.raises(ValueError):
        verify_supporting_distribution(
            unicycle(offset=2.0),
            [
                VectorField.parse(["0", "1", "0"], N3),
                VectorField.parse(["1", "0", "0"], N3),
            ],
        )


def test_verifier_needs_codimension_two():
    with pytest.raises(ValueError):
        verify_supporting_distribution(
            planar_forward(), [VectorField.parse(["1", "0"], N2)]
        )
