import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from primerace.characters import RaceSpec, characters, race_vectors
from primerace.errors import DataError, EnvelopeError, InfeasibleError
from primerace.geometry import (
    Region,
    SubspaceSpec,
    bounded_solve,
    quadform_constant,
    region_contains,
    robot_arm_feasible,
    robot_arm_solve,
    span_check,
    w_threshold,
    wedge_coverage_check,
)

finite = st.floats(-100, 100, allow_nan=False)


def test_wedge_membership_examples():
    w = Region.wedge((0, 1, 2))
    assert region_contains(w, (3, 2, 1)) and not region_contains(w, (1, 2, 3))
    assert not region_contains(w, (2, 2, 1))
    assert region_contains(Region.increasing((0, 1, 2)), (1, 2, 3))


@given(st.lists(finite, min_size=2, max_size=5))
@settings(max_examples=200, deadline=None)
def test_wedges_partition_points_with_distinct_coordinates(x):
    r = len(x)
    hits = sum(region_contains(Region.wedge(p), x) for p in itertools.permutations(range(r)))
    assert hits == (1 if len(set(x)) == r else 0)


def test_cylinder_example_and_ball_boundary():
    cyl = Region.cylinder((0, 0, 0), 0.2)
    assert region_contains(cyl, (5.1, 5.0, 4.95))
    d = np.array([5.1, 5.0, 4.95]) - np.mean([5.1, 5.0, 4.95])
    assert np.allclose(d, [0.0833, -0.0167, -0.0667], atol=1e-4)
    assert abs(np.linalg.norm(d) - 0.108) < 1e-3
    ball = Region.ball((0, 0), 1.0)
    assert not region_contains(ball, (1.0, 0.0)) and region_contains(ball, (0.999, 0.0))


@given(st.lists(finite, min_size=3, max_size=3), st.floats(-1e3, 1e3))
@settings(max_examples=100, deadline=None)
def test_cylinder_translation_invariance(x, u):
    cyl = Region.cylinder((1.0, -2.0, 0.5), 7.0)
    y = np.array(x) + u
    d0 = np.array(x) - (1.0, -2.0, 0.5)
    d0 = np.linalg.norm(d0 - d0.mean())
    if abs(d0 - 7.0) > 1e-6:  # skip points numerically on the boundary
        assert region_contains(cyl, x) == region_contains(cyl, y)


def test_region_validation():
    with pytest.raises(DataError):
        Region.ball((0, 0), 0)
    with pytest.raises(DataError):
        Region.wedge((0, 0, 1))
    with pytest.raises(DataError):
        region_contains(Region.wedge((0, 1)), (1, 2, 3))
    pts = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert list(region_contains(Region.halfspace((1, -1)), pts)) == [True, False]
    assert region_contains(Region.sum_zero(), (1.0, -1.0))


def test_span_examples():
    assert span_check([(1, 1), (1, -1)])["spans"]
    assert not span_check([(1, -1, 0)])["spans"]
    rv = race_vectors(RaceSpec(5, (1, 2, 3, 4)))
    vecs = []
    for chi in rv.nonprincipal:
        vecs += [rv.real_part(chi.label), rv.imag_part(chi.label)]
    out = span_check(vecs, "sum_zero_hyperplane")
    assert out == {"spans": True, "rank": 3, "dim_target": 3}


def test_subspace_orthonormal_basis():
    S = SubspaceSpec([(1, 2, 3), (0, 1, 1)])
    Q = S.orthonormal
    assert np.allclose(Q.T @ Q, np.eye(2), atol=1e-12)
    assert S.contains((1, 3, 4)) and not S.contains((0, 0, 1))
    with pytest.raises(DataError):
        SubspaceSpec([(1, 1), (2, 2)])
    assert SubspaceSpec.spanned_by([(1, 1), (2, 2), (0, 1)]).dim == 2


def test_quadform_examples():
    assert quadform_constant([(1, 1j)], SubspaceSpec([(1, 0), (0, 1)])) == pytest.approx(1.0)
    assert quadform_constant([(1, 0)], SubspaceSpec([(1, 0)])) == pytest.approx(1.0)
    with pytest.raises(DataError):
        quadform_constant([(1, 0)], SubspaceSpec([(1, 0), (0, 1)]))


@pytest.mark.parametrize("q,res", [(4, (1, 3)), (5, (1, 2, 3, 4)), (8, (1, 3, 5))])
def test_quadform_is_sharp_on_random_points(q, res):
    rv = race_vectors(RaceSpec(q, res))
    V = np.array([rv.vectors[c.label] for c in rv.nonprincipal])
    S = SubspaceSpec.spanned_by(list(V.real) + list(V.imag))
    c = quadform_constant(V, S)
    rng = np.random.default_rng(q)
    x = rng.normal(size=(1000, S.dim)) @ S.orthonormal.T
    ratio = np.sum(x * x, axis=1) / np.sum(np.abs(x @ V.T) ** 2, axis=1)
    assert ratio.max() <= c * (1 + 1e-8)
    assert ratio.max() > 0.5 * c


def test_bounded_solve_examples():
    sol = bounded_solve(np.eye(3), (1.0, -2.0, 3.0))
    assert np.allclose(sol.y, (1, -2, 3)) and sol.constant == 3
    sol = bounded_solve([[1, 1]], [2])
    assert np.allclose(sol.y, (2, 0))
    with pytest.raises(DataError):
        bounded_solve([[1, 0], [1, 0]], [1, 2])


def test_bounded_solve_random_targets():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        r, m = rng.integers(1, 5), rng.integers(1, 6)
        A = rng.integers(-3, 4, size=(r, m)).astype(float)
        t = A @ rng.normal(size=m)
        sol = bounded_solve(A, t)
        scale = max(np.abs(t).max(), 1e-300)
        assert np.abs(A @ sol.y - t).max() <= 1e-9 * max(1.0, scale)
        assert np.abs(sol.y).max() <= sol.constant * np.abs(t).max() + 1e-12
        pivot_cols = {j for _, j in sol.pivots}
        assert all(sol.y[j] == 0 for j in range(m) if j not in pivot_cols)


def test_robot_arm_examples():
    assert np.allclose(robot_arm_solve([1, 1], 2), (0, 0))
    th = robot_arm_solve([1, 1, 1], 0)
    assert abs(np.sum(np.exp(1j * th))) < 1e-12
    assert sorted(np.round(np.degrees(th)) % 360) == [0, 120, 240]


def test_robot_arm_random_instances():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(1000):
        lam = rng.uniform(0.05, 3.0, size=rng.integers(3, 9))
        s, m = lam.sum(), lam.max()
        lo = max(2 * m - s, 0.0)
        rho = rng.uniform(lo, s)
        z = rho * np.exp(1j * rng.uniform(0, 2 * np.pi))
        th = robot_arm_solve(lam, z)
        worst = max(worst, abs(np.sum(lam * np.exp(1j * th)) - z))
    assert worst < 1e-9


@pytest.mark.parametrize("lam,z", [([5, 1, 1], 0), ([1, 1, 1], 3.5), ([1, -1], 0), ([3, 1], 1.0)])
def test_robot_arm_rejects_infeasible(lam, z):
    assert not robot_arm_feasible(np.abs(lam), z) or min(lam) <= 0
    with pytest.raises(InfeasibleError):
        robot_arm_solve(lam, z)


def test_w_threshold_examples(zeta_table):
    rv = race_vectors(RaceSpec(4, (1, 3)))
    w = w_threshold(rv, ["4.3"], 1e-3, {})
    assert w["W"] == 8 and w["correction"] == 0
    c_A = w["c_A"]
    v0 = 8 / (c_A * math.sqrt(2))
    a = w_threshold(rv, ["4.3"], 3 * v0, {})["main_term"]
    b = w_threshold(rv, ["4.3"], 6 * v0, {})["main_term"]
    assert b == pytest.approx(2 * a)
    g = zeta_table.ordinates("1.1", 100)
    w2 = w_threshold(rv, ["4.3"], 1e-3, {"4.3": tuple(g)})
    assert w2["correction"] == pytest.approx(math.fsum(g ** -3.0) / 4, rel=1e-13)
    with pytest.raises(DataError):
        w_threshold(rv, [], 1.0, {})


def test_wedge_coverage_examples():
    plane = wedge_coverage_check([(1, -1, 0), (0, 1, -1)])
    assert plane.covers_all_wedges and plane.dimension == 2 and len(plane.feasible) == 6
    for order, pt in plane.witness.items():
        assert region_contains(Region.increasing(order), np.array(pt, dtype=float))
    line = wedge_coverage_check([(1, -1, 0)])
    assert not line.covers_all_wedges and line.agrees_with_dimension
    # on the line t(1,-1,0) the third coordinate always sits between the first two
    for order, ok in line.feasible.items():
        assert ok == (order[1] == 2)
    assert wedge_coverage_check([(1, -1)]).covers_all_wedges


def test_wedge_coverage_guards():
    with pytest.raises(DataError):
        wedge_coverage_check([(1, 1, 1)])
    with pytest.raises(EnvelopeError):
        wedge_coverage_check([tuple(range(7))], 7)


def test_wedge_coverage_random_small():
    rng = np.random.default_rng(2)
    for _ in range(20):
        r = int(rng.integers(3, 5))
        d = int(rng.integers(1, r))
        B = rng.integers(-4, 5, size=(d, r))
        try:
            V = SubspaceSpec(B)
        except DataError:
            continue
        if V.contains(np.ones(r)):
            continue
        assert wedge_coverage_check(V).agrees_with_dimension
