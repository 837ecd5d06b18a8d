import numpy as np
import pytest

from services.torus_geometry import (
    IntVec2, LiftPoint, Loop, TorusPoint, gamma_alpha, gamma_beta, intersection_number, lattice_degree,
    lattice_free_offset, loops_intersect, reduce, reference_loop, segment_lattice_clearance, straight_loop,
    torus_distance, winding_vector,
)
from utils.errors import BrokenLift, InvalidInput


def _horizontal(y: float, samples: int = 256) -> Loop:
    t = np.linspace(0.0, 1.0, samples + 1)
    return Loop.from_samples(t, np.column_stack([t, np.full_like(t, y)]))


# ============= reduce =============

@pytest.mark.parametrize("lift, expected", [
    ((1.3, -0.25), (0.3, 0.75)),
    ((0.0, 0.0), (0.0, 0.0)),
    ((2.0, 3.5), (0.0, 0.5)),
])
def test_reduce_examples(lift, expected):
    p = reduce(LiftPoint(*lift))
    assert p.x == pytest.approx(expected[0], abs=1e-15)
    assert p.y == pytest.approx(expected[1], abs=1e-15)


def test_reduce_rejects_non_finite():
    with pytest.raises(InvalidInput):
        reduce(LiftPoint(float("nan"), 0.0))
    with pytest.raises(InvalidInput):
        reduce(LiftPoint(0.0, float("inf")))


def test_reduce_tiny_negative_stays_in_unit_square():
    p = reduce(LiftPoint(-1e-20, -0.0))
    assert 0.0 <= p.x < 1.0 and 0.0 <= p.y < 1.0


def test_reduce_invariant_under_integer_translates():
    rng = np.random.default_rng(7)
    lifts = rng.uniform(-50, 50, size=(1000, 2))
    shifts = rng.integers(-20, 21, size=(1000, 2))
    for (x, y), (m, n) in zip(lifts, shifts):
        a = reduce(LiftPoint(x, y))
        b = reduce(LiftPoint(x, y) + IntVec2(int(m), int(n)))
        assert torus_distance(a.as_array(), b.as_array()) < 1e-12
        assert 0.0 <= b.x < 1.0 and 0.0 <= b.y < 1.0


# ============= winding vectors =============

def test_winding_of_reference_loops():
    assert winding_vector(gamma_alpha(256)) == IntVec2(1, 0)
    assert winding_vector(gamma_beta(256)) == IntVec2(0, 1)


def test_winding_of_constant_loop():
    t = np.linspace(0.0, 1.0, 17)
    loop = Loop.from_samples(t, np.tile([0.2, 0.2], (17, 1)))
    assert winding_vector(loop) == IntVec2(0, 0)


def test_winding_independent_of_sampling_density():
    for samples in (256, 4096):
        t = np.linspace(0.0, 1.0, samples + 1)
        points = np.column_stack([2 * t + 0.1 * np.sin(2 * np.pi * t), -t + 0.05 * np.cos(6 * np.pi * t)])
        assert winding_vector(Loop.from_samples(t, points)) == IntVec2(2, -1)


def test_winding_rejects_open_path():
    t = np.linspace(0.0, 1.0, 65)
    loop = Loop(t, np.column_stack([t * 0.7, np.zeros_like(t)]), IntVec2(1, 0))
    with pytest.raises(BrokenLift):
        winding_vector(loop)


def test_loop_rejects_lift_jump():
    t = np.array([0.0, 0.5, 1.0])
    with pytest.raises(BrokenLift):
        Loop.from_samples(t, [[0.0, 0.0], [0.6, 0.0], [1.0, 0.0]])


def test_loop_rejects_bad_times():
    with pytest.raises(InvalidInput):
        Loop.from_samples([0.0, 0.6, 0.5, 1.0], np.zeros((4, 2)))
    with pytest.raises(InvalidInput):
        Loop.from_samples([0.1, 1.0], np.zeros((2, 2)))


def test_loop_samples_are_read_only():
    loop = gamma_alpha(16)
    with pytest.raises(ValueError):
        loop.points[0, 0] = 3.0


# ============= intersection numbers =============

@pytest.mark.parametrize("c1, c2, expected", [
    (IntVec2(1, 0), IntVec2(0, 1), 1),
    (IntVec2(2, 3), IntVec2(2, 3), 0),
    (IntVec2(2, 1), IntVec2(1, 1), 1),
])
def test_intersection_number_examples(c1, c2, expected):
    assert intersection_number(c1, c2) == expected


def test_intersection_number_antisymmetric():
    values = range(-10, 11)
    for m1 in values:
        for n1 in values:
            for m2, n2 in ((1, 0), (0, 1), (3, -7), (-10, 4)):
                c1, c2 = IntVec2(m1, n1), IntVec2(m2, n2)
                assert intersection_number(c1, c2) == -intersection_number(c2, c1)


# ============= geometric intersection =============

def test_reference_loops_cross_at_centre():
    witness = loops_intersect(gamma_alpha(), gamma_beta())
    assert witness is not None
    assert witness.x == pytest.approx(0.5, abs=1e-12)
    assert witness.y == pytest.approx(0.5, abs=1e-12)


def test_parallel_circles_are_disjoint():
    assert loops_intersect(_horizontal(0.1), _horizontal(0.6)) is None


def test_degenerate_loop_rejected():
    t = np.linspace(0.0, 1.0, 9)
    point = Loop.from_samples(t, np.tile([0.3, 0.3], (9, 1)))
    with pytest.raises(InvalidInput):
        loops_intersect(point, gamma_alpha())


@pytest.mark.parametrize("c1, c2", [
    (IntVec2(1, 0), IntVec2(0, 1)),
    (IntVec2(2, 1), IntVec2(1, 1)),
    (IntVec2(1, -3), IntVec2(2, 1)),
    (IntVec2(3, 2), IntVec2(-1, 4)),
])
def test_nonzero_intersection_number_forces_crossing(c1, c2):
    assert intersection_number(c1, c2) != 0
    l1 = straight_loop(c1, (0.13, 0.71))
    l2 = straight_loop(c2, (0.42, 0.05))
    witness = loops_intersect(l1, l2)
    assert isinstance(witness, TorusPoint)


# ============= reference loops and lattice helpers =============

@pytest.mark.parametrize("c", [IntVec2(1, 0), IntVec2(0, 1), IntVec2(2, 1), IntVec2(1, 1), IntVec2(3, -1), IntVec2(0, 2)])
def test_reference_loop_winds_and_misses_lattice(c):
    loop = reference_loop(c)
    assert winding_vector(loop) == c
    a, b = loop.points[:-1], loop.points[1:]
    clearance = min(segment_lattice_clearance(p, q) for p, q in zip(a, b))
    assert clearance > 1e-3
    assert lattice_free_offset(c) is not None


def test_reference_loop_rejects_contractible_class():
    with pytest.raises(InvalidInput):
        reference_loop(IntVec2(0, 0))


def test_lattice_degree_of_squares():
    ccw = np.array([[-0.5, -0.5], [1.5, -0.5], [1.5, 0.5], [-0.5, 0.5]])
    assert lattice_degree(ccw) == 2
    assert lattice_degree(ccw[::-1]) == -2
    empty = np.array([[0.2, 0.2], [0.8, 0.2], [0.8, 0.8], [0.2, 0.8]])
    assert lattice_degree(empty) == 0
