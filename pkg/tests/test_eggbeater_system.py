import math

import numpy as np
import pytest

from models.eggbeater_models import EggbeaterParams, SurfaceMode
from services.eggbeater_system import (
    Generator, SurfaceModel, apply, build_eggbeater, clear_of_d_prime, closed_form_det, differential,
    exact_shear_flow, integrate_perturbed, map_point,
)
from services.profile_builder import evaluate
from services.torus_geometry import IntVec2, LiftPoint, winding_vector
from utils.errors import InvalidInput, InvalidParams
from tests.conftest import cached_system


@pytest.fixture(scope="module")
def perturbed10():
    return cached_system(10.0, SurfaceMode.SURFACE, True)


@pytest.fixture(scope="module")
def wide_disk():
    """Perturbed system with a comparatively large D_A so the vortex is resolvable"""
    return build_eggbeater(EggbeaterParams(A=1.5, r_A=6e-4, perturbed=True))


# ============= construction =============

def test_defaults_filled_in(sys10):
    assert sys10.B == 20.0
    assert sys10.r_A == pytest.approx(5e-5)
    assert not sys10.perturbed


@pytest.mark.parametrize("params, mode", [
    (EggbeaterParams(A=2.0), SurfaceMode.TORUS),
    (EggbeaterParams(A=1.0), SurfaceMode.SURFACE),
    (EggbeaterParams(A=10.0, r_A=1e-4), SurfaceMode.SURFACE),
    (EggbeaterParams(A=10.0, B=-1.0), SurfaceMode.SURFACE),
    (EggbeaterParams(A=float("inf")), SurfaceMode.SURFACE),
])
def test_invalid_parameters_rejected(params, mode):
    with pytest.raises(InvalidParams):
        build_eggbeater(params, mode=mode)


def test_surface_models():
    surface = SurfaceModel(SurfaceMode.SURFACE, 5e-5)
    torus = SurfaceModel(SurfaceMode.TORUS, 5e-5)
    assert surface.total_area == 1.0
    assert torus.total_area == 2.0
    assert torus.area_DA > 1.0
    assert surface.area_DA == pytest.approx(math.pi * 25e-10)


def test_density_has_unit_mass():
    model = SurfaceModel(SurfaceMode.TORUS, 5e-5)
    r = (np.arange(20_000) + 0.5) / 20_000 * model.r_A
    mass = np.sum(model.density(r) * 2 * math.pi * r) * (model.r_A / 20_000)
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert model.density(np.array([model.r_A, 2 * model.r_A])).max() == 0.0


# ============= exact shears =============

def test_shear_identity(profile):
    l = LiftPoint(0.123, 0.456)
    assert exact_shear_flow(Generator.F, profile, 0.0, l) == l


def test_shear_examples(profile):
    f = exact_shear_flow(Generator.F, profile, 10.0, LiftPoint(0.3, 0.25))
    assert (f.x, f.y) == pytest.approx((-49.7, 0.25), abs=1e-12)
    p = exact_shear_flow(Generator.P, profile, 1.0, LiftPoint(0.25, 0.7))
    assert (p.x, p.y) == pytest.approx((0.25, 5.7), abs=1e-12)


def test_shear_composition(profile):
    rng = np.random.default_rng(5)
    for _ in range(200):
        s, t = rng.uniform(-20, 20, 2)
        l = LiftPoint(*rng.uniform(-3, 3, 2))
        for which in Generator:
            once = exact_shear_flow(which, profile, s + t, l)
            twice = exact_shear_flow(which, profile, s, exact_shear_flow(which, profile, t, l))
            assert once.x == pytest.approx(twice.x, abs=1e-12)
            assert once.y == pytest.approx(twice.y, abs=1e-12)
            back = exact_shear_flow(which, profile, -t, exact_shear_flow(which, profile, t, l))
            assert back.x == pytest.approx(l.x, abs=1e-12)
            assert back.y == pytest.approx(l.y, abs=1e-12)


def test_speed_bound_near_q0(sys10):
    radius = 2 * sys10.r_A
    t = np.linspace(-radius, radius, 401)
    x, y = np.meshgrid(t, t)
    inside = np.hypot(x, y) <= radius
    for which in Generator:
        hx, hy = sys10.gradient(which, x, y)
        speed = np.hypot(hx, hy)[inside]
        assert speed.max() <= 1.0 / (5.0 * sys10.A)


# ============= apply =============

def test_apply_at_p1(sys10):
    end, trajectory = apply(sys10, LiftPoint(0.0, -0.001))
    assert (end.x, end.y) == pytest.approx((1.0, -0.001), abs=1e-12)
    assert winding_vector(trajectory) == IntVec2(1, 0)
    assert trajectory.max_step() < 0.1


def test_apply_composes_both_shears(sys10):
    end, trajectory = apply(sys10, LiftPoint(0.3, 0.25))
    assert (end.x, end.y) == pytest.approx((-49.7, 100.25), abs=1e-9)
    assert trajectory.max_step() < 0.1
    assert trajectory.times[0] == 0.0 and trajectory.times[-1] == 1.0
    assert trajectory.first_times[-1] == 0.5 and trajectory.second_times[0] == 0.5


def test_apply_stores_generator_values(sys10):
    _, trajectory = apply(sys10, LiftPoint(0.0, -0.001))
    # K = 2A h(y) on the first half, 2B h(x) on the second
    assert trajectory.k_first == pytest.approx(2 * 10.0 * evaluate(sys10.profile, -0.001))
    assert trajectory.k_second == pytest.approx(np.full(trajectory.half_index + 1, 2 * 20.0 * 1.0))


def test_apply_rejects_non_finite(sys10):
    with pytest.raises(InvalidInput):
        apply(sys10, LiftPoint(float("nan"), 0.0))


def test_perturbed_apply_at_q0_is_constant(perturbed10):
    end, trajectory = apply(perturbed10, LiftPoint(0.0, 0.0))
    assert (end.x, end.y) == (0.0, 0.0)
    assert np.all(trajectory.points == 0.0)


def test_perturbed_matches_unperturbed_away_from_disk(sys10, perturbed10):
    rng = np.random.default_rng(21)
    for _ in range(20):
        l = LiftPoint(*rng.uniform(0.05, 0.45, 2))
        a = map_point(sys10, l)
        b = map_point(perturbed10, l)
        assert (b.x, b.y) == pytest.approx((a.x, a.y), abs=1e-9)
    for start in [(0.0, -0.001), (0.5, 0.501)]:
        a, _ = apply(sys10, LiftPoint(*start))
        b, _ = apply(perturbed10, LiftPoint(*start))
        assert (b.x, b.y) == pytest.approx((a.x, a.y), abs=1e-9)


# ============= perturbed fields =============

def test_perturbed_fields_vanish_on_disk(perturbed10):
    for which in Generator:
        assert perturbed10.hamiltonian(which, 0.0, 0.0) == 0.0
        hx, hy = perturbed10.gradient(which, 0.0, 0.0)
        assert hx == 0.0 and hy == 0.0
        r = 0.9 * perturbed10.r_A
        assert perturbed10.hamiltonian(which, r / math.sqrt(2), -r / math.sqrt(2)) == 0.0


def test_perturbed_fields_equal_shears_outside_d_prime(sys10, perturbed10):
    rng = np.random.default_rng(9)
    x, y = rng.uniform(0.01, 0.99, (2, 500))
    for which in Generator:
        assert np.array_equal(perturbed10.hamiltonian(which, x, y), sys10.hamiltonian(which, x, y))


def test_perturbed_fields_have_zero_mean(perturbed10):
    # midpoint polar rule on D', independent of the build-time quadrature
    r_A = perturbed10.r_A
    nr, nt = 4000, 256
    r = (np.arange(nr) + 0.5) / nr * 2 * r_A
    theta = (np.arange(nt) + 0.5) / nt * 2 * math.pi
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    x, y = rr * np.cos(tt), rr * np.sin(tt)
    weight = rr * (2 * r_A / nr) * (2 * math.pi / nt)
    for which in Generator:
        pure = evaluate(perturbed10.profile, y if which == Generator.F else x)
        correction = np.sum((perturbed10.hamiltonian(which, x, y) - pure) * weight)
        assert abs(perturbed10.profile.mean() + correction) < 1e-10


def test_integrate_from_d_a_is_constant(perturbed10):
    path = integrate_perturbed(perturbed10, Generator.F, (0.0, 1.0), LiftPoint(1e-5, 2e-5))
    assert np.all(path.points == np.array([1e-5, 2e-5]))


def test_integrate_matches_closed_form_outside_d_prime(perturbed10, profile):
    start = LiftPoint(0.0, 3 * perturbed10.r_A)
    path = integrate_perturbed(perturbed10, Generator.F, (0.0, 1.0), start)
    for t, point in zip(path.times, path.points):
        exact = exact_shear_flow(Generator.F, profile, t, start)
        assert point == pytest.approx([exact.x, exact.y], abs=1e-9)


def test_integrate_is_reversible_through_vortex(wide_disk):
    start = np.array([3e-3, 5e-4])
    forward = integrate_perturbed(wide_disk, Generator.F, (0.0, 0.12), start)
    backward = integrate_perturbed(wide_disk, Generator.F, (0.12, 0.0), forward.end_point)
    assert backward.end_point == pytest.approx(start, abs=1e-9)


def test_flow_through_vortex_preserves_area(wide_disk):
    step = 1e-7

    def flow(p):
        return integrate_perturbed(wide_disk, Generator.F, (0.0, 0.12), np.asarray(p)).end_point

    for start in ([3e-3, 5e-4], [3e-3, -8e-4], [2.5e-3, 1.0e-3]):
        p = np.array(start)
        jac = np.column_stack([
            (flow(p + e) - flow(p - e)) / (2 * step) for e in (np.array([step, 0.0]), np.array([0.0, step]))
        ])
        assert abs(np.linalg.det(jac) - 1.0) < 1e-6


# ============= differential =============

def test_differential_area_preserving(sys10):
    rng = np.random.default_rng(2)
    for _ in range(100):
        jac = differential(sys10, LiftPoint(*rng.uniform(0, 1, 2)))
        # ad - bc cancels two products of size |Dg|^2
        scale = max(1.0, np.abs(jac).max() ** 2)
        assert abs(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0] - 1.0) <= 1e-9 * scale


def test_differential_at_p1(sys10):
    l = LiftPoint(0.0, -0.001)
    det = np.linalg.det(differential(sys10, l) - np.eye(2))
    assert det == pytest.approx(2.0e6, rel=1e-6)
    assert closed_form_det(sys10, l) == pytest.approx(2.0e6, rel=1e-9)


def test_differential_on_linear_pieces_is_identity(sys10):
    assert np.array_equal(differential(sys10, LiftPoint(0.25, 0.25)), np.eye(2))


@pytest.mark.parametrize("x, y", [
    (0.0, -0.001), (0.5, -0.001), (0.0, 0.501), (0.5, 0.501),
    (0.0005, 0.0), (0.0005, 0.5), (0.4995, 0.0), (0.4995, 0.5),
])
def test_perturbed_differential_exact_off_disk(sys10, perturbed10, x, y):
    l = LiftPoint(x, y)
    assert clear_of_d_prime(perturbed10, l)
    jac = differential(perturbed10, l)
    assert np.array_equal(jac, differential(sys10, l))
    det = np.linalg.det(jac - np.eye(2))
    assert det == pytest.approx(closed_form_det(sys10, l), rel=1e-9)
    assert abs(det) == pytest.approx(2.0e6, rel=1e-3)


def test_points_in_d_prime_are_not_clear(perturbed10):
    r_A = perturbed10.r_A
    assert not clear_of_d_prime(perturbed10, LiftPoint(1.5 * r_A, 0.0))
    assert not clear_of_d_prime(perturbed10, LiftPoint(0.0, 0.5 * r_A))


def test_differential_matches_finite_differences(system):
    sys3 = system(3.0)
    rng = np.random.default_rng(17)
    step = 1e-7
    for _ in range(100):
        l = LiftPoint(*rng.uniform(0, 1, 2))
        fd = np.column_stack([
            (map_point(sys3, l + d).as_array() - map_point(sys3, l - d).as_array()) / (2 * step)
            for d in (LiftPoint(step, 0.0), LiftPoint(0.0, step))
        ])
        exact = differential(sys3, l)
        assert np.linalg.norm(fd - exact) <= 1e-5 * max(1.0, np.linalg.norm(exact))
