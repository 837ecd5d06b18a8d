import numpy as np
import pytest
from numpy.polynomial import Polynomial

from models.eggbeater_models import ProfileConfig
from services.profile_builder import (
    BLEND_END, build_profile, evaluate, profile_table, validate,
)
from utils.errors import InvalidInput, InvalidProfile


def test_default_profile_extremes(profile):
    assert evaluate(profile, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert evaluate(profile, 0.5) == pytest.approx(-1.0, abs=1e-15)


def test_default_profile_mean_zero(profile):
    assert abs(profile.mean()) < 1e-12
    # independent composite Simpson check
    t = np.linspace(0.0, 1.0, 200_001)
    v = evaluate(profile, t)
    h = t[1] - t[0]
    simpson = h / 3 * (v[0] + v[-1] + 4 * v[1:-1:2].sum() + 2 * v[2:-1:2].sum())
    assert abs(simpson) < 1e-12


def test_low_blend_degree_rejected():
    with pytest.raises(InvalidProfile):
        build_profile(ProfileConfig(blend_degree=2))


@pytest.mark.parametrize("t, order, expected", [
    (0.25, 0, 0.0),
    (0.75, 0, 0.0),
    (0.005, 2, -100.0),
    (0.2, 0, 1.25 - 5 * 0.2),
    (0.3, 1, -5.0),
    (0.7, 1, 5.0),
    (0.495, 0, -1.0 + 50 * 0.005 ** 2),
])
def test_evaluate_examples(profile, t, order, expected):
    assert evaluate(profile, t, order) == pytest.approx(expected, abs=1e-12)


def test_evaluate_is_periodic(profile):
    t = np.linspace(-0.3, 0.3, 101)
    for order in (0, 1, 2):
        assert np.allclose(evaluate(profile, t + 3.0, order), evaluate(profile, t, order), atol=1e-12)


def test_evaluate_rejects_bad_input(profile):
    with pytest.raises(InvalidInput):
        evaluate(profile, float("nan"))
    with pytest.raises(InvalidInput):
        evaluate(profile, 0.1, 3)


def test_default_profile_passes_validation(profile):
    report = validate(profile)
    assert report.passed, [c.name for c in report.failed()]


def test_steep_linear_piece_flags_range(profile):
    # slope -6 on [1/8, 1/4]
    broken = profile.with_piece(profile.piece_index(0.2), Polynomial([0.625, -6.0]))
    report = validate(broken)
    assert not report.get("derivative_range").passed


def test_asymmetric_blend_flags_mean(profile):
    # lift only the blend of the first quarter, its mirror images stay put
    broken = profile
    for index, piece in enumerate(profile.pieces):
        if piece.kind == "blend" and piece.end <= BLEND_END:
            broken = broken.with_piece(index, piece.poly + 0.01)
    report = validate(broken)
    check = report.get("mean_zero")
    assert not check.passed
    assert "|mean|" in check.detail
    assert abs(broken.mean()) > 1e-4


def test_anti_symmetry_and_evenness(profile):
    rng = np.random.default_rng(11)
    t = rng.uniform(0.0, 1.0, 10_000)
    assert np.abs(evaluate(profile, t + 0.5) + evaluate(profile, t)).max() < 1e-12
    assert np.abs(evaluate(profile, -t) - evaluate(profile, t)).max() < 1e-12


def test_derivatives_match_finite_differences(profile):
    rng = np.random.default_rng(3)
    t = rng.uniform(0.0, 1.0, 2000)
    step = 1e-6
    for order in (1, 2):
        fd = (evaluate(profile, t + step, order - 1) - evaluate(profile, t - step, order - 1)) / (2 * step)
        assert np.abs(fd - evaluate(profile, t, order)).max() < 1e-4


def test_slope_has_exactly_two_zeros(profile):
    t = (np.arange(400_000) + 0.5) / 400_000 - 0.01
    slope = evaluate(profile, t, 1)
    changes = np.flatnonzero(np.sign(slope[:-1]) != np.sign(slope[1:]))
    roots = sorted(round(float(np.mod(t[i], 1.0)), 4) % 1.0 for i in changes)
    assert roots == [0.0, 0.5]


@pytest.mark.parametrize("c", [-0.5, -0.1, -0.05, 0.0, 0.025, 0.1, 0.5])
def test_slope_equation_has_one_root_per_window(profile, c):
    roots = profile.solve_slope(c)
    assert len(roots) == 2
    assert -0.125 < roots[0] < 0.125
    assert 0.375 < roots[1] < 0.625
    for r in roots:
        assert evaluate(profile, r, 1) == pytest.approx(c, abs=1e-12)

    # no other solutions anywhere on the circle
    t = (np.arange(200_000) + 0.5) / 200_000
    g = evaluate(profile, t, 1) - c
    crossings = np.count_nonzero(np.sign(g[:-1]) != np.sign(g[1:]))
    wrap = int(np.sign(g[-1]) != np.sign(g[0]))
    assert crossings + wrap == 2


def test_slope_equation_outside_range(profile):
    assert profile.solve_slope(5.0) == []
    assert profile.solve_slope(-7.0) == []


def test_profile_table_columns(profile):
    table = profile_table(profile, 11)
    assert table.shape == (11, 4)
    assert table[0, 0] == 0.0 and table[-1, 0] == 1.0
    assert table[0, 1] == pytest.approx(1.0)
    assert table[5, 1] == pytest.approx(-1.0)


def test_fresh_build_has_exact_quintic_blends():
    fresh = build_profile(ProfileConfig())
    blends = [piece for piece in fresh.pieces if piece.kind == "blend"]
    assert blends
    assert all(piece.poly.degree() <= ProfileConfig().blend_degree for piece in blends)
    report = validate(fresh)
    assert report.passed, [c.name for c in report.failed()]
    jump = max(
        np.abs(left.limits("right") - right.limits("left")).max()
        for left, right in zip(fresh.pieces, fresh.pieces[1:])
    )
    assert jump < 1e-12


@pytest.mark.parametrize("d", [2.0 ** -12, 2.0 ** -20, 2.0 ** -28])
def test_cap_slope_keeps_relative_precision(profile, d):
    # h'(t) = -100 t on the cap, also just below t = 0 and around t = 1/2
    assert evaluate(profile, d, 1) == pytest.approx(-100.0 * d, rel=1e-13)
    assert evaluate(profile, -d, 1) == -evaluate(profile, d, 1)
    assert evaluate(profile, 0.5 - d, 1) == pytest.approx(-100.0 * d, rel=1e-13)
    assert evaluate(profile, 7.0 - d, 1) == pytest.approx(100.0 * d, rel=1e-13)
