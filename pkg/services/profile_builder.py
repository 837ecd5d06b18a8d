import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.polynomial import polyval
from scipy.interpolate import BPoly, PPoly
from scipy.optimize import brentq

from models.eggbeater_models import CheckResult, ProfileConfig, ValidationReport
from utils.errors import InvalidInput, InvalidProfile
from utils.logger import setup_logger

logger = setup_logger(__name__)

CAP_END = 0.01
BLEND_END = 0.125
QUARTER = 0.25
MIN_BLEND_DEGREE = 5
VALIDATION_GRID = 100_000
CHECK_TOLERANCE = 1e-12
JUNCTION_TOLERANCE = 1e-9

# Windows on which h' is strictly monotone and crosses every level in (-5, 5) once
DECREASING_WINDOW = (-0.125, 0.125)
INCREASING_WINDOW = (0.375, 0.625)


@dataclass(frozen=True)
class ProfilePiece:
    """
    Polynomial piece of h in the local variable s = t - origin

    Cap pieces put their origin on the extremum (0, 1/2 or 1) so that
    points near a cap keep full relative precision.
    """
    start: float
    end: float
    kind: str  # "quadratic-cap" | "linear" | "blend"
    poly: Polynomial
    origin: float

    def limits(self, side: str) -> np.ndarray:
        """Value, first and second derivative at the left or right end"""
        s = (self.start if side == "left" else self.end) - self.origin
        return np.array([self.poly(s), self.poly.deriv(1)(s), self.poly.deriv(2)(s)])

    def reflected(self) -> "ProfilePiece":
        """Piece of -h(1/2 - t) on the mirrored interval"""
        return ProfilePiece(0.5 - self.end, 0.5 - self.start, self.kind,
                            -self.poly(Polynomial([0.0, -1.0])), 0.5 - self.origin)

    def shifted(self) -> "ProfilePiece":
        """Piece of -h(t - 1/2) half a period later"""
        return ProfilePiece(self.start + 0.5, self.end + 0.5, self.kind, -self.poly, self.origin + 0.5)


class ProfileH:
    """
    The 1-periodic profile h with first and second derivatives

    Stored as an ordered list of polynomial pieces covering [0, 1).
    Evaluation reduces t to [-1/2, 1/2] and measures s from each piece's
    origin, both exact in floating point.
    """

    def __init__(self, pieces: Sequence[ProfilePiece]):
        self.pieces: Tuple[ProfilePiece, ...] = tuple(pieces)
        if not self.pieces or self.pieces[0].start != 0.0 or not math.isclose(self.pieces[-1].end, 1.0):
            raise InvalidProfile("Profile pieces must cover [0, 1]")
        for left, right in zip(self.pieces, self.pieces[1:]):
            if not math.isclose(left.end, right.start, abs_tol=1e-15):
                raise InvalidProfile(f"Gap between pieces at t={left.end}")

        self._starts = np.array([p.start for p in self.pieces])
        self._origins = np.array([p.origin for p in self.pieces])
        self._coefs = tuple(
            [p.poly.deriv(order).coef if order else p.poly.coef for p in self.pieces]
            for order in (0, 1, 2)
        )

    def with_piece(self, index: int, poly: Polynomial) -> "ProfileH":
        """Copy with one piece replaced, used to build deliberately broken profiles"""
        pieces = list(self.pieces)
        pieces[index] = replace(pieces[index], poly=poly)
        return ProfileH(pieces)

    def piece_index(self, t: float) -> int:
        t = t % 1.0
        for i, piece in enumerate(self.pieces):
            if piece.start <= t < piece.end:
                return i
        return len(self.pieces) - 1

    def __call__(self, t, order: int = 0):
        return evaluate(self, t, order)

    def mean(self) -> float:
        """Exact integral of h over one period"""
        total = 0.0
        for piece in self.pieces:
            antiderivative = piece.poly.integ()
            total += antiderivative(piece.end - piece.origin) - antiderivative(piece.start - piece.origin)
        return float(total)

    def max_abs_curvature(self) -> float:
        grid = np.linspace(0.0, 1.0, 20_001)
        return float(np.abs(evaluate(self, grid, 2)).max())

    def solve_slope(self, c: float) -> List[float]:
        """
        Solve h'(t) = c on both monotone windows

        Returns the root in (-1/8, 1/8) followed by the root in (3/8, 5/8).
        Levels with |c| >= 5 are attained on whole linear pieces or not at
        all, so no isolated roots are returned for them.
        """
        if not math.isfinite(c):
            raise InvalidInput(f"Slope level must be finite, got {c}")
        if abs(c) >= 5.0:
            logger.debug(f"No isolated solutions of h'(t) = {c}")
            return []
        roots = []
        for lo, hi in (DECREASING_WINDOW, INCREASING_WINDOW):
            roots.append(brentq(lambda t: evaluate(self, t, 1) - c, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
        return roots


def evaluate(h: ProfileH, t, order: int = 0):
    """
    Evaluate h, h' or h'' at t (scalar or array), 1-periodic in t

    Raises:
        InvalidInput: If order is not 0, 1 or 2, or t is not finite
    """
    if order not in (0, 1, 2):
        raise InvalidInput(f"Derivative order must be 0, 1 or 2, got {order}")
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("Profile evaluated at a non-finite point")
    # t - round(t) is exact; the lookup point u + 1 may round but only picks a piece
    u = np.atleast_1d(arr - np.round(arr))
    wrapped = u < 0.0
    idx = np.searchsorted(h._starts, np.where(wrapped, u + 1.0, u), side="right") - 1
    idx = np.clip(idx, 0, len(h.pieces) - 1)
    s = u - (h._origins[idx] - wrapped.astype(float))

    values = np.empty_like(u)
    coefs = h._coefs[order]
    for i in np.unique(idx):
        mask = idx == i
        values[mask] = polyval(s[mask], coefs[i])
    if np.ndim(arr) == 0:
        return float(values[0])
    return values.reshape(arr.shape)


def _cap() -> ProfilePiece:
    return ProfilePiece(0.0, CAP_END, "quadratic-cap", Polynomial([1.0, 0.0, -50.0]), 0.0)


def _linear() -> ProfilePiece:
    # 1.25 - 5t written in s = t - 1/8
    return ProfilePiece(BLEND_END, QUARTER, "linear", Polynomial([0.625, -5.0]), BLEND_END)


def _blend_poly(a: float, b: float, left: np.ndarray, right: np.ndarray, degree: int) -> Polynomial:
    """Polynomial of the given degree in s = t - a matching value, slope and curvature at a and b"""
    # degree + 1 conditions split over both ends; past curvature both neighbours have zero derivatives
    n_left = (degree + 1) // 2
    n_right = degree + 1 - n_left
    conditions = [
        list(left) + [0.0] * (n_left - len(left)),
        list(right) + [0.0] * (n_right - len(right)),
    ]
    bp = BPoly.from_derivatives([a, b], conditions)
    pp = PPoly.from_bernstein_basis(bp)
    return Polynomial(pp.c[::-1, 0])


def _monotone(poly: Polynomial, width: float) -> bool:
    """Strictly decreasing slope on the open gap"""
    s = np.linspace(0.0, width, 4001)[1:-1]
    return bool(np.all(poly.deriv(2)(s) < 0.0))


def _blend_pieces(a: float, b: float, left: np.ndarray, right: np.ndarray,
                  degree: int, subdivide: bool) -> List[ProfilePiece]:
    poly = _blend_poly(a, b, left, right, degree)
    if _monotone(poly, b - a):
        return [ProfilePiece(a, b, "blend", poly, a)]
    if not subdivide:
        raise InvalidProfile(f"Blend on [{a}, {b}] violates the monotone-slope constraint")

    logger.warning(f"Blend on [{a}, {b}] is not monotone, subdividing once")
    mid = 0.5 * (a + b)
    slope = 0.5 * (left[1] + right[1])
    middle = np.array([
        left[0] + (mid - a) * 0.5 * (left[1] + slope),
        slope,
        (right[1] - left[1]) / (b - a),
    ])
    first = _blend_poly(a, mid, left, middle, degree)
    second = _blend_poly(mid, b, middle, right, degree)
    if not (_monotone(first, mid - a) and _monotone(second, b - mid)):
        raise InvalidProfile(f"Blend on [{a}, {b}] violates the monotone-slope constraint after subdivision")
    return [ProfilePiece(a, mid, "blend", first, a), ProfilePiece(mid, b, "blend", second, mid)]


def build_profile(config: ProfileConfig = ProfileConfig()) -> ProfileH:
    """
    Construct h from the cap, blend and linear pieces

    Only [0, 1/4] is built; [1/4, 1/2] follows from h(t) = -h(1/2 - t) and
    [1/2, 1) from h(t) = -h(t - 1/2), which makes h odd about 1/4, even
    about 0 and of mean zero.

    Args:
        config: Blend settings

    Returns:
        Validated profile

    Raises:
        InvalidProfile: If the blend degree is too low or a constraint fails
    """
    if config.blend_degree < MIN_BLEND_DEGREE:
        raise InvalidProfile(
            f"Blend degree {config.blend_degree} cannot match value, slope and curvature at both ends "
            f"(needs >= {MIN_BLEND_DEGREE})"
        )

    cap = _cap()
    linear = _linear()
    blends = _blend_pieces(CAP_END, BLEND_END, cap.limits("right"), linear.limits("left"),
                           config.blend_degree, config.subdivide)

    quarter = [cap, *blends, linear]
    half = quarter + [p.reflected() for p in reversed(quarter)]
    profile = ProfileH(half + [p.shifted() for p in half])

    report = validate(profile)
    if not report.passed:
        names = ", ".join(c.name for c in report.failed())
        raise InvalidProfile(f"Profile violates: {names}")
    logger.debug(f"Built profile with {len(profile.pieces)} pieces, blend degree {config.blend_degree}")
    return profile


@lru_cache(maxsize=None)
def default_profile() -> ProfileH:
    return build_profile(ProfileConfig())


def _check(name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def validate(h: ProfileH) -> ValidationReport:
    """
    Check every profile invariant on a 10^5-point grid plus the exact pieces

    Failures are report entries, never exceptions.
    """
    t = np.arange(VALIDATION_GRID) / VALIDATION_GRID
    v0, v1 = evaluate(h, t, 0), evaluate(h, t, 1)
    checks = []

    cap_mask = (t <= CAP_END) | (t >= 1.0 - CAP_END)
    dist = np.minimum(t, 1.0 - t)
    err = np.abs(v0[cap_mask] - (1.0 - 50.0 * dist[cap_mask] ** 2)).max()
    low_mask = np.abs(t - 0.5) <= CAP_END
    err = max(err, np.abs(v0[low_mask] - (-1.0 + 50.0 * (t[low_mask] - 0.5) ** 2)).max())
    checks.append(_check("cap_formula", err <= CHECK_TOLERANCE, f"max error {err:.3e}"))

    first = (t >= 0.125) & (t <= 0.375)
    second = (t >= 0.625) & (t <= 0.875)
    err = max(np.abs(v0[first] - (1.25 - 5.0 * t[first])).max(),
              np.abs(v0[second] - (-3.75 + 5.0 * t[second])).max())
    checks.append(_check("linear_formula", err <= CHECK_TOLERANCE, f"max error {err:.3e}"))

    peak = np.abs(v0).max()
    checks.append(_check("range", peak <= 1.0 + CHECK_TOLERANCE, f"max |h| = {peak:.15g}"))

    lo, hi = v1.min(), v1.max()
    checks.append(_check("derivative_range", lo >= -5.0 - CHECK_TOLERANCE and hi <= 5.0 + CHECK_TOLERANCE,
                         f"h' in [{lo:.15g}, {hi:.15g}]"))

    down = np.linspace(*DECREASING_WINDOW, 20_001)[1:-1]
    up = np.linspace(*INCREASING_WINDOW, 20_001)[1:-1]
    monotone = bool(np.all(np.diff(evaluate(h, down, 1)) < 0) and np.all(np.diff(evaluate(h, up, 1)) > 0))
    checks.append(_check("monotone_windows", monotone, "h' decreasing on (-1/8,1/8), increasing on (3/8,5/8)"))

    off_caps = (dist >= CAP_END) & (np.abs(t - 0.5) >= CAP_END)
    floor = np.abs(v1[off_caps]).min()
    checks.append(_check("slope_floor", floor >= 1.0 - CHECK_TOLERANCE, f"min |h'| off caps = {floor:.15g}"))

    err = np.abs(evaluate(h, t + 0.5, 0) + v0).max()
    checks.append(_check("anti_symmetry", err <= CHECK_TOLERANCE, f"max |h(t+1/2) + h(t)| = {err:.3e}"))

    err = np.abs(evaluate(h, -t, 0) - v0).max()
    checks.append(_check("evenness", err <= CHECK_TOLERANCE, f"max |h(-t) - h(t)| = {err:.3e}"))

    mean = h.mean()
    checks.append(_check("mean_zero", abs(mean) <= CHECK_TOLERANCE, f"|mean| = {abs(mean):.3e}"))

    jump = 0.0
    pieces = h.pieces
    for left, right in zip(pieces, pieces[1:] + pieces[:1]):
        jump = max(jump, np.abs(left.limits("right") - right.limits("left")).max())
    checks.append(_check("c2_junctions", jump <= JUNCTION_TOLERANCE, f"max jump in h, h', h'' = {jump:.3e}"))

    report = ValidationReport(checks=checks)
    for failure in report.failed():
        logger.debug(f"Profile check {failure.name} failed: {failure.detail}")
    return report


def profile_table(h: ProfileH, resolution: int, orders: Sequence[int] = (0, 1, 2)) -> np.ndarray:
    """Rows (t, h, h', ...) on a uniform grid of [0, 1]"""
    t = np.linspace(0.0, 1.0, resolution)
    return np.column_stack([t] + [evaluate(h, t, k) for k in orders])
