from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from services.eggbeater_system import (
    DEFAULT_SAMPLES, EggbeaterSystem, Trajectory, apply, closed_form_det, differential, lattice_offset, map_point,
)
from services.profile_builder import evaluate
from services.torus_geometry import (
    IntVec2, LiftPoint, TorusPoint, reduce, torus_distance, winding_vector,
)
from utils.errors import EggbeaterError, InvalidInput
from utils.logger import setup_logger

logger = setup_logger(__name__)

NEWTON_TOLERANCE = 1e-12
NEWTON_MAX_ITERATIONS = 50
NEWTON_STALL_RESIDUAL = 1e-9
NEWTON_STEP_TOLERANCE = 1e-13
ROUNDING_FLOOR_FACTOR = 8.0
DEDUP_RADIUS = 1e-9
DEGENERACY_THRESHOLD = 1e-8
DET_AGREEMENT = 1e-6
CHART_LOW = -0.125  # orbit lifts are reported in [-1/8, 7/8)^2


@dataclass(frozen=True)
class PeriodicOrbit:
    """1-periodic point of g in a fixed homotopy class"""
    point: TorusPoint
    lift: LiftPoint  # chart representative in [-1/8, 7/8)^2
    homotopy_class: IntVec2
    trajectory: Trajectory
    det_dg_minus_id: float
    nondegenerate: bool
    enters_d_prime: bool = False


def chart(p: np.ndarray) -> np.ndarray:
    """Representative of p in [-1/8, 7/8)^2, shifted by whole integers only"""
    return p - np.floor(p - CHART_LOW)


def _residual(sys: EggbeaterSystem, p: np.ndarray, c: IntVec2) -> np.ndarray:
    return map_point(sys, LiftPoint.from_array(p)).as_array() - p - c.as_array()


def newton_refine(sys: EggbeaterSystem, seed: np.ndarray, c: IntVec2) -> Optional[np.ndarray]:
    """
    Newton iteration on l -> g(l) - l - c

    Returns the refined lift, or None if the residual does not drop below
    1e-12 within 50 iterations. Near strongly expanding points the residual
    bottoms out above 1e-12 in double precision, at roughly
    eps * |Dg - I| * max(1, |p|). Once the Newton step is below 1e-13 the
    point is accepted if the residual is under that rounding floor or 1e-9.
    """
    eps = np.finfo(float).eps
    p = np.asarray(seed, dtype=float).copy()
    for iteration in range(NEWTON_MAX_ITERATIONS):
        g = _residual(sys, p, c)
        norm = np.abs(g).max()
        if norm < NEWTON_TOLERANCE:
            logger.debug(f"Newton converged at {p} after {iteration} iterations")
            return p
        jac = differential(sys, LiftPoint.from_array(p)) - np.eye(2)
        try:
            step = np.linalg.solve(jac, g)
        except np.linalg.LinAlgError:
            logger.warning(f"Singular Jacobian at seed {seed}, skipping")
            return None
        scale = max(1.0, np.abs(p).max())
        floor = ROUNDING_FLOOR_FACTOR * eps * np.abs(jac).sum(axis=1).max() * scale
        if np.abs(step).max() <= NEWTON_STEP_TOLERANCE * scale and norm <= max(NEWTON_STALL_RESIDUAL, floor):
            logger.debug(f"Newton stalled at machine precision at {p}, residual {norm:.2e}")
            return p
        p = p - step
        if not np.all(np.isfinite(p)):
            break
    logger.warning(f"Newton did not converge from seed {seed} in class {c}")
    return None


def analytic_seeds(sys: EggbeaterSystem, c: IntVec2) -> List[np.ndarray]:
    """
    Pair the solutions of h'(y) = m/A and h'(x) = -n/B

    The first shear moves x by A h'(y), which must equal m; the second
    then moves y by -B h'(x + m) = -B h'(x), which must equal n.
    """
    ys = sys.profile.solve_slope(c.m / sys.A)
    xs = sys.profile.solve_slope(-c.n / sys.B)
    return [np.array([x, y]) for x in xs for y in ys]


def scan_residual_minima(sys: EggbeaterSystem, c: IntVec2, resolution: int = 2048) -> List[np.ndarray]:
    """
    Brute-force grid scan of the unperturbed fixed-point residual

    Keeps strict 4-neighbour local minima of |G| below the grid-resolution
    threshold and Newton-refines each of them.

    Returns:
        Distinct refined lifts in the orbit chart
    """
    h = sys.profile
    t = (np.arange(resolution) / resolution) + CHART_LOW
    x, y = np.meshgrid(t, t, indexing="ij")
    shift_x = sys.A * evaluate(h, y, 1)
    gx = shift_x - c.m
    x_next = x + shift_x
    gy = -sys.B * evaluate(h, x_next, 1) - c.n
    norm = np.hypot(gx, gy)

    is_min = np.ones_like(norm, dtype=bool)
    for axis in (0, 1):
        for shift in (1, -1):
            is_min &= norm < np.roll(norm, shift, axis=axis)

    kappa = h.max_abs_curvature()
    spacing = 1.0 / resolution
    threshold = spacing * (sys.A * kappa + sys.B * kappa * (1.0 + sys.A * kappa))
    candidates = np.argwhere(is_min & (norm <= threshold))
    logger.debug(f"Residual scan for class {c}: {len(candidates)} grid minima below {threshold:.3g}")

    found: List[np.ndarray] = []
    for i, j in candidates:
        refined = newton_refine(sys, np.array([x[i, j], y[i, j]]), c)
        if refined is None:
            continue
        refined = chart(refined)
        if all(torus_distance(refined, f) > DEDUP_RADIUS for f in found):
            found.append(refined)
    return found


def nondegeneracy(sys: EggbeaterSystem, lift: LiftPoint) -> Tuple[float, bool]:
    """
    det(Dg - I) at a periodic point and the non-degeneracy flag

    For unperturbed systems the determinant is cross-checked against the
    closed form A B h''(x') h''(y).

    Raises:
        EggbeaterError: If the two determinants disagree beyond 1e-6 relative
    """
    det = float(np.linalg.det(differential(sys, lift) - np.eye(2)))
    if not sys.perturbed:
        closed = closed_form_det(sys, lift)
        if abs(det - closed) > DET_AGREEMENT * max(abs(closed), 1.0):
            raise EggbeaterError(f"det(Dg - I) = {det:.12g} disagrees with closed form {closed:.12g}")
    return det, abs(det) > DEGENERACY_THRESHOLD


def _sort_key(c: IntVec2):
    transverse_first = abs(c.m) >= abs(c.n)

    def key(orbit: PeriodicOrbit):
        x, y = orbit.lift.x, orbit.lift.y
        return (y, x) if transverse_first else (x, y)
    return key


def _build_orbit(sys: EggbeaterSystem, p: np.ndarray, c: IntVec2,
                 samples: int = DEFAULT_SAMPLES) -> Optional[PeriodicOrbit]:
    lift = LiftPoint.from_array(chart(p))
    _, trajectory = apply(sys, lift, samples)
    if winding_vector(trajectory) != c:
        logger.warning(f"Refined point {lift} winds {winding_vector(trajectory)}, expected {c}; skipping")
        return None
    det, flag = nondegeneracy(sys, lift)
    if not flag:
        logger.warning(f"Degenerate orbit at ({lift.x:.12g}, {lift.y:.12g}) in class {c}")
    dx, dy = lattice_offset(trajectory.points[:, 0], trajectory.points[:, 1])
    enters = bool(sys.perturbed and np.hypot(dx, dy).min() < 2.0 * sys.r_A)
    if enters:
        logger.warning(f"Orbit at ({lift.x:.12g}, {lift.y:.12g}) passes through D′")
    return PeriodicOrbit(reduce(lift), lift, c, trajectory, det, flag, enters)


def find_periodic_points(sys: EggbeaterSystem, c: IntVec2, samples: int = DEFAULT_SAMPLES) -> List[PeriodicOrbit]:
    """
    All 1-periodic points of g in the class c

    Seeds come from the separated slope equations; perturbed systems fall
    back to the residual grid scan when no analytic seed converges.

    Args:
        sys: Eggbeater system
        c: Non-contractible homotopy class
        samples: Initial trajectory samples per unit time

    Returns:
        Orbits ordered by the coordinate transverse to the dominant winding
        direction, then the other one (empty list is a valid result)

    Raises:
        InvalidInput: For the contractible class
    """
    if c.is_zero:
        raise InvalidInput("Contractible class (0,0) is not supported")
    if abs(c.m) > 5.0 * sys.A or abs(c.n) > 5.0 * sys.B:
        logger.info(f"Class {c} exceeds the shear speeds |h'| <= 5; no orbits")
        return []
    if abs(c.m) == 5.0 * sys.A or abs(c.n) == 5.0 * sys.B:
        # h' = +-5 holds on whole linear pieces, so the solutions form continua
        logger.warning(f"Class {c} reaches |h'| = 5; its fixed points are degenerate continua and are not enumerated")
        return []

    refined: List[np.ndarray] = []
    for seed in analytic_seeds(sys, c):
        p = newton_refine(sys, seed, c)
        if p is not None:
            refined.append(chart(p))

    if not refined and sys.perturbed:
        logger.warning(f"No analytic seed converged for class {c}, falling back to grid scan")
        refined = scan_residual_minima(sys, c)

    unique: List[np.ndarray] = []
    for p in refined:
        if all(torus_distance(p, q) > DEDUP_RADIUS for q in unique):
            unique.append(p)

    orbits = [o for o in (_build_orbit(sys, p, c, samples) for p in unique) if o is not None]
    orbits.sort(key=_sort_key(c))
    logger.info(f"Found {len(orbits)} periodic points in class {c} (A={sys.A:g})")
    return orbits
