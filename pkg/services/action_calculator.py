from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import simpson

from models.eggbeater_models import SurfaceMode
from services.eggbeater_system import DEFAULT_SAMPLES, EggbeaterSystem, SurfaceModel, Trajectory
from services.orbit_finder import PeriodicOrbit, find_periodic_points
from services.torus_geometry import (
    IntVec2, Loop, lattice_degree, reference_loop, segment_lattice_clearance, winding_vector,
)
from utils.errors import BrokenLift, ClassMismatch, InvalidInput
from utils.logger import setup_logger

logger = setup_logger(__name__)

RUNG_CLEARANCE = 1e-9
AXIS_CLASSES = (IntVec2(1, 0), IntVec2(0, 1))


@dataclass(frozen=True)
class ActionValue:
    """Capped action of one periodic orbit"""
    value: float
    orbit_index: int
    homotopy_class: IntVec2
    wrap: int
    delta: Optional[float] = None


@dataclass(frozen=True)
class ActionSpectrum:
    """Wrap-0 actions of all periodic orbits in one class"""
    A: float
    B: float
    homotopy_class: IntVec2
    mode: SurfaceMode
    values: List[ActionValue]
    orbits: List[PeriodicOrbit] = field(default_factory=list)

    @property
    def actions(self) -> np.ndarray:
        return np.array([v.value for v in self.values])

    @property
    def deltas(self) -> List[Optional[float]]:
        return [v.delta for v in self.values]


def _rolled(points: np.ndarray, c: np.ndarray, j: int) -> np.ndarray:
    """Path over one period starting at sample j: samples j..N, then 1..j shifted by c"""
    return np.vstack([points[j:], points[1:j + 1] + c])


def _cut_index(traj: np.ndarray, ref: np.ndarray, shift: np.ndarray) -> int:
    """First sample whose rung from trajectory to reference misses every lattice point"""
    n = len(traj) - 1
    order = [0, n // 4, n // 2, 3 * n // 4] + list(range(n))
    for j in order:
        if segment_lattice_clearance(traj[j], ref[j] + shift) > RUNG_CLEARANCE:
            return j
    raise BrokenLift("Every rung of the capping passes through a lattice point")


def capping_polygon(trajectory: Loop, reference: Loop, shift: np.ndarray) -> np.ndarray:
    """
    Boundary of the straight-line capping w(s,t) = (1-s) traj(t) + s (ref(t) + shift)

    Oriented so that its shoelace area equals the integral of w*(dx^dy)
    over s from trajectory (0) to reference (1). The reference is
    interpolated at the trajectory sample times.
    """
    c = trajectory.points[-1] - trajectory.points[0]
    c = np.round(c)
    traj = trajectory.points
    ref = reference.at(trajectory.times)
    j = _cut_index(traj, ref, shift)
    t_path = _rolled(traj, c, j)
    r_path = _rolled(ref, c, j) + shift
    return np.vstack([t_path[:1], r_path, t_path[::-1][:-1]])


def shoelace(polygon: np.ndarray) -> float:
    x, y = polygon[:, 0], polygon[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def capping_degree(trajectory: Loop, reference: Loop, shift: np.ndarray) -> int:
    """
    Local degree of the straight-line capping at q_0

    Sum over every lift of q_0 of the winding number of the capping
    boundary, by signed ray-crossing counts.
    """
    return lattice_degree(capping_polygon(trajectory, reference, np.asarray(shift, dtype=float)))


def _ext_gcd(a: int, b: int) -> Tuple[int, int, int]:
    """(g, u, v) with u*a + v*b = g = gcd(a, b) >= 0"""
    old_r, r = a, b
    old_u, u = 1, 0
    old_v, v = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_u, u = u, old_u - q * u
        old_v, v = v, old_v - q * v
    if old_r < 0:
        old_r, old_u, old_v = -old_r, -old_u, -old_v
    return old_r, old_u, old_v


def shift_for_wrap(trajectory: Loop, reference: Loop, c: IntVec2, wrap: int) -> Tuple[np.ndarray, int]:
    """
    Integer translate of the reference lift realizing the requested wrap

    Translating the reference by u changes the local degree by
    det(u, c) = u_x n - u_y m.

    Returns:
        (shift vector, degree it realizes)

    Raises:
        InvalidInput: If wrap cannot be reached in a non-primitive class
    """
    base = np.round(trajectory.points[0] - reference.points[0])
    degree = capping_degree(trajectory, reference, base)
    need = wrap - degree
    if need == 0:
        return base, degree
    g, a, b = _ext_gcd(c.n, -c.m)
    if need % g:
        raise InvalidInput(f"Wrap {wrap} is unreachable in class {c}: degrees move in steps of {g}")
    q = need // g
    shift = base + np.array([a * q, b * q], dtype=float)
    realized = capping_degree(trajectory, reference, shift)
    if realized != wrap:
        raise BrokenLift(f"Capping realized degree {realized}, expected {wrap}")
    return shift, realized


def hamiltonian_term(trajectory: Trajectory) -> float:
    """Composite Simpson quadrature of K_t(gamma(t)) on each half"""
    return float(simpson(trajectory.k_first, x=trajectory.first_times)
                 + simpson(trajectory.k_second, x=trajectory.second_times))


def action(sys: EggbeaterSystem, orbit: PeriodicOrbit, reference: Loop, wrap: int = 0,
           model: Optional[SurfaceModel] = None) -> ActionValue:
    """
    Hamiltonian action of a capped periodic trajectory

    value = area of the capping (with the density of the surface model)
            + integral of K_t along the trajectory

    Args:
        sys: Eggbeater system
        orbit: Periodic orbit with its trajectory
        reference: Reference loop in the same class
        wrap: Local degree of the capping at q_0 (forced to 0 for the surface model)
        model: Surface model; the system's when omitted

    Returns:
        ActionValue

    Raises:
        ClassMismatch: If trajectory and reference wind differently
    """
    model = model or sys.model
    traj = orbit.trajectory
    c = winding_vector(traj)
    if c != winding_vector(reference):
        raise ClassMismatch(f"Trajectory winds {c} but reference winds {winding_vector(reference)}")

    if model.mode != SurfaceMode.TORUS and wrap != 0:
        logger.debug(f"Wrap {wrap} ignored: the surface model has a unique capping")
        wrap = 0

    shift, degree = shift_for_wrap(traj, reference, c, wrap)
    area = shoelace(capping_polygon(traj, reference, shift))
    value = area + (model.total_area - 1.0) * degree + hamiltonian_term(traj)
    return ActionValue(value=value, orbit_index=-1, homotopy_class=c, wrap=degree)


def nearest_level(sys: EggbeaterSystem, value: float) -> float:
    """Closest of the unperturbed action levels {+-A +- B}"""
    levels = [s * sys.A + t * sys.B for s in (1, -1) for t in (1, -1)]
    return min(levels, key=lambda level: abs(value - level))


def action_spectrum(sys: EggbeaterSystem, c: IntVec2, model: Optional[SurfaceModel] = None,
                    samples: int = DEFAULT_SAMPLES) -> ActionSpectrum:
    """
    Wrap-0 actions of every periodic orbit in the class c

    The classes (1,0) and (0,1) carry the diagnostic delta = value minus the
    nearest level of {+-A +- B}.
    """
    model = model or sys.model
    orbits = find_periodic_points(sys, c, samples)
    reference = reference_loop(c)
    values = []
    for index, orbit in enumerate(orbits):
        a = action(sys, orbit, reference, 0, model)
        delta = a.value - nearest_level(sys, a.value) if c in AXIS_CLASSES else None
        values.append(ActionValue(a.value, index, c, a.wrap, delta))
        logger.debug(f"Orbit {index} at ({orbit.lift.x:.12g}, {orbit.lift.y:.12g}): action {a.value:.12g}")

    if values:
        summary = ", ".join(f"{v.value:.6g}" for v in values)
        logger.info(f"Action spectrum for class {c} (A={sys.A:g}, {model.mode.value}): [{summary}]")
    return ActionSpectrum(sys.A, sys.B, c, model.mode, values, orbits)
