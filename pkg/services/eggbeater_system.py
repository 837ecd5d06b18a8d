import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp

from models.eggbeater_models import EggbeaterParams, SurfaceMode
from services.profile_builder import ProfileH, default_profile, evaluate
from services.torus_geometry import LiftPoint, Loop, closure_vector, segment_lattice_clearance
from utils.errors import IntegrationFailure, InvalidInput, InvalidParams
from utils.logger import setup_logger

logger = setup_logger(__name__)

MAX_SAMPLE_STEP = 0.1
DEFAULT_SAMPLES = 256
ODE_RTOL = 1e-12
MAX_EVALUATIONS = 200_000
MAX_DISK_VISITS = 10_000
INSIDE_TOLERANCE = 1e-9
FD_STEP = 1e-6
RADIAL_NODES = 24
ANGULAR_NODES = 64


class Generator(str, Enum):
    """Which autonomous Hamiltonian is flowing"""
    F = "F"  # F(x, y) = h(y), horizontal shear
    P = "P"  # P(x, y) = h(x), vertical shear


@dataclass(frozen=True)
class SurfaceModel:
    """
    Area bookkeeping of the torus

    SURFACE keeps dx^dy (total area 1). TORUS adds a radial bump rho of
    total mass 1 supported in D_A, so the area becomes 2.
    """
    mode: SurfaceMode
    r_A: float

    @property
    def total_area(self) -> float:
        return 2.0 if self.mode == SurfaceMode.TORUS else 1.0

    @property
    def area_DA(self) -> float:
        flat = math.pi * self.r_A ** 2
        return flat + 1.0 if self.mode == SurfaceMode.TORUS else flat

    def density(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.mode != SurfaceMode.TORUS:
            return np.zeros_like(r)
        u = np.clip(r / self.r_A, 0.0, 1.0)
        return 4.0 / (math.pi * self.r_A ** 2) * (1.0 - u ** 2) ** 3


@dataclass(frozen=True)
class Trajectory(Loop):
    """
    Unit-time trajectory of the concatenated flow

    k_first / k_second hold K_t(gamma(t)) on the nodes of [0, 1/2] and
    [1/2, 1]; the node t = 1/2 appears in both.
    """
    k_first: np.ndarray = None
    k_second: np.ndarray = None
    smooth: bool = False

    @property
    def half_index(self) -> int:
        return len(self.k_first) - 1

    @property
    def first_times(self) -> np.ndarray:
        return self.times[: self.half_index + 1]

    @property
    def second_times(self) -> np.ndarray:
        return self.times[self.half_index:]


@dataclass(frozen=True)
class FlowPath:
    """Numerical solution of the perturbed Hamiltonian ODE"""
    times: np.ndarray
    points: np.ndarray
    end_time: float
    end_point: np.ndarray
    exited: bool
    sol: Optional[object] = None


def _smoothstep(s):
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)


def _smoothstep_prime(s):
    return 30.0 * s ** 2 * (1.0 - s) ** 2


def _bump(s):
    return (s * (1.0 - s)) ** 3


def _bump_prime(s):
    return 3.0 * (s * (1.0 - s)) ** 2 * (1.0 - 2.0 * s)


def lattice_offset(x, y) -> Tuple[np.ndarray, np.ndarray]:
    """Displacement from the nearest lattice point"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x - np.round(x), y - np.round(y)


class EggbeaterSystem:
    """
    The map g = Psi_B o Phi_A with its generating fields

    Immutable after build_eggbeater(); all methods are pure.
    """

    def __init__(self, params: EggbeaterParams, profile: ProfileH, model: SurfaceModel,
                 c_F: float = 0.0, c_P: float = 0.0):
        self.params = params
        self.profile = profile
        self.model = model
        self.c_F = c_F
        self.c_P = c_P

    @property
    def A(self) -> float:
        return self.params.A

    @property
    def B(self) -> float:
        return self.params.B

    @property
    def r_A(self) -> float:
        return self.params.r_A

    @property
    def perturbed(self) -> bool:
        return self.params.perturbed

    def duration(self, which: Generator) -> float:
        return self.A if which == Generator.F else self.B

    def _weights(self, x, y):
        dx, dy = lattice_offset(x, y)
        r = np.hypot(dx, dy)
        s = np.clip((r - self.r_A) / self.r_A, 0.0, 1.0)
        return dx, dy, r, s

    def hamiltonian(self, which: Generator, x, y):
        """F or P at (x, y), vectorized"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        base = evaluate(self.profile, y if which == Generator.F else x, 0)
        base = np.broadcast_to(base, np.broadcast(x, y).shape)
        if not self.perturbed:
            return np.array(base, dtype=float)
        _, _, _, s = self._weights(x, y)
        c = self.c_F if which == Generator.F else self.c_P
        return _smoothstep(s) * base + c * _bump(s)

    def gradient(self, which: Generator, x, y) -> Tuple[np.ndarray, np.ndarray]:
        """(dH/dx, dH/dy), vectorized"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        coord = y if which == Generator.F else x
        slope = np.broadcast_to(evaluate(self.profile, coord, 1), shape)
        zero = np.zeros(shape)
        if not self.perturbed:
            if which == Generator.F:
                return zero, np.array(slope, dtype=float)
            return np.array(slope, dtype=float), zero

        dx, dy, r, s = self._weights(x, y)
        c = self.c_F if which == Generator.F else self.c_P
        base = np.broadcast_to(evaluate(self.profile, coord, 0), shape)
        chi = _smoothstep(s)
        radial = (_smoothstep_prime(s) * base + c * _bump_prime(s)) / self.r_A
        ux = np.divide(dx, r, out=np.zeros(shape), where=r > 0)
        uy = np.divide(dy, r, out=np.zeros(shape), where=r > 0)
        hx = radial * ux
        hy = radial * uy
        if which == Generator.F:
            hy = hy + chi * slope
        else:
            hx = hx + chi * slope
        return hx, hy

    def vector_field(self, which: Generator, point: np.ndarray) -> np.ndarray:
        """X_H = (H_y, -H_x) for omega = dx^dy"""
        hx, hy = self.gradient(which, point[0], point[1])
        return np.array([float(hy), -float(hx)])

    def lattice_radius(self, point) -> float:
        dx, dy = lattice_offset(point[0], point[1])
        return float(np.hypot(dx, dy))

    def inside_d_prime(self, point) -> bool:
        return self.perturbed and self.lattice_radius(point) < 2.0 * self.r_A * (1.0 - INSIDE_TOLERANCE)


def exact_shear_flow(which: Generator, h: ProfileH, t: float, l: LiftPoint) -> LiftPoint:
    """
    Closed-form time-t flow of F = h(y) or P = h(x) on the lift

    F moves (x, y) to (x + t h'(y), y); P moves it to (x, y - t h'(x)).
    """
    if which == Generator.F:
        return LiftPoint(l.x + t * evaluate(h, l.y, 1), l.y)
    return LiftPoint(l.x, l.y - t * evaluate(h, l.x, 1))


def _shear_array(which: Generator, h: ProfileH, tau, point: np.ndarray) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    out = np.empty(tau.shape + (2,))
    if which == Generator.F:
        out[..., 0] = point[0] + tau * evaluate(h, point[1], 1)
        out[..., 1] = point[1]
    else:
        out[..., 0] = point[0]
        out[..., 1] = point[1] - tau * evaluate(h, point[0], 1)
    return out


def _normalization(profile: ProfileH, r_A: float, which: Generator) -> float:
    """
    Constant c with mean(chi*h + c*eta) = 0

    Polar Gauss-Legendre in r on [0, r_A] and [r_A, 2r_A] with a uniform
    angular rule; both integrands are polynomial in r there.
    """
    nodes, weights = leggauss(RADIAL_NODES)
    theta = 2.0 * math.pi * np.arange(ANGULAR_NODES) / ANGULAR_NODES
    w_theta = 2.0 * math.pi / ANGULAR_NODES

    def radial(a: float, b: float):
        return 0.5 * (b - a) * nodes + 0.5 * (a + b), 0.5 * (b - a) * weights

    def coord(r):
        trig = np.sin(theta) if which == Generator.F else np.cos(theta)
        return r[:, None] * trig[None, :]

    r_in, w_in = radial(0.0, r_A)
    inner = -np.sum(w_in[:, None] * w_theta * r_in[:, None] * evaluate(profile, coord(r_in), 0))

    r_out, w_out = radial(r_A, 2.0 * r_A)
    s = (r_out - r_A) / r_A
    h_out = evaluate(profile, coord(r_out), 0)
    outer = np.sum(w_out[:, None] * w_theta * (r_out * (_smoothstep(s) - 1.0))[:, None] * h_out)
    eta = np.sum(w_out * r_out * _bump(s)) * 2.0 * math.pi

    return -(profile.mean() + inner + outer) / eta


def build_eggbeater(params: EggbeaterParams, profile: Optional[ProfileH] = None,
                    mode: SurfaceMode = SurfaceMode.SURFACE) -> EggbeaterSystem:
    """
    Build the eggbeater system after checking its parameters

    Args:
        params: A, B, r_A and the perturbation flag (defaults filled in)
        profile: Profile h; the default build when omitted
        mode: Capping bookkeeping mode

    Returns:
        Immutable EggbeaterSystem

    Raises:
        InvalidParams: If A, B or r_A is outside its admissible range
    """
    A, B, r_A = params.A, params.B, params.r_A
    if not all(v is not None and math.isfinite(v) for v in (A, B, r_A)):
        raise InvalidParams(f"Parameters must be finite, got A={A}, B={B}, r_A={r_A}")
    floor = 2.0 if mode == SurfaceMode.TORUS else 1.0
    if A <= floor:
        raise InvalidParams(f"A must exceed {floor:g} in {mode.value} mode, got {A:g}")
    if B <= 0:
        raise InvalidParams(f"B must be positive, got {B:g}")
    if not 0 < r_A < 1.0 / (1000.0 * A):
        raise InvalidParams(f"r_A must lie in (0, 1/(1000A)) = (0, {1.0 / (1000.0 * A):.6g}), got {r_A:.6g}")

    profile = profile if profile is not None else default_profile()
    model = SurfaceModel(mode, r_A)
    c_F = c_P = 0.0
    if params.perturbed:
        c_F = _normalization(profile, r_A, Generator.F)
        c_P = _normalization(profile, r_A, Generator.P)
        logger.debug(f"Normalization constants c_F={c_F:.12g}, c_P={c_P:.12g}")
    logger.info(f"Built eggbeater system A={A:g}, B={B:g}, r_A={r_A:.6g}, mode={mode.value}, "
                f"perturbed={params.perturbed}")
    return EggbeaterSystem(params, profile, model, c_F, c_P)


def _straight_path_enters(sys: EggbeaterSystem, which: Generator, point: np.ndarray, tau: float,
                          sign: float = 1.0) -> bool:
    return sys.inside_d_prime(point) or _next_entry(sys, which, point, tau, sign) is not None


def integrate_perturbed(sys: EggbeaterSystem, which: Generator, span: Tuple[float, float],
                        l, stop_on_exit: bool = False) -> FlowPath:
    """
    Integrate the Hamiltonian ODE of the perturbed F or P

    DOP853 with rtol 1e-12. The step is capped near D' so the solver
    cannot step over the disk.

    Args:
        sys: Eggbeater system
        which: Generator to flow
        span: (t0, t1) flow-time interval; t1 < t0 integrates backwards
        l: Start point (LiftPoint or array)
        stop_on_exit: Stop when the path leaves D'

    Returns:
        FlowPath with dense output

    Raises:
        IntegrationFailure: If the solver fails or exceeds its evaluation budget
    """
    t0, t1 = float(span[0]), float(span[1])
    start = l.as_array() if isinstance(l, LiftPoint) else np.asarray(l, dtype=float)

    if sys.perturbed and sys.lattice_radius(start) <= sys.r_A:
        # both fields vanish on D_A
        return FlowPath(np.array([t0, t1]), np.vstack([start, start]), t1, start.copy(), False)

    evaluations = 0

    def rhs(_, z):
        nonlocal evaluations
        evaluations += 1
        if evaluations > MAX_EVALUATIONS:
            raise IntegrationFailure(f"Perturbed {which.value}-flow exceeded {MAX_EVALUATIONS} field evaluations")
        return sys.vector_field(which, z)

    events = None
    if stop_on_exit:
        def leave(_, z):
            return sys.lattice_radius(z) - 2.0 * sys.r_A
        leave.terminal = True
        leave.direction = 1
        events = leave

    speed = float(np.hypot(*sys.vector_field(which, start)))
    max_step = np.inf
    if speed > 0 and _straight_path_enters(sys, which, start, abs(t1 - t0), math.copysign(1.0, t1 - t0)):
        max_step = 0.25 * sys.r_A / speed

    sol = solve_ivp(rhs, (t0, t1), start, method="DOP853", rtol=ODE_RTOL, atol=ODE_RTOL * sys.r_A,
                    max_step=max_step, events=events, dense_output=True)
    if sol.status == -1:
        raise IntegrationFailure(f"Perturbed {which.value}-flow failed: {sol.message}")

    exited = sol.status == 1
    logger.debug(f"{which.value}-flow integrated over {sol.t[-1] - t0:.3e} with {evaluations} evaluations"
                 f"{', left D′' if exited else ''}")
    return FlowPath(sol.t, sol.y.T, float(sol.t[-1]), sol.y[:, -1].copy(), exited, sol.sol)


def _next_entry(sys: EggbeaterSystem, which: Generator, point: np.ndarray, tau: float, sign: float = 1.0):
    """
    First entry of the straight shear path into a copy of D' within flow time tau

    sign = -1 follows the path backwards in time.

    Returns (entry time, entry point) or None.
    """
    if not sys.perturbed or tau <= 0:
        return None
    along, across = (0, 1) if which == Generator.F else (1, 0)
    speed = evaluate(sys.profile, point[across], 1)
    if which == Generator.P:
        speed = -speed
    speed *= sign
    if speed == 0.0:
        return None
    offset = point[across] - round(point[across])
    radius = 2.0 * sys.r_A
    if abs(offset) >= radius:
        return None

    half_chord = math.sqrt(radius ** 2 - offset ** 2)
    pos = point[along]
    if speed > 0:
        centre = math.ceil(pos + half_chord)
        entry = centre - half_chord
    else:
        centre = math.floor(pos - half_chord)
        entry = centre + half_chord
    t_entry = (entry - pos) / speed
    if t_entry < 0 or t_entry > tau:
        return None
    hit = point.copy()
    hit[along] = entry
    return t_entry, hit


def _advance(sys: EggbeaterSystem, which: Generator, point: np.ndarray, tau: float) -> np.ndarray:
    """Flow for time tau >= 0: closed form outside D', ODE inside"""
    remaining = tau
    p = point.copy()
    for _ in range(MAX_DISK_VISITS):
        if remaining <= 0:
            return p
        if sys.inside_d_prime(p):
            path = integrate_perturbed(sys, which, (0.0, remaining), p, stop_on_exit=True)
        else:
            hit = _next_entry(sys, which, p, remaining)
            if hit is None:
                return _shear_array(which, sys.profile, remaining, p)
            t_entry, p = hit
            remaining -= t_entry
            path = integrate_perturbed(sys, which, (0.0, remaining), p, stop_on_exit=True)
        p = path.end_point
        remaining -= path.end_time
        if not path.exited:
            return p
    raise IntegrationFailure(f"{which.value}-flow visited D′ more than {MAX_DISK_VISITS} times")


def _sigma(u):
    return u - np.sin(2.0 * math.pi * u) / (2.0 * math.pi)


def _sigma_prime(u):
    return 1.0 - np.cos(2.0 * math.pi * u)


def _sample_half(sys: EggbeaterSystem, which: Generator, start: np.ndarray, n: int,
                 smooth: bool) -> Tuple[np.ndarray, np.ndarray]:
    """Points and K values on n+1 uniform nodes of one half interval"""
    u = np.linspace(0.0, 1.0, n + 1)
    duration = sys.duration(which)
    tau = duration * (_sigma(u) if smooth else u)
    rate = 2.0 * duration * (_sigma_prime(u) if smooth else np.ones_like(u))

    if _straight_path_enters(sys, which, start, duration):
        points = np.empty((n + 1, 2))
        points[0] = start
        for k in range(n):
            points[k + 1] = _advance(sys, which, points[k], tau[k + 1] - tau[k])
    else:
        points = _shear_array(which, sys.profile, tau, start)
    values = rate * sys.hamiltonian(which, points[:, 0], points[:, 1])
    return points, values


def apply(sys: EggbeaterSystem, l: LiftPoint, samples: int = DEFAULT_SAMPLES,
          smooth: bool = False) -> Tuple[LiftPoint, Trajectory]:
    """
    Apply g to a lift and record its unit-time trajectory

    K_t = 2A F on [0, 1/2) and 2B P on [1/2, 1]; with smooth=True each half
    is reparametrized by sigma(u) = u - sin(2 pi u)/(2 pi) instead. The
    sample count doubles until every lift step is below 0.1.

    Args:
        sys: Eggbeater system
        l: Start point on the lift
        samples: Initial samples per unit time
        smooth: Use the smoothed reparametrization

    Returns:
        (g(l), trajectory)

    Raises:
        IntegrationFailure: Propagated from the perturbed integrator
    """
    start = l.as_array()
    if not np.all(np.isfinite(start)):
        raise InvalidInput("Cannot apply the map to a non-finite point")
    n = max(2, samples // 2)
    n += n % 2  # Simpson needs an even count per half
    while True:
        first, k_first = _sample_half(sys, Generator.F, start, n, smooth)
        second, k_second = _sample_half(sys, Generator.P, first[-1], n, smooth)
        points = np.vstack([first, second[1:]])
        if np.abs(np.diff(points, axis=0)).max() < MAX_SAMPLE_STEP:
            break
        n *= 2

    times = np.concatenate([np.linspace(0.0, 0.5, n + 1), np.linspace(0.5, 1.0, n + 1)[1:]])
    trajectory = Trajectory(times, points, closure_vector(points), k_first, k_second, smooth)
    return LiftPoint.from_array(points[-1]), trajectory


def map_point(sys: EggbeaterSystem, l: LiftPoint) -> LiftPoint:
    """g(l) without recording the trajectory"""
    p = l.as_array()
    for which in (Generator.F, Generator.P):
        p = _advance(sys, which, p, sys.duration(which))
    return LiftPoint.from_array(p)


def _shear_jacobian(sys: EggbeaterSystem, l: LiftPoint) -> np.ndarray:
    h = sys.profile
    x_next = l.x + sys.A * evaluate(h, l.y, 1)
    a = sys.A * evaluate(h, l.y, 2)
    b = sys.B * evaluate(h, x_next, 2)
    return np.array([[1.0, a], [-b, 1.0 - a * b]])


def clear_of_d_prime(sys: EggbeaterSystem, l: LiftPoint) -> bool:
    """Both straight shear paths from l stay strictly outside every copy of D'"""
    radius = 2.0 * sys.r_A + INSIDE_TOLERANCE
    start = l.as_array()
    middle = _shear_array(Generator.F, sys.profile, sys.A, start)
    end = _shear_array(Generator.P, sys.profile, sys.B, middle)
    return segment_lattice_clearance(start, middle) > radius and segment_lattice_clearance(middle, end) > radius


def differential(sys: EggbeaterSystem, l: LiftPoint) -> np.ndarray:
    """
    Dg at l

    Exact chain rule of the two shears for unperturbed systems, and for
    perturbed ones whenever both shear paths keep clear of D' (g agrees
    with the unperturbed map near such l). Otherwise central finite
    differences of map_point with step 1e-6 / sqrt(max(1, |Dg_shear|)).
    """
    shear = _shear_jacobian(sys, l)
    if not sys.perturbed or clear_of_d_prime(sys, l):
        return shear

    step_size = FD_STEP / math.sqrt(max(1.0, np.abs(shear).max()))
    jac = np.empty((2, 2))
    for col, step in enumerate((LiftPoint(step_size, 0.0), LiftPoint(0.0, step_size))):
        plus = map_point(sys, l + step).as_array()
        minus = map_point(sys, l - step).as_array()
        jac[:, col] = (plus - minus) / (2.0 * step_size)
    return jac


def closed_form_det(sys: EggbeaterSystem, l: LiftPoint) -> float:
    """det(Dg - I) = A B h''(x') h''(y) of the unperturbed map"""
    h = sys.profile
    x_next = l.x + sys.A * evaluate(h, l.y, 1)
    return sys.A * sys.B * evaluate(h, x_next, 2) * evaluate(h, l.y, 2)
