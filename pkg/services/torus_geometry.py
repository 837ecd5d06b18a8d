import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from utils.errors import BrokenLift, InvalidInput
from utils.logger import setup_logger

logger = setup_logger(__name__)

WINDING_TOLERANCE = 1e-9
MAX_LIFT_STEP = 0.5
MERGE_TOLERANCE = 1e-12
CHUNK_SIZE = 128


@dataclass(frozen=True)
class TorusPoint:
    """Point of T^2 in fundamental-domain coordinates [0,1)^2"""
    x: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class IntVec2:
    """Integer winding vector (free homotopy class on T^2)"""
    m: int
    n: int

    def __iter__(self) -> Iterator[int]:
        return iter((self.m, self.n))

    def as_array(self) -> np.ndarray:
        return np.array([self.m, self.n], dtype=float)

    @property
    def is_zero(self) -> bool:
        return self.m == 0 and self.n == 0

    def __str__(self) -> str:
        return f"({self.m},{self.n})"


@dataclass(frozen=True)
class LiftPoint:
    """Point of the universal cover R^2"""
    x: float
    y: float

    def __add__(self, other) -> "LiftPoint":
        if isinstance(other, IntVec2):
            return LiftPoint(self.x + other.m, self.y + other.n)
        if isinstance(other, LiftPoint):
            return LiftPoint(self.x + other.x, self.y + other.y)
        return NotImplemented

    def __sub__(self, other: "LiftPoint") -> "LiftPoint":
        return LiftPoint(self.x - other.x, self.y - other.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @classmethod
    def from_array(cls, a) -> "LiftPoint":
        return cls(float(a[0]), float(a[1]))


@dataclass(frozen=True)
class Loop:
    """
    Sampled 1-periodic path with a continuous lift

    Samples are piecewise-linear in the lift. `points[-1] - points[0]` is
    expected to be an integer vector; that is checked by winding_vector(),
    not here, so open paths can be carried around as well.
    """
    times: np.ndarray
    points: np.ndarray
    closure_winding: IntVec2

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        points = np.asarray(self.points, dtype=float)
        if times.ndim != 1 or points.shape != (times.size, 2):
            raise InvalidInput(f"Loop needs matching (N,) times and (N,2) points, got {times.shape} and {points.shape}")
        if times.size < 2:
            raise InvalidInput("Loop needs at least two samples")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(points))):
            raise InvalidInput("Loop samples must be finite")
        if times[0] != 0.0 or times[-1] != 1.0 or np.any(np.diff(times) <= 0):
            raise InvalidInput("Loop times must increase strictly from 0 to 1")

        step = np.abs(np.diff(points, axis=0)).max()
        if step >= MAX_LIFT_STEP:
            raise BrokenLift(f"Lift jumps by {step:.3g} between consecutive samples")

        times.setflags(write=False)
        points.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)

    @classmethod
    def from_samples(cls, times, points) -> "Loop":
        """Build a loop, reading closure_winding off the endpoint displacement"""
        points = np.asarray(points, dtype=float)
        return cls(times, points, closure_vector(points))

    @property
    def start(self) -> LiftPoint:
        return LiftPoint.from_array(self.points[0])

    @property
    def end(self) -> LiftPoint:
        return LiftPoint.from_array(self.points[-1])

    def at(self, t) -> np.ndarray:
        """Lift position at time(s) t in [0,1] by linear interpolation"""
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, self.times, self.points[:, 0]),
                         np.interp(t, self.times, self.points[:, 1])], axis=-1)

    def max_step(self) -> float:
        return float(np.abs(np.diff(self.points, axis=0)).max())


def closure_vector(points: np.ndarray) -> IntVec2:
    disp = points[-1] - points[0]
    return IntVec2(int(round(disp[0])), int(round(disp[1])))


def reduce(l: LiftPoint) -> TorusPoint:
    """
    Project a lift onto the fundamental domain

    Raises:
        InvalidInput: If a coordinate is not finite
    """
    if not (math.isfinite(l.x) and math.isfinite(l.y)):
        raise InvalidInput(f"Cannot reduce non-finite point ({l.x}, {l.y})")
    x, y = reduce_array(np.array([l.x, l.y]))
    return TorusPoint(float(x), float(y))


def reduce_array(a: np.ndarray) -> np.ndarray:
    r = np.mod(a, 1.0)
    # np.mod of a tiny negative number rounds up to 1.0
    return np.where(r >= 1.0, 0.0, r)


def torus_distance(p: np.ndarray, q: np.ndarray) -> float:
    d = np.abs(reduce_array(np.asarray(p)) - reduce_array(np.asarray(q)))
    d = np.minimum(d, 1.0 - d)
    return float(np.hypot(d[0], d[1]))


def winding_vector(loop: Loop) -> IntVec2:
    """
    Integer displacement of the lift over one period

    Raises:
        BrokenLift: If lift(1) - lift(0) is not an integer vector
    """
    disp = loop.points[-1] - loop.points[0]
    residual = np.abs(disp - np.round(disp)).max()
    if residual >= WINDING_TOLERANCE:
        raise BrokenLift(f"Loop does not close up: rounding residual {residual:.3e}")
    return IntVec2(int(round(disp[0])), int(round(disp[1])))


def intersection_number(c1: IntVec2, c2: IntVec2) -> int:
    return c1.m * c2.n - c1.n * c2.m


def gamma_alpha(samples: int = 256) -> Loop:
    """Reference loop t -> (t, 0.5)"""
    t = np.linspace(0.0, 1.0, samples + 1)
    return Loop(t, np.column_stack([t, np.full_like(t, 0.5)]), IntVec2(1, 0))


def gamma_beta(samples: int = 256) -> Loop:
    """Reference loop t -> (0.5, t)"""
    t = np.linspace(0.0, 1.0, samples + 1)
    return Loop(t, np.column_stack([np.full_like(t, 0.5), t]), IntVec2(0, 1))


def straight_loop(c: IntVec2, offset: Tuple[float, float], samples: int = 256) -> Loop:
    """Uniformly parametrized straight loop t -> offset + t*c"""
    span = max(abs(c.m), abs(c.n))
    # keep every lift step below 0.1
    samples = max(samples, 16 * span)
    t = np.linspace(0.0, 1.0, samples + 1)
    points = np.column_stack([offset[0] + t * c.m, offset[1] + t * c.n])
    return Loop(t, points, c)


def lattice_free_offset(c: IntVec2) -> Tuple[float, float]:
    """
    Base point for a straight representative of c missing every lattice point

    The line through (x0, y0) with direction (m, n) meets Z^2 iff
    n*x0 - m*y0 lies in gcd(m,n)*Z; a half-integer value avoids that.
    """
    m, n = c.m, c.n
    if (n - m) % 2:
        return 0.5, 0.5
    if m != 0:
        return 0.5, 0.5 + 1.0 / (2 * abs(m))
    return 0.5 + 1.0 / (2 * abs(n)), 0.5


def reference_loop(c: IntVec2, samples: int = 256) -> Loop:
    """Canonical reference loop for a non-contractible class"""
    if c.is_zero:
        raise InvalidInput("Contractible class has no reference loop")
    if c == IntVec2(1, 0):
        return gamma_alpha(samples)
    if c == IntVec2(0, 1):
        return gamma_beta(samples)
    return straight_loop(c, lattice_free_offset(c), samples)


def _segments(loop: Loop) -> Tuple[np.ndarray, np.ndarray]:
    """Start/end arrays of the loop's lifted segments, zero-length ones merged"""
    pts = loop.points
    keep = np.ones(len(pts), dtype=bool)
    last = pts[0]
    for i in range(1, len(pts)):
        if np.abs(pts[i] - last).max() < MERGE_TOLERANCE:
            keep[i] = False
        else:
            last = pts[i]
    pts = pts[keep]
    if len(pts) < 2:
        raise InvalidInput("Loop degenerates to a single point; no segments to intersect")
    return pts[:-1], pts[1:]


def _orient(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def _crossings(p1, p2, q1, q2) -> np.ndarray:
    """Boolean matrix of closed-segment intersections, p-segments by q-segments"""
    P1, P2 = p1[:, None, :], p2[:, None, :]
    Q1, Q2 = q1[None, :, :], q2[None, :, :]
    o1 = _orient(P1, P2, Q1)
    o2 = _orient(P1, P2, Q2)
    o3 = _orient(Q1, Q2, P1)
    o4 = _orient(Q1, Q2, P2)

    # bounding boxes must overlap; this also settles the collinear case
    boxes = (
        (np.minimum(P1[..., 0], P2[..., 0]) <= np.maximum(Q1[..., 0], Q2[..., 0]))
        & (np.minimum(Q1[..., 0], Q2[..., 0]) <= np.maximum(P1[..., 0], P2[..., 0]))
        & (np.minimum(P1[..., 1], P2[..., 1]) <= np.maximum(Q1[..., 1], Q2[..., 1]))
        & (np.minimum(Q1[..., 1], Q2[..., 1]) <= np.maximum(P1[..., 1], P2[..., 1]))
    )
    return boxes & (o1 * o2 <= 0) & (o3 * o4 <= 0)


def _crossing_point(a1, a2, b1, b2) -> np.ndarray:
    r = a2 - a1
    s = b2 - b1
    denom = r[0] * s[1] - r[1] * s[0]
    if denom == 0.0:
        # collinear overlap: an endpoint of one segment lies on the other
        lo, hi = np.minimum(a1, a2), np.maximum(a1, a2)
        if np.all(b1 >= lo) and np.all(b1 <= hi):
            return b1
        return a1
    v = b1 - a1
    u = (v[0] * s[1] - v[1] * s[0]) / denom
    return a1 + u * r


def loops_intersect(l1: Loop, l2: Loop) -> Optional[TorusPoint]:
    """
    Search for a crossing of two loops on the torus

    Every integer translate of l2 whose bounding box meets the bounding box
    of l1 is tested against l1 segment by segment.

    Args:
        l1: First loop
        l2: Second loop

    Returns:
        One crossing point reduced to [0,1)^2, or None if the loops are disjoint

    Raises:
        InvalidInput: If a loop has no segment of positive length
    """
    a1, a2 = _segments(l1)
    b1, b2 = _segments(l2)

    lo1 = np.minimum(a1, a2).min(axis=0)
    hi1 = np.maximum(a1, a2).max(axis=0)
    lo2 = np.minimum(b1, b2).min(axis=0)
    hi2 = np.maximum(b1, b2).max(axis=0)
    zx = range(int(math.ceil(lo1[0] - hi2[0])), int(math.floor(hi1[0] - lo2[0])) + 1)
    zy = range(int(math.ceil(lo1[1] - hi2[1])), int(math.floor(hi1[1] - lo2[1])) + 1)

    b_lo = np.minimum(b1, b2)
    b_hi = np.maximum(b1, b2)
    for start in range(0, len(a1), CHUNK_SIZE):
        p1 = a1[start:start + CHUNK_SIZE]
        p2 = a2[start:start + CHUNK_SIZE]
        c_lo = np.minimum(p1, p2).min(axis=0)
        c_hi = np.maximum(p1, p2).max(axis=0)
        for dx in zx:
            for dy in zy:
                z = np.array([dx, dy], dtype=float)
                near = np.all(b_lo + z <= c_hi, axis=1) & np.all(b_hi + z >= c_lo, axis=1)
                if not near.any():
                    continue
                idx = np.flatnonzero(near)
                q1 = b1[idx] + z
                q2 = b2[idx] + z
                hits = np.argwhere(_crossings(p1, p2, q1, q2))
                if len(hits):
                    i, j = hits[0]
                    point = _crossing_point(p1[i], p2[i], q1[j], q2[j])
                    witness = reduce(LiftPoint.from_array(point))
                    logger.debug(f"Loops cross at ({witness.x:.6g}, {witness.y:.6g}) with translate ({dx},{dy})")
                    return witness
    return None


def winding_about(polygon: np.ndarray, z: np.ndarray) -> int:
    """
    Winding number of a closed polygon around z

    Counts signed crossings of the ray from z towards +x; upward crossings
    count +1, downward -1. The polygon is closed implicitly.
    """
    x = polygon[:, 0] - z[0]
    y = polygon[:, 1] - z[1]
    x0, y0 = x, y
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    up = (y0 < 0) & (y1 >= 0)
    down = (y0 >= 0) & (y1 < 0)
    crossing = up | down
    with np.errstate(divide="ignore", invalid="ignore"):
        cross_x = (x0 * y1 - x1 * y0) / (y1 - y0)
    right = crossing & (cross_x > 0)
    return int(np.count_nonzero(right & up) - np.count_nonzero(right & down))


def lattice_degree(polygon: np.ndarray) -> int:
    """Sum of winding numbers of a closed polygon around every point of Z^2"""
    lo = np.floor(polygon.min(axis=0)).astype(int)
    hi = np.ceil(polygon.max(axis=0)).astype(int)
    total = 0
    for i in range(lo[0], hi[0] + 1):
        for j in range(lo[1], hi[1] + 1):
            total += winding_about(polygon, np.array([i, j], dtype=float))
    return total


def segment_lattice_clearance(a: np.ndarray, b: np.ndarray) -> float:
    """Distance from segment [a, b] to the nearest lattice point"""
    lo = np.floor(np.minimum(a, b)).astype(int) - 1
    hi = np.ceil(np.maximum(a, b)).astype(int) + 1
    gx, gy = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1))
    z = np.column_stack([gx.ravel(), gy.ravel()]).astype(float)
    d = b - a
    dd = float(d @ d)
    if dd == 0.0:
        return float(np.hypot(*(z - a).T).min())
    u = np.clip(((z - a) @ d) / dd, 0.0, 1.0)
    foot = a + u[:, None] * d
    return float(np.hypot(*(z - foot).T).min())
