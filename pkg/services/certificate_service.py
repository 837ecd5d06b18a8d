import itertools
import math
from typing import List, Optional, Sequence

import numpy as np

from models.certificate_models import ClassRecord, HoferCertificate, OrbitRecord, WitnessRecord
from models.eggbeater_models import SurfaceMode
from services.action_calculator import ActionSpectrum, action_spectrum
from services.eggbeater_system import DEFAULT_SAMPLES, EggbeaterSystem, Generator, SurfaceModel
from services.torus_geometry import IntVec2, intersection_number, loops_intersect
from utils.errors import (
    CertificateUnavailable, IncompleteEnumeration, InsufficientSpectrum, InvalidInput, InvalidParams,
)
from utils.logger import setup_logger

logger = setup_logger(__name__)

CERTIFIED_CLASSES = (IntVec2(1, 0), IntVec2(0, 1))
UPPER_BOUND_GRID = 2048
ENUMERATION_TOLERANCE = 1e-12

ASSUMPTIONS = [
    "almost complex structure J_t is generic and the Floer data are regular",
    "Floer cylinders between orbits of equal Conley-Zehnder index are excluded by genericity (recorded, not used)",
    "action quadrature tolerance 1e-9",
]


def min_action_gap(values: Sequence[float]) -> float:
    """
    Minimum of |a_i - a_j| over i != j

    Raises:
        InsufficientSpectrum: With fewer than two values
    """
    if isinstance(values, ActionSpectrum):
        values = values.actions
    a = np.sort(np.asarray(values, dtype=float))
    if a.size < 2:
        raise InsufficientSpectrum(f"Need at least two action values, got {a.size}")
    return float(np.diff(a).min())


def paper_lower_bound(A: float, mode: SurfaceMode) -> float:
    """2A - 2 for the surface model, A/2 - 1 for the torus model"""
    if not math.isfinite(A):
        raise InvalidParams(f"A must be finite, got {A}")
    if mode == SurfaceMode.TORUS:
        if A <= 2:
            raise InvalidParams(f"A must exceed 2 in torus mode, got {A:g}")
        return A / 2.0 - 1.0
    if A <= 1:
        raise InvalidParams(f"A must exceed 1 in surface mode, got {A:g}")
    return 2.0 * A - 2.0


def enumerated_lower_bound(base: Sequence[float], area_DA: float, delta_radius: float = 1.0,
                           shift: float = 2.0, k_max: Optional[int] = None) -> float:
    """
    Energy lower bound over every admissible (pair, wrap) configuration

    A cylinder from orbit i to orbit j with wrap k >= 0 has energy at least
    d + shift*k - 2*delta_radius and, for k >= 1, at least k*area_DA, where
    d = a_i - a_j. Only configurations whose energy can be positive count.

    Args:
        base: Base action levels (e.g. {3A, A, -A, -3A} or computed actions)
        area_DA: Area of D_A in the torus model, must exceed 1
        delta_radius: Uncertainty radius of each level
        shift: Action shift per unit wrap
        k_max: Largest wrap; defaults to ceil(max(base) - min(base)). 0 disallows wraps.

    Returns:
        Minimum energy bound

    Raises:
        InvalidInput: If area_DA <= 1 or the spectrum is too small
        IncompleteEnumeration: If wraps beyond k_max could still lower the bound
    """
    levels = np.asarray(base, dtype=float)
    if levels.size < 2:
        raise InsufficientSpectrum(f"Need at least two base levels, got {levels.size}")
    if not area_DA > 1.0:
        raise InvalidInput(f"area_DA must exceed 1, got {area_DA}")
    if k_max is None:
        k_max = int(math.ceil(levels.max() - levels.min()))
    if k_max < 0:
        raise InvalidInput(f"k_max must be non-negative, got {k_max}")

    k = np.arange(k_max + 1, dtype=float)
    d = np.array([levels[i] - levels[j] for i, j in itertools.permutations(range(levels.size), 2)])
    floor = d[:, None] + shift * k[None, :]
    energy = np.maximum(floor - 2.0 * delta_radius, np.where(k >= 1, k * area_DA, -np.inf)[None, :])
    energy = np.where(floor + 2.0 * delta_radius > 0, energy, np.inf)

    per_k = energy.min(axis=0)
    best = float(per_k.min())
    if not math.isfinite(best):
        raise IncompleteEnumeration(f"No admissible configuration with wraps up to {k_max}")
    if k_max >= 1 and (k_max + 1) * area_DA < best:
        raise IncompleteEnumeration(
            f"Wraps beyond {k_max} may still lower the bound {best:.6g}; raise k_max")
    if k_max >= 1 and per_k[-1] < per_k[-2] - ENUMERATION_TOLERANCE:
        logger.warning(f"Per-wrap minimum still decreasing at k_max={k_max}")
    logger.debug(f"Enumerated bound {best:.12g} over {d.size} pairs and wraps 0..{k_max}")
    return best


def hofer_upper_bound(sys: EggbeaterSystem, resolution: int = UPPER_BOUND_GRID) -> float:
    """A * (max F - min F), the Hofer length of the first factor flow, on a grid"""
    t = np.arange(resolution) / resolution
    x, y = np.meshgrid(t, t, indexing="ij")
    values = sys.hamiltonian(Generator.F, x, y)
    return float(sys.A * (values.max() - values.min()))


def _class_record(spectrum: ActionSpectrum) -> ClassRecord:
    orbits = [
        OrbitRecord(x=o.lift.x, y=o.lift.y, action=v.value, delta=v.delta, nondeg_det=o.det_dg_minus_id)
        for o, v in zip(spectrum.orbits, spectrum.values)
    ]
    return ClassRecord(homotopy_class=tuple(spectrum.homotopy_class), orbits=orbits,
                       min_gap=min_action_gap(spectrum.actions))


def certified_bound(classes: List[ClassRecord], mode: SurfaceMode, area_DA: float,
                    total_area: float) -> float:
    """
    Bound recomputed from serialized class data

    Surface model: smallest min_gap over the classes. Torus model: wrap
    enumeration over each class's actions with zero uncertainty radius.
    """
    if mode == SurfaceMode.SURFACE:
        return min(record.min_gap for record in classes)
    return min(
        enumerated_lower_bound([o.action for o in record.orbits], area_DA, delta_radius=0.0, shift=total_area)
        for record in classes
    )


def certify_nonautonomous(sys: EggbeaterSystem, model: Optional[SurfaceModel] = None,
                          samples: int = DEFAULT_SAMPLES) -> HoferCertificate:
    """
    Full non-autonomy certificate for the classes (1,0) and (0,1)

    Args:
        sys: Eggbeater system
        model: Surface model; the system's when omitted
        samples: Initial trajectory samples per unit time

    Returns:
        HoferCertificate

    Raises:
        InvalidParams: If A is out of range for the model
        CertificateUnavailable: If a class has no (non-degenerate) orbit or no witness is found
    """
    model = model or sys.model
    closed_form = paper_lower_bound(sys.A, model.mode)
    alpha, beta = CERTIFIED_CLASSES
    if intersection_number(alpha, beta) == 0:
        raise CertificateUnavailable(f"Classes {alpha} and {beta} have zero intersection number")

    logger.info("=" * 60)
    logger.info(f"Certifying A={sys.A:g} in {model.mode.value} mode")
    logger.info("=" * 60)

    spectra = []
    assumptions = list(ASSUMPTIONS)
    for c in CERTIFIED_CLASSES:
        spectrum = action_spectrum(sys, c, model, samples)
        if not spectrum.orbits:
            raise CertificateUnavailable(f"No periodic orbit in class {c}")
        if not any(o.nondegenerate for o in spectrum.orbits):
            raise CertificateUnavailable(f"Every orbit in class {c} is degenerate")
        for o in spectrum.orbits:
            if not o.nondegenerate:
                assumptions.append(f"degenerate orbit at ({o.lift.x:.17g}, {o.lift.y:.17g}) in class {c}")
        spectra.append(spectrum)
        logger.info(f"[OK] Class {c}: {len(spectrum.orbits)} orbits")

    first = [next(o for o in s.orbits if o.nondegenerate) for s in spectra]
    witness = loops_intersect(first[0].trajectory, first[1].trajectory)
    if witness is None:
        raise CertificateUnavailable("Trajectories of the two classes do not cross")
    logger.info(f"[OK] Intersection witness at ({witness.x:.6g}, {witness.y:.6g})")

    classes = [_class_record(s) for s in spectra]
    enumerated = certified_bound(classes, model.mode, model.area_DA, model.total_area)
    upper = hofer_upper_bound(sys)
    if enumerated < closed_form - 1e-9:
        logger.warning(f"Computed bound {enumerated:.12g} is below the closed-form bound {closed_form:.12g}")
    if upper < enumerated:
        logger.warning(f"Upper bound {upper:.12g} is below the lower bound {enumerated:.12g}")

    certificate = HoferCertificate(
        A=sys.A,
        B=sys.B,
        mode=model.mode,
        classes=classes,
        paper_lower_bound=closed_form,
        enumerated_lower_bound=enumerated,
        upper_bound=upper,
        witness=WitnessRecord(x=witness.x, y=witness.y),
        assumptions=assumptions,
    )
    logger.info(f"[OK] Lower bound {closed_form:g} (closed form), {enumerated:.6g} (computed), "
                f"upper bound {upper:.6g}, window {certificate.sharpness_window:.6g}")
    return certificate
