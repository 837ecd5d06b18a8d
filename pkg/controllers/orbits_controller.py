from models.eggbeater_models import EggbeaterParams, RunConfig
from services.eggbeater_system import build_eggbeater
from services.file_storage_service import FileStorageService
from services.orbit_finder import find_periodic_points
from services.torus_geometry import IntVec2
from utils.errors import EggbeaterError
from utils.logger import setup_logger

logger = setup_logger(__name__)

ORBIT_COLUMNS = ["class_m", "class_n", "x", "y", "nondeg_det", "nondegenerate"]


def write_orbits(config: RunConfig) -> int:
    """
    Periodic points of g_A in one class

    Writes orbits.csv, plus trajectories.csv (orbit,t,x,y on the lift)
    when trajectories are requested.

    Returns:
        Exit code 0 (an empty table is a valid result)
    """
    try:
        sys = build_eggbeater(EggbeaterParams(A=config.A, B=config.B, perturbed=config.perturbed), mode=config.mode)
        c = IntVec2(*config.homotopy_class)
        orbits = find_periodic_points(sys, c, config.samples)

        storage = FileStorageService(config.output_dir)
        storage.write_csv("orbits.csv", ORBIT_COLUMNS, [
            [c.m, c.n, o.lift.x, o.lift.y, o.det_dg_minus_id, o.nondegenerate] for o in orbits
        ])
        if config.trajectories:
            rows = []
            for index, o in enumerate(orbits):
                for t, (x, y) in zip(o.trajectory.times, o.trajectory.points):
                    rows.append([index, float(t), float(x), float(y)])
            storage.write_csv("trajectories.csv", ["orbit", "t", "x", "y"], rows)

        logger.info(f"[OK] {len(orbits)} orbits in class {c} written")
        return 0

    except EggbeaterError:
        raise
    except Exception as e:
        logger.error(f"Error finding orbits: {e}")
        raise EggbeaterError(f"Internal error while finding orbits: {e}")
