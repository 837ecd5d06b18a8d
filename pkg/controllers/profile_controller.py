from services.file_storage_service import FileStorageService
from services.profile_builder import build_profile, profile_table, validate
from models.eggbeater_models import ProfileConfig, RunConfig
from utils.errors import EggbeaterError, InvalidProfile
from utils.logger import setup_logger

logger = setup_logger(__name__)


def write_profile(config: RunConfig) -> int:
    """
    Tabulate h, h' and h'' on a uniform grid of [0, 1]

    Writes profile.csv with columns t,h,h1,h2.

    Returns:
        Exit code 0

    Raises:
        InvalidProfile: If the built profile fails a check
        EggbeaterError: On unexpected failures (exit 4)
    """
    try:
        h = build_profile(ProfileConfig())
        report = validate(h)
        if not report.passed:
            raise InvalidProfile("Profile checks failed: " + ", ".join(c.name for c in report.failed()))

        storage = FileStorageService(config.output_dir)
        storage.write_csv("profile.csv", ["t", "h", "h1", "h2"], profile_table(h, config.resolution).tolist())
        logger.info(f"[OK] Profile tabulated on {config.resolution} points")
        return 0

    except EggbeaterError:
        raise
    except Exception as e:
        logger.error(f"Error tabulating profile: {e}")
        raise EggbeaterError(f"Internal error while tabulating the profile: {e}")


def write_figure_data(config: RunConfig) -> int:
    """Plot columns of the profile figure: figure.csv with t,h,h1"""
    try:
        h = build_profile(ProfileConfig())
        storage = FileStorageService(config.output_dir)
        rows = profile_table(h, config.resolution, orders=(0, 1)).tolist()
        storage.write_csv("figure.csv", ["t", "h", "h1"], rows)
        logger.info(f"[OK] Figure data written ({len(rows)} rows)")
        return 0

    except EggbeaterError:
        raise
    except Exception as e:
        logger.error(f"Error writing figure data: {e}")
        raise EggbeaterError(f"Internal error while writing figure data: {e}")
