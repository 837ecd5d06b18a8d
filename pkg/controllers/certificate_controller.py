import asyncio

from models.eggbeater_models import EggbeaterParams, RunConfig
from services.action_calculator import action_spectrum
from services.certificate_service import certify_nonautonomous
from services.eggbeater_system import build_eggbeater
from services.file_storage_service import FileStorageService
from services.sweep_service import certify_sweep
from services.torus_geometry import IntVec2
from utils.errors import EggbeaterError, InvalidInput
from utils.logger import setup_logger

logger = setup_logger(__name__)

SPECTRUM_COLUMNS = ["class_m", "class_n", "point_x", "point_y", "wrap", "action", "delta", "nondeg_det"]


def _system(config: RunConfig):
    return build_eggbeater(EggbeaterParams(A=config.A, B=config.B, perturbed=config.perturbed), mode=config.mode)


def write_spectrum(config: RunConfig) -> int:
    """Wrap-0 action spectrum of one class, written to spectrum.csv"""
    try:
        sys = _system(config)
        c = IntVec2(*config.homotopy_class)
        spectrum = action_spectrum(sys, c, samples=config.samples)
        rows = [
            [c.m, c.n, o.lift.x, o.lift.y, v.wrap, v.value, v.delta, o.det_dg_minus_id]
            for o, v in zip(spectrum.orbits, spectrum.values)
        ]
        FileStorageService(config.output_dir).write_csv("spectrum.csv", SPECTRUM_COLUMNS, rows)
        logger.info(f"[OK] Spectrum of class {c} written ({len(rows)} values)")
        return 0

    except EggbeaterError:
        raise
    except Exception as e:
        logger.error(f"Error computing spectrum: {e}")
        raise EggbeaterError(f"Internal error while computing the spectrum: {e}")


def write_certificate(config: RunConfig) -> int:
    """
    Non-autonomy certificate for one A, written to certificate.json

    Returns:
        Exit code 0 when the certificate is issued

    Raises:
        InvalidParams: A out of range for the mode (exit 2)
        CertificateUnavailable: Missing orbits or witness (exit 3)
    """
    try:
        certificate = certify_nonautonomous(_system(config), samples=config.samples)
        FileStorageService(config.output_dir).write_json("certificate.json", certificate.to_document())
        return 0

    except EggbeaterError:
        raise
    except Exception as e:
        logger.error(f"Error certifying A={config.A}: {e}")
        raise EggbeaterError(f"Internal error while certifying: {e}")


def certificate_name(A: float) -> str:
    return f"certificate_A{A:g}.json"


def write_sweep(config: RunConfig) -> int:
    """
    One certificate per A plus summary.csv (A, lower, upper)

    Returns:
        0 if every certificate was issued, otherwise the largest failure exit code
    """
    if not config.a_list:
        raise InvalidInput("sweep needs a non-empty --A-list")
    try:
        result = asyncio.run(certify_sweep(config.a_list, config.mode, config.perturbed, config.samples))

        storage = FileStorageService(config.output_dir)
        for a, certificate in sorted(result.certificates.items()):
            storage.write_json(certificate_name(a), certificate.to_document())
        storage.write_csv("summary.csv", ["A", "lower", "upper"],
                          [[row.A, row.lower, row.upper] for row in result.summary()])
        return result.exit_code

    except EggbeaterError:
        raise
    except Exception as e:
        logger.error(f"Error running sweep: {e}")
        raise EggbeaterError(f"Internal error while running the sweep: {e}")
