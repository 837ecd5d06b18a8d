import asyncio
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from typing import Dict, List, Sequence

from models.certificate_models import HoferCertificate, SummaryRow
from models.eggbeater_models import EggbeaterParams, SurfaceMode
from services.certificate_service import certify_nonautonomous
from services.eggbeater_system import DEFAULT_SAMPLES, build_eggbeater
from utils.errors import EggbeaterError
from utils.logger import setup_logger

logger = setup_logger(__name__)


def worker_count() -> int:
    """Thread cap from EGGBEATER_THREADS, defaulting to the CPU count"""
    raw = os.getenv("EGGBEATER_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning(f"Ignoring non-integer EGGBEATER_THREADS={raw!r}")
    return max(1, os.cpu_count() or 1)


@dataclass
class SweepResult:
    """Outcome of a sweep: certificates by A and failures by A"""
    certificates: Dict[float, HoferCertificate]
    failures: Dict[float, EggbeaterError]

    def summary(self) -> List[SummaryRow]:
        return [
            SummaryRow(A=a, lower=cert.enumerated_lower_bound, upper=cert.upper_bound)
            for a, cert in sorted(self.certificates.items())
        ]

    @property
    def exit_code(self) -> int:
        return max((e.exit_code for e in self.failures.values()), default=0)


def certify_one(A: float, mode: SurfaceMode, perturbed: bool = False,
                samples: int = DEFAULT_SAMPLES) -> HoferCertificate:
    """Build the system for one A and certify it"""
    sys = build_eggbeater(EggbeaterParams(A=A, perturbed=perturbed), mode=mode)
    return certify_nonautonomous(sys, samples=samples)


async def certify_sweep(a_list: Sequence[float], mode: SurfaceMode, perturbed: bool = False,
                        samples: int = DEFAULT_SAMPLES) -> SweepResult:
    """
    Certificates for every A in parallel

    Features:
    - One worker thread per A, capped by EGGBEATER_THREADS
    - Partial failure handling (one A failing doesn't affect others)
    - Results keyed by A so output order is independent of completion order
    """
    logger.info("=" * 60)
    logger.info(f"Starting certificate sweep over A = {list(a_list)} ({mode.value})")
    logger.info("=" * 60)

    start_time = datetime.now()
    loop = asyncio.get_running_loop()
    values = sorted(set(a_list))
    with ThreadPoolExecutor(max_workers=worker_count()) as executor:
        tasks = [loop.run_in_executor(executor, certify_one, a, mode, perturbed, samples) for a in values]
        results = await asyncio.gather(*tasks, return_exceptions=True)

    certificates: Dict[float, HoferCertificate] = {}
    failures: Dict[float, EggbeaterError] = {}
    for a, result in zip(values, results):
        if isinstance(result, EggbeaterError):
            logger.error(f"Failed to certify A={a:g}: {result.detail}")
            failures[a] = result
        elif isinstance(result, Exception):
            logger.error(f"Unexpected error certifying A={a:g}: {result}")
            failures[a] = EggbeaterError(str(result))
        else:
            certificates[a] = result
            logger.info(f"Certified A={a:g}: lower {result.enumerated_lower_bound:.6g}, upper {result.upper_bound:.6g}")

    sweep = SweepResult(certificates, failures)
    lowers = [row.lower for row in sweep.summary()]
    if any(b <= a for a, b in zip(lowers, lowers[1:])):
        logger.warning("Lower bounds are not strictly increasing in A")

    duration = (datetime.now() - start_time).total_seconds()
    logger.info("=" * 60)
    logger.info(f"Sweep complete in {duration:.2f}s")
    logger.info(f"Certificates issued: {len(certificates)}/{len(values)}")
    logger.info("=" * 60)
    return sweep
