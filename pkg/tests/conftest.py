from functools import lru_cache

import pytest

from models.eggbeater_models import EggbeaterParams, SurfaceMode
from services.eggbeater_system import build_eggbeater
from services.profile_builder import default_profile
from services.torus_geometry import gamma_alpha, gamma_beta


@lru_cache(maxsize=None)
def cached_system(A: float, mode: SurfaceMode = SurfaceMode.SURFACE, perturbed: bool = False):
    return build_eggbeater(EggbeaterParams(A=A, perturbed=perturbed), mode=mode)


@pytest.fixture(scope="session")
def profile():
    return default_profile()


@pytest.fixture(scope="session")
def system():
    """Factory for cached systems keyed by (A, mode, perturbed)"""
    return cached_system


@pytest.fixture(scope="session")
def sys10():
    return cached_system(10.0)


@pytest.fixture(scope="session")
def torus10():
    return cached_system(10.0, SurfaceMode.TORUS)


@pytest.fixture(scope="session")
def ref_alpha():
    return gamma_alpha()


@pytest.fixture(scope="session")
def ref_beta():
    return gamma_beta()
