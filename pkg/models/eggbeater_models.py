from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SurfaceMode(str, Enum):
    """Capping bookkeeping mode"""
    SURFACE = "surface"  # unique capping class, total area 1
    TORUS = "torus"  # area form (1 + rho) dx^dy, total area 2


class ProfileConfig(BaseModel):
    """Blend settings for the profile h"""
    model_config = ConfigDict(frozen=True)

    blend_degree: int = 5
    subdivide: bool = True  # split a failing gap once before giving up


class EggbeaterParams(BaseModel):
    """Parameters of g_A = Psi_B o Phi_A"""
    model_config = ConfigDict(frozen=True)

    A: float
    B: Optional[float] = None  # defaults to 2A
    r_A: Optional[float] = None  # defaults to 1/(2000A)
    perturbed: bool = False

    @model_validator(mode="before")
    @classmethod
    def fill_defaults(cls, data):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        a = data.get("A")
        if isinstance(a, (int, float)) and a > 0:
            if data.get("B") is None:
                data["B"] = 2.0 * a
            if data.get("r_A") is None:
                data["r_A"] = 1.0 / (2000.0 * a)
        return data


class CheckResult(BaseModel):
    """Outcome of a single profile check"""
    name: str
    passed: bool
    detail: str = ""


class ValidationReport(BaseModel):
    """Pass/fail list for every profile invariant"""
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def get(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)


class RunConfig(BaseModel):
    """Validated CLI run configuration"""
    model_config = ConfigDict(frozen=True)

    A: Optional[float] = None
    B: Optional[float] = None
    mode: SurfaceMode = SurfaceMode.SURFACE
    perturbed: bool = False
    output_dir: Path = Path(".")
    samples: int = Field(256, ge=16)  # trajectory samples per unit time
    resolution: int = Field(1001, ge=2)  # profile/figure table rows
    homotopy_class: Tuple[int, int] = (1, 0)
    a_list: Tuple[float, ...] = ()
    trajectories: bool = False
