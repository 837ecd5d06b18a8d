from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from models.eggbeater_models import SurfaceMode


class OrbitRecord(BaseModel):
    """One periodic orbit inside a certificate"""
    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    action: float
    delta: Optional[float] = None  # only for the classes (1,0) and (0,1)
    nondeg_det: float


class ClassRecord(BaseModel):
    """Per-class certificate data"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    homotopy_class: Tuple[int, int] = Field(alias="class")
    orbits: List[OrbitRecord]
    min_gap: float


class WitnessRecord(BaseModel):
    """Crossing point of two trajectories on the torus"""
    model_config = ConfigDict(frozen=True)

    x: float
    y: float


class HoferCertificate(BaseModel):
    """
    Non-autonomy certificate with Hofer-distance bounds

    Serialized field set and order are fixed; see to_document().
    """
    model_config = ConfigDict(frozen=True)

    A: float
    B: float
    mode: SurfaceMode
    classes: List[ClassRecord]
    paper_lower_bound: float
    enumerated_lower_bound: float
    upper_bound: float
    witness: WitnessRecord
    assumptions: List[str]

    def to_document(self) -> dict:
        """Plain dict with the exact JSON field names"""
        return self.model_dump(mode="json", by_alias=True)

    @property
    def sharpness_window(self) -> float:
        return self.upper_bound - self.paper_lower_bound


class SummaryRow(BaseModel):
    """One row of summary.csv"""
    A: float
    lower: float
    upper: float
