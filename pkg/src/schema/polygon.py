import enum

from pydantic import BaseModel, ConfigDict

from .population import CellClassifier

Point = tuple[float, float]


class SwapType(enum.Enum):
    DESELECT_GROUP_1_POSITIVES = "a"
    SELECT_GROUP_2_NEGATIVES = "d"


class FeasiblePolygon(BaseModel):
    """Convex hull of the achievable (delta, utility) pairs, counterclockwise."""

    model_config = ConfigDict(frozen=True)

    vertices: list[Point]
    lam: float


class FrontierSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta_star: float
    u_star: float
    u_f: float
    min_ratio: float
    swap: SwapType | None  # None when base rates are already equal
    repair: CellClassifier
    lam: float
