import enum
import math

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    model_validator,
)

SPLIT_NAMES = ("train", "eval", "test")
FOREST_MAX_DEPTH = 5


class SplitSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    train_fraction: PositiveFloat = 0.6
    eval_fraction: PositiveFloat = 0.2
    test_fraction: PositiveFloat = 0.2
    seed: int = 0

    @model_validator(mode="after")
    def _check_total(self):
        total = self.train_fraction + self.eval_fraction + self.test_fraction
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"split fractions sum to {total}, not 1")
        return self

    def fractions(self) -> tuple[float, float, float]:
        return self.train_fraction, self.eval_fraction, self.test_fraction


class TrainerKind(str, enum.Enum):
    LOGISTIC_REGRESSION = "logistic_regression"
    DECISION_TREE = "decision_tree"
    RANDOM_FOREST = "random_forest"


class SearchType(str, enum.Enum):
    SAMPLE = "sample"  # bootstrap resample of the training split
    RANDOM_SEED = "random_seed"  # full training split, fresh seed


class TrainerSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: TrainerKind
    max_depth: NonNegativeInt | None = None
    n_trees: PositiveInt = 100
    balanced_weights: bool = True
    iterations: PositiveInt = 500
    step_size: PositiveFloat = 0.1
    min_samples_split: int = Field(default=2, ge=2)

    @model_validator(mode="before")
    @classmethod
    def _default_forest_depth(cls, data):
        if (
            isinstance(data, dict)
            and data.get("kind") in (TrainerKind.RANDOM_FOREST, "random_forest")
            and data.get("max_depth") is None
        ):
            return {**data, "max_depth": FOREST_MAX_DEPTH}
        return data


class SplitMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    disparity: float
    utility: float
    sr_1: float
    sr_2: float


class PoolRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    model_id: int
    seed: int
    search_type: SearchType
    train: SplitMetrics
    eval: SplitMetrics
    test: SplitMetrics


class CandidatePool(BaseModel):
    model_config = ConfigDict(frozen=True)

    trainer: TrainerSpec
    search_type: SearchType
    lam: float = 1.0
    records: list[PoolRecord]

    @model_validator(mode="after")
    def _check_records(self):
        if any(record.search_type is not self.search_type for record in self.records):
            raise ValueError("all records must share the pool's search type")
        ids = [record.model_id for record in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("model ids must be unique")
        return self


class TrialRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    selected_id: int
    delta_test_disparity: float
    delta_test_utility: float
    delta_eval_disparity: float
    perfect_guess: bool


class TrialStatistics(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: PositiveInt
    reps: PositiveInt
    disparity_mean: float
    disparity_p2_5: float
    disparity_p97_5: float
    disparity_significant: bool
    utility_mean: float
    utility_p2_5: float
    utility_p97_5: float
    utility_significant: bool
    perfect_guess_freq: float = Field(ge=0, le=1)


class SyntheticSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_rows: PositiveInt = 2000
    group_balance: float = Field(default=0.5, gt=0, lt=1)
    base_rates: tuple[float, float] = (0.4286, 0.3333)
    signal_strength: float = Field(default=1.0, ge=0)
    n_features: PositiveInt = 4


class SearchConfig(BaseModel):
    """Everything one model-multiplicity search run needs besides the dataset file."""

    model_config = ConfigDict(frozen=True)

    trainer: TrainerSpec = TrainerSpec(kind=TrainerKind.RANDOM_FOREST, n_trees=10)
    search_type: SearchType = SearchType.SAMPLE
    split: SplitSpec = SplitSpec()
    count: PositiveInt = 100
    n_values: list[PositiveInt] = Field(default=list(range(2, 101)), min_length=1)
    reps: PositiveInt = 2000
    summary_n: PositiveInt = 100
    lam: PositiveFloat = 1.0
    master_seed: int = 0
    jobs: int = 1
    synthetic: SyntheticSpec = SyntheticSpec()


class TableRow(BaseModel):
    """One summary line: out-of-sample changes of the selected model at n models."""

    model_config = ConfigDict(frozen=True)

    model: TrainerKind
    search_type: SearchType
    n: PositiveInt
    disparity: float
    disparity_significant: bool
    utility: float
    utility_significant: bool
    freq_min_disp: float
