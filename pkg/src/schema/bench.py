from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt

RowStatus = Literal["found", "none_exists", "not_found_at_epsilon", "timed_out"]


class BenchConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_options_values: list[PositiveInt] = Field(default=[4, 5], min_length=1)
    max_digits_values: list[PositiveInt] = Field(default=[1, 2, 3, 4], min_length=1)
    instance_count: PositiveInt = 250
    epsilons: list[PositiveFloat] = Field(default=[0.5, 0.1, 0.01], min_length=1)
    master_seed: int = 0
    time_limit_per_solve: PositiveFloat = 60.0
    lam: str = "1"
    jobs: int = 1


class BenchRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    instance_id: str
    n_options: int
    max_digits: int
    input_digits: int
    algorithm: str
    epsilon: float | None
    wall_ms: float
    status: RowStatus
    valid: bool
    lda_exists: bool | None  # None when the exact solve timed out


class BenchReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: list[BenchRow]


class BenchSummary(BaseModel):
    hit_rates: dict[str, float]
    median_wall_ms: dict[str, dict[int, float]]  # algorithm -> max_digits -> ms
    log_log_slope: dict[str, float | None]
    instances: int
    lda_instances: int
    timed_out_instances: int
