import enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

MISSING_MARKERS = ("", "?", "NA", "NaN", "nan")


class FeatureKind(str, enum.Enum):
    CATEGORICAL = "categorical"
    NUMERIC = "numeric"


class FeatureColumn(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    kind: FeatureKind


class GroupColumn(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    mapping: dict[str, int] = {"M": 1, "F": 2}

    @model_validator(mode="after")
    def _check_mapping(self):
        if len(self.mapping) != 2 or sorted(self.mapping.values()) != [1, 2]:
            raise ValueError(
                f"group mapping must send exactly two raw values to 1 and 2, got {self.mapping}"
            )
        return self


class LabelColumn(BaseModel):
    """A row is positive iff its stripped raw label is one of `positive_values`."""

    model_config = ConfigDict(frozen=True)

    name: str
    positive_values: list[str] = Field(min_length=1)
    negative_values: list[str] | None = None  # None: anything else present is negative

    def encode(self, raw: str) -> int | None:
        value = raw.strip()
        if value in MISSING_MARKERS:
            return None
        if value in self.positive_values:
            return 1
        if self.negative_values is None or value in self.negative_values:
            return 0
        return None


class Schema(BaseModel):
    model_config = ConfigDict(frozen=True)

    dataset_name: str
    feature_columns: list[FeatureColumn]
    group_column: GroupColumn
    label_column: LabelColumn

    @model_validator(mode="after")
    def _check_names(self):
        names = [column.name for column in self.feature_columns]
        names += [self.group_column.name, self.label_column.name]
        if len(set(names)) != len(names):
            raise ValueError(f"column names must be distinct, got {names}")
        return self
