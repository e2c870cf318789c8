from typing import Iterator, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, model_validator

Probability = float


class GroupTally(BaseModel):
    """Person counts per (group, label) cell; the feasible set depends on nothing else."""

    model_config = ConfigDict(frozen=True)

    n_1_pos: NonNegativeInt
    n_1_neg: NonNegativeInt
    n_2_pos: NonNegativeInt
    n_2_neg: NonNegativeInt

    @model_validator(mode="after")
    def _check_nonempty(self):
        if self.n == 0:
            raise ValueError("tally must count at least one person")
        return self

    @classmethod
    def of(cls, counts: Sequence[int]) -> "GroupTally":
        n_1_pos, n_1_neg, n_2_pos, n_2_neg = counts
        return cls(n_1_pos=n_1_pos, n_1_neg=n_1_neg, n_2_pos=n_2_pos, n_2_neg=n_2_neg)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.n_1_pos, self.n_1_neg, self.n_2_pos, self.n_2_neg)

    @property
    def n(self) -> int:
        return self.n_1_pos + self.n_1_neg + self.n_2_pos + self.n_2_neg

    @property
    def n_1(self) -> int:
        return self.n_1_pos + self.n_1_neg

    @property
    def n_2(self) -> int:
        return self.n_2_pos + self.n_2_neg

    @property
    def n_pos(self) -> int:
        return self.n_1_pos + self.n_2_pos

    @property
    def n_neg(self) -> int:
        return self.n_1_neg + self.n_2_neg


class CellClassifier(BaseModel):
    """A randomized classifier given by the selected fraction of each (g, y) cell."""

    model_config = ConfigDict(frozen=True)

    p_1_pos: Probability = Field(ge=0.0, le=1.0)
    p_1_neg: Probability = Field(ge=0.0, le=1.0)
    p_2_pos: Probability = Field(ge=0.0, le=1.0)
    p_2_neg: Probability = Field(ge=0.0, le=1.0)

    @classmethod
    def of(cls, fractions: Sequence[float]) -> "CellClassifier":
        p_1_pos, p_1_neg, p_2_pos, p_2_neg = fractions
        return cls(p_1_pos=p_1_pos, p_1_neg=p_1_neg, p_2_pos=p_2_pos, p_2_neg=p_2_neg)

    @classmethod
    def perfect(cls) -> "CellClassifier":
        return cls.of((1.0, 0.0, 1.0, 0.0))

    @classmethod
    def constant(cls, value: float) -> "CellClassifier":
        return cls.of((value,) * 4)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p_1_pos, self.p_1_neg, self.p_2_pos, self.p_2_neg)


class Metrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    sr_1: Probability
    sr_2: Probability
    delta: float
    tpr: Probability
    fpr: Probability
    utility: float
    lam: float


class LabeledDataset(BaseModel):
    """Encoded rows: a numeric feature matrix plus binary groups (1/2) and labels (0/1).

    Missing numeric features stay NaN until `split` fills them with training-split means.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    features: np.ndarray
    groups: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    dropped_rows: NonNegativeInt = 0

    @model_validator(mode="after")
    def _check_rows(self):
        n_rows = len(self.groups)
        if self.features.ndim != 2 or self.features.shape[0] != n_rows:
            raise ValueError("features must be a 2-D matrix with one row per person")
        if len(self.labels) != n_rows:
            raise ValueError("labels and groups must have the same length")
        if self.features.shape[1] != len(self.feature_names):
            raise ValueError("one feature name is required per feature column")
        if not np.isin(self.groups, (1, 2)).all():
            raise ValueError("groups must be 1 or 2")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        return self

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[tuple[Sequence[float], int, int]],
        name: str = "rows",
        feature_names: Sequence[str] | None = None,
    ) -> "LabeledDataset":
        arity = len(rows[0][0]) if rows else 0
        if any(len(features) != arity for features, _, _ in rows):
            raise ValueError("every row must have the same feature arity")
        return cls(
            name=name,
            features=np.array([features for features, _, _ in rows], dtype=float).reshape(
                len(rows), arity
            ),
            groups=np.array([group for _, group, _ in rows], dtype=np.int8),
            labels=np.array([label for _, _, label in rows], dtype=np.int8),
            feature_names=list(feature_names or [f"x{i}" for i in range(arity)]),
        )

    def __len__(self) -> int:
        return len(self.groups)

    def rows(self) -> Iterator[tuple[tuple[float, ...], int, int]]:
        for features, group, label in zip(self.features, self.groups, self.labels):
            yield tuple(features.tolist()), int(group), int(label)

    def subset(self, indices: np.ndarray, name: str | None = None) -> "LabeledDataset":
        return LabeledDataset(
            name=name or self.name,
            features=self.features[indices],
            groups=self.groups[indices],
            labels=self.labels[indices],
            feature_names=self.feature_names,
        )


class PathologicalTranscript(BaseModel):
    """Decisions of the rule that memorizes pre-deploy labels and selects everyone after."""

    model_config = ConfigDict(frozen=True)

    pre_decisions: list[int]
    post_decisions: list[int]
    pre_accuracy: float
    post_disparity: float
