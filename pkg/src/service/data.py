from pathlib import Path
import json
import logging

import numpy as np
import pandas as pd

from ..schema.data import (
    MISSING_MARKERS,
    FeatureColumn,
    FeatureKind,
    GroupColumn,
    LabelColumn,
    Schema,
)
from ..schema.errors import (
    InfeasibleBaseRatesError,
    InvalidParameterError,
    MissingColumnError,
    NoUsableRowsError,
)
from ..schema.population import LabeledDataset

logger = logging.getLogger(__name__)

MISSING_CATEGORY = "missing"

SOURCES = {
    "adult": (
        "Adult (Census Income): https://archive.ics.uci.edu/dataset/2/adult\n"
        "Rename columns to maritalstatus, hoursperweek, education, workclass, gender, "
        "income and write gender as M/F, or pass a schema override with --schema."
    ),
    "german": (
        "Statlog (German Credit Data): "
        "https://archive.ics.uci.edu/dataset/144/statlog+german+credit+data\n"
        "Rename columns to credit_history_category, credit_amount, "
        "unemployment_category, installment_rate_percentage_income, "
        "present_residence_duration, gender, creditworthiness, or pass a schema "
        "override with --schema."
    ),
}


def adult_schema() -> Schema:
    return Schema(
        dataset_name="adult",
        feature_columns=[
            FeatureColumn(name="maritalstatus", kind=FeatureKind.CATEGORICAL),
            FeatureColumn(name="hoursperweek", kind=FeatureKind.NUMERIC),
            FeatureColumn(name="education", kind=FeatureKind.CATEGORICAL),
            FeatureColumn(name="workclass", kind=FeatureKind.CATEGORICAL),
        ],
        group_column=GroupColumn(name="gender", mapping={"M": 1, "F": 2}),
        label_column=LabelColumn(
            name="income",
            positive_values=[">50K", ">50K."],
            negative_values=["<=50K", "<=50K."],
        ),
    )


def german_schema() -> Schema:
    return Schema(
        dataset_name="german",
        feature_columns=[
            FeatureColumn(name="credit_history_category", kind=FeatureKind.CATEGORICAL),
            FeatureColumn(name="credit_amount", kind=FeatureKind.NUMERIC),
            FeatureColumn(name="unemployment_category", kind=FeatureKind.CATEGORICAL),
            FeatureColumn(
                name="installment_rate_percentage_income", kind=FeatureKind.NUMERIC
            ),
            FeatureColumn(name="present_residence_duration", kind=FeatureKind.NUMERIC),
        ],
        group_column=GroupColumn(name="gender", mapping={"M": 1, "F": 2}),
        # UCI metadata codes good credit as 1 and bad credit as 2
        label_column=LabelColumn(
            name="creditworthiness",
            positive_values=["1", "good"],
            negative_values=["2", "bad"],
        ),
    )


NAMED_SCHEMAS = {"adult": adult_schema, "german": german_schema}


def load_schema(path: str | Path) -> Schema:
    """
    A full Schema as JSON, or {"base": "adult" | "german", ...} overriding the
    named schema's top-level fields.
    """
    document = json.loads(Path(path).read_text())
    base = document.pop("base", None)
    if base is None:
        return Schema.model_validate(document)
    if base not in NAMED_SCHEMAS:
        raise InvalidParameterError("base", base, f"unknown schema, pick from {list(NAMED_SCHEMAS)}")
    return Schema.model_validate({**NAMED_SCHEMAS[base]().model_dump(), **document})


def infer_schema(path: str | Path) -> Schema:
    """Population CSV layout: `group` in {1, 2}, `label` in {0, 1}, every other column a feature."""
    frame = _read(path)
    for column in ("group", "label"):
        if column not in frame.columns:
            raise MissingColumnError(column, path)

    features = []
    for column in frame.columns.drop(["group", "label"]):
        present = frame[column][~frame[column].isin(MISSING_MARKERS)]
        numeric = pd.to_numeric(present, errors="coerce").notna().all()
        kind = FeatureKind.NUMERIC if numeric else FeatureKind.CATEGORICAL
        features.append(FeatureColumn(name=column, kind=kind))

    return Schema(
        dataset_name=Path(path).stem,
        feature_columns=features,
        group_column=GroupColumn(name="group", mapping={"1": 1, "2": 2}),
        label_column=LabelColumn(name="label", positive_values=["1"], negative_values=["0"]),
    )


def load_csv(path: str | Path, schema: Schema) -> LabeledDataset:
    """
    Categorical features are one-hot encoded against the vocabulary of the whole
    file, missing entries mapping to their own category. Numeric features stay NaN
    when missing. Rows with an unknown group, an unreadable label or a malformed
    number are dropped and counted.
    """
    frame = _read(path)
    for column in schema.feature_columns:
        if column.name not in frame.columns:
            raise MissingColumnError(column.name, path)
    for column in (schema.group_column.name, schema.label_column.name):
        if column not in frame.columns:
            raise MissingColumnError(column, path)

    groups = frame[schema.group_column.name].map(schema.group_column.mapping)
    labels = frame[schema.label_column.name].map(schema.label_column.encode)
    usable = groups.notna() & labels.notna()

    blocks, names = [], []
    for column in schema.feature_columns:
        raw = frame[column.name]
        missing = raw.isin(MISSING_MARKERS)
        if column.kind is FeatureKind.NUMERIC:
            values = pd.to_numeric(raw.where(~missing), errors="coerce")
            usable &= values.notna() | missing
            blocks.append(values.to_numpy(dtype=float)[:, None])
            names.append(column.name)
        else:
            values = raw.where(~missing, MISSING_CATEGORY)
            vocabulary = sorted(values.unique())
            encoded = pd.get_dummies(
                pd.Categorical(values, categories=vocabulary), dtype=float
            )
            blocks.append(encoded.to_numpy())
            names.extend(f"{column.name}={value}" for value in vocabulary)

    dropped = int((~usable).sum())
    if dropped:
        logger.warning(f"Dropped {dropped} unusable rows from {path}")
    if not usable.any():
        raise NoUsableRowsError(path, dropped)

    keep = usable.to_numpy()
    features = np.hstack(blocks) if blocks else np.zeros((len(frame), 0))
    dataset = LabeledDataset(
        name=schema.dataset_name,
        features=features[keep],
        groups=groups[keep].to_numpy(dtype=np.int8),
        labels=labels[keep].to_numpy(dtype=np.int8),
        feature_names=names,
        dropped_rows=dropped,
    )
    logger.info(f"Loaded {len(dataset)} rows with {len(names)} encoded features from {path}")
    return dataset


def synthetic_dataset(
    n_rows: int,
    group_balance: float,
    base_rates: tuple[float, float],
    signal_strength: float,
    seed: int,
    n_features: int = 4,
) -> LabeledDataset:
    """
    Group 1 with probability `group_balance`, labels Bernoulli at the group's base
    rate, features standard normal shifted by +-signal_strength/2 with the label.
    Features carry no group information beyond what the labels do.
    """
    if not all(0 <= rate <= 1 for rate in base_rates) or len(base_rates) != 2:
        raise InfeasibleBaseRatesError(base_rates)
    if n_rows < 1:
        raise InvalidParameterError("n_rows", n_rows, "need at least one row")
    if not 0 < group_balance < 1:
        raise InvalidParameterError("group_balance", group_balance, "must lie in (0, 1)")
    if signal_strength < 0:
        raise InvalidParameterError("signal_strength", signal_strength, "must be >= 0")

    rng = np.random.default_rng(seed)
    groups = np.where(rng.random(n_rows) < group_balance, 1, 2).astype(np.int8)
    rates = np.where(groups == 1, base_rates[0], base_rates[1])
    labels = (rng.random(n_rows) < rates).astype(np.int8)
    shift = signal_strength * (labels - 0.5)
    features = rng.normal(size=(n_rows, n_features)) + shift[:, None]
    return LabeledDataset(
        name=f"synthetic-{seed}",
        features=features,
        groups=groups,
        labels=labels,
        feature_names=[f"f{index}" for index in range(n_features)],
    )


def source_instructions(name: str) -> str:
    if name not in SOURCES:
        raise InvalidParameterError("dataset", name, f"unknown dataset, pick from {list(SOURCES)}")
    return SOURCES[name]


def _read(path: str | Path) -> pd.DataFrame:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    frame.columns = frame.columns.str.strip()
    return frame.apply(lambda column: column.str.strip())
