from pathlib import Path
from unittest import TestCase
import json
import tempfile

import numpy as np
import pytest

from src.schema.data import FeatureKind, GroupColumn, LabelColumn
from src.schema.errors import (
    InfeasibleBaseRatesError,
    InvalidParameterError,
    MissingColumnError,
    NoUsableRowsError,
)
from src.service.data import (
    adult_schema,
    german_schema,
    infer_schema,
    load_csv,
    load_schema,
    source_instructions,
    synthetic_dataset,
)
from src.service.population import base_rates, tally

ADULT_ROWS = """maritalstatus,hoursperweek,education,workclass,gender,income
Married,40,Bachelors,Private,M,>50K
Never-married,20,HS-grad,?,F,<=50K
Divorced,45,Masters,Private,F,>50K.
Married,abc,HS-grad,Self-emp,M,<=50K
Married,38,Bachelors,Private,X,<=50K
Never-married,,Bachelors,State-gov,M,<=50K.
"""


class TempDirTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def write(self, name, text):
        path = self.dir / name
        path.write_text(text)
        return path


class TestSchemas(TempDirTestCase):
    def test_adult_schema(self):
        schema = adult_schema()
        assert [column.name for column in schema.feature_columns] == [
            "maritalstatus",
            "hoursperweek",
            "education",
            "workclass",
        ]
        assert schema.feature_columns[1].kind is FeatureKind.NUMERIC
        assert schema.label_column.encode(">50K.") == 1
        assert schema.label_column.encode("<=50K") == 0
        assert schema.label_column.encode("unknown") is None

    def test_german_schema(self):
        schema = german_schema()
        assert len(schema.feature_columns) == 5
        assert schema.label_column.encode("1") == 1
        assert schema.label_column.encode("2") == 0
        assert schema.label_column.encode("bad") == 0
        assert schema.label_column.encode("") is None
        assert schema.label_column.encode("?") is None
        assert schema.label_column.encode("3") is None

    def test_group_mapping_needs_both_groups(self):
        with pytest.raises(ValueError):
            GroupColumn(name="gender", mapping={"M": 1, "F": 1})

    def test_label_needs_a_positive_value(self):
        with pytest.raises(ValueError):
            LabelColumn(name="income", positive_values=[])

    def test_schema_override(self):
        path = self.write(
            "schema.json",
            json.dumps(
                {"base": "adult", "group_column": {"name": "sex", "mapping": {"Male": 1, "Female": 2}}}
            ),
        )
        schema = load_schema(path)
        assert schema.group_column.name == "sex"
        assert schema.label_column.name == "income"
        assert len(schema.feature_columns) == 4

    def test_unknown_base_schema(self):
        path = self.write("schema.json", json.dumps({"base": "compas"}))
        with pytest.raises(InvalidParameterError):
            load_schema(path)

    def test_full_schema_file(self):
        path = self.write("schema.json", german_schema().model_dump_json())
        assert load_schema(path) == german_schema()

    def test_source_instructions(self):
        assert "archive.ics.uci.edu" in source_instructions("adult")
        with pytest.raises(InvalidParameterError):
            source_instructions("compas")


class TestLoadCsv(TempDirTestCase):
    def test_unusable_rows_are_dropped(self):
        dataset = load_csv(self.write("adult.csv", ADULT_ROWS), adult_schema())
        # bad hours on row 4 and unknown gender on row 5
        assert len(dataset) == 4
        assert dataset.dropped_rows == 2
        assert dataset.groups.tolist() == [1, 2, 2, 1]
        assert dataset.labels.tolist() == [1, 0, 1, 0]

    def test_one_hot_encoding_covers_every_category(self):
        dataset = load_csv(self.write("adult.csv", ADULT_ROWS), adult_schema())
        marital = [name for name in dataset.feature_names if name.startswith("maritalstatus=")]
        assert marital == [
            "maritalstatus=Divorced",
            "maritalstatus=Married",
            "maritalstatus=Never-married",
        ]
        assert "workclass=missing" in dataset.feature_names
        columns = [dataset.feature_names.index(name) for name in marital]
        assert np.array_equal(dataset.features[:, columns].sum(axis=1), np.ones(len(dataset)))

    def test_missing_numbers_stay_nan(self):
        dataset = load_csv(self.write("adult.csv", ADULT_ROWS), adult_schema())
        hours = dataset.features[:, dataset.feature_names.index("hoursperweek")]
        assert hours[:3].tolist() == [40.0, 20.0, 45.0]
        assert np.isnan(hours[3])

    def test_missing_german_label_drops_the_row(self):
        text = (
            "credit_history_category,credit_amount,unemployment_category,"
            "installment_rate_percentage_income,present_residence_duration,gender,creditworthiness\n"
            "A30,1200,A71,4,2,M,1\n"
            "A32,5000,A73,2,4,F,2\n"
            "A34,800,A75,3,1,F,\n"
        )
        dataset = load_csv(self.write("german.csv", text), german_schema())
        assert len(dataset) == 2
        assert dataset.dropped_rows == 1
        assert dataset.labels.tolist() == [1, 0]

    def test_missing_column(self):
        text = "maritalstatus,education,workclass,gender,income\nMarried,HS-grad,Private,M,>50K\n"
        with pytest.raises(MissingColumnError) as error:
            load_csv(self.write("adult.csv", text), adult_schema())
        assert error.value.column == "hoursperweek"

    def test_no_usable_rows(self):
        text = "maritalstatus,hoursperweek,education,workclass,gender,income\nMarried,40,HS-grad,Private,X,>50K\n"
        with pytest.raises(NoUsableRowsError):
            load_csv(self.write("adult.csv", text), adult_schema())

    def test_inferred_population_schema(self):
        path = self.write(
            "population.csv",
            "age,colour,group,label\n31,red,1,1\n45,blue,2,0\n27,,1,0\n52,red,2,1\n",
        )
        schema = infer_schema(path)
        kinds = {column.name: column.kind for column in schema.feature_columns}
        assert kinds == {"age": FeatureKind.NUMERIC, "colour": FeatureKind.CATEGORICAL}
        dataset = load_csv(path, schema)
        assert dataset.feature_names == ["age", "colour=blue", "colour=missing", "colour=red"]
        assert tally(dataset).as_tuple() == (1, 1, 1, 1)

    def test_inferred_schema_needs_group_and_label(self):
        path = self.write("population.csv", "age,label\n31,1\n")
        with pytest.raises(MissingColumnError):
            infer_schema(path)


class TestSyntheticDataset(TestCase):
    def test_base_rates_follow_the_request(self):
        dataset = synthetic_dataset(
            n_rows=20_000, group_balance=0.5, base_rates=(0.43, 0.33), signal_strength=1.0, seed=0
        )
        br_1, br_2 = base_rates(tally(dataset))
        assert abs(br_1 - 0.43) < 0.02
        assert abs(br_2 - 0.33) < 0.02
        assert abs((dataset.groups == 1).mean() - 0.5) < 0.02

    def test_signal_shifts_positives(self):
        dataset = synthetic_dataset(
            n_rows=5000, group_balance=0.5, base_rates=(0.5, 0.5), signal_strength=2.0, seed=1
        )
        positives = dataset.features[dataset.labels == 1].mean()
        negatives = dataset.features[dataset.labels == 0].mean()
        assert abs(positives - negatives - 2.0) < 0.1

    def test_deterministic(self):
        first = synthetic_dataset(100, 0.3, (0.6, 0.2), 1.0, seed=5, n_features=2)
        second = synthetic_dataset(100, 0.3, (0.6, 0.2), 1.0, seed=5, n_features=2)
        assert first.features.shape == (100, 2)
        assert np.array_equal(first.features, second.features)
        assert np.array_equal(first.labels, second.labels)

    def test_infeasible_base_rates(self):
        with pytest.raises(InfeasibleBaseRatesError):
            synthetic_dataset(100, 0.5, (1.2, 0.3), 1.0, seed=0)
