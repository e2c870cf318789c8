from unittest import TestCase
import math

import numpy as np
import pytest

from src.schema.errors import (
    DegenerateLabelsError,
    DegenerateSplitError,
    EmptySweepError,
    InvalidSearchTypeError,
    NonFiniteFeaturesError,
    TrialSizeError,
)
from src.schema.population import LabeledDataset
from src.schema.search import (
    CandidatePool,
    PoolRecord,
    SearchType,
    SplitMetrics,
    SplitSpec,
    TrainerKind,
    TrainerSpec,
)
from src.service.data import synthetic_dataset
from src.service.models import DecisionTreeModel, RandomForestModel, balanced_weights
from src.service.polygon import contains_points
from src.service.search import (
    build_pool,
    fitting_trial_sizes,
    perfect_guess_frequency,
    pool_region,
    split,
    subsample_select,
    sweep,
    table_summary,
    train,
    trial_statistics,
)


def population(n_rows=1000, signal_strength=1.0, seed=0):
    return synthetic_dataset(
        n_rows=n_rows,
        group_balance=0.5,
        base_rates=(0.4286, 0.3333),
        signal_strength=signal_strength,
        seed=seed,
    )


def pool_of(eval_disparities, test_disparities, test_utilities=None):
    if test_utilities is None:
        test_utilities = np.zeros(len(test_disparities))
    records = [
        PoolRecord(
            model_id=model_id,
            seed=model_id,
            search_type=SearchType.SAMPLE,
            train=SplitMetrics(disparity=0.0, utility=0.0, sr_1=0.5, sr_2=0.5),
            eval=SplitMetrics(disparity=eval_d, utility=0.0, sr_1=0.5, sr_2=0.5),
            test=SplitMetrics(disparity=test_d, utility=test_u, sr_1=0.5, sr_2=0.5),
        )
        for model_id, (eval_d, test_d, test_u) in enumerate(
            zip(eval_disparities, test_disparities, test_utilities)
        )
    ]
    return CandidatePool(
        trainer=TrainerSpec(kind=TrainerKind.DECISION_TREE),
        search_type=SearchType.SAMPLE,
        records=records,
    )


class TestSplit(TestCase):
    def test_sizes_and_names(self):
        train_part, eval_part, test_part = split(population(), SplitSpec(seed=4))
        assert (len(train_part), len(eval_part), len(test_part)) == (600, 200, 200)
        assert train_part.name == "synthetic-0/train"
        assert test_part.name == "synthetic-0/test"

    def test_deterministic_and_disjoint(self):
        data = population()
        first = split(data, SplitSpec(seed=4))
        second = split(data, SplitSpec(seed=4))
        for a, b in zip(first, second):
            assert np.array_equal(a.features, b.features)
        rows = np.vstack([part.features for part in first])
        assert len(np.unique(rows, axis=0)) == len(data)

    def test_fractions_must_sum_to_one(self):
        with pytest.raises(ValueError):
            SplitSpec(train_fraction=0.5, eval_fraction=0.2, test_fraction=0.2)

    def test_split_missing_a_group(self):
        rows = [((float(i),), 1, i % 2) for i in range(20)] + [((99.0,), 2, 1)]
        with pytest.raises(DegenerateSplitError):
            split(LabeledDataset.from_rows(rows), SplitSpec())

    def test_missing_features_take_training_means(self):
        data = population(n_rows=200)
        features = data.features.copy()
        features[::7, 0] = np.nan
        parts = split(data.model_copy(update={"features": features}), SplitSpec(seed=1))
        for part in parts:
            assert np.isfinite(part.features).all()


class TestTrain(TestCase):
    def test_balanced_weights(self):
        weights = balanced_weights(np.array([1, 0, 0, 0]))
        assert np.allclose(weights, [2.0, 2 / 3, 2 / 3, 2 / 3])

    def test_logistic_regression_separates_strong_signal(self):
        data = population(n_rows=400, signal_strength=8.0)
        model = train(TrainerSpec(kind=TrainerKind.LOGISTIC_REGRESSION), data, seed=0)
        assert (model.predict(data.features) == data.labels).mean() >= 0.95

    def test_unrestricted_tree_fits_training_rows(self):
        data = population(n_rows=200)
        model = train(TrainerSpec(kind=TrainerKind.DECISION_TREE), data, seed=0)
        assert (model.predict(data.features) == data.labels).all()

    def test_depth_zero_tree_is_constant(self):
        data = population(n_rows=200)
        model = train(TrainerSpec(kind=TrainerKind.DECISION_TREE, max_depth=0), data, seed=0)
        assert isinstance(model, DecisionTreeModel)
        assert len(np.unique(model.predict_score(data.features))) == 1

    def test_forest_defaults_and_mean_score(self):
        spec = TrainerSpec(kind=TrainerKind.RANDOM_FOREST, n_trees=3)
        assert spec.max_depth == 5
        data = population(n_rows=200)
        model = train(spec, data, seed=2)
        assert isinstance(model, RandomForestModel)
        assert len(model.trees_) == 3
        tree_mean = np.mean([tree.predict_score(data.features) for tree in model.trees_], axis=0)
        assert np.allclose(model.predict_score(data.features), tree_mean)

    def test_same_seed_same_model(self):
        spec = TrainerSpec(kind=TrainerKind.RANDOM_FOREST, n_trees=4)
        data = population(n_rows=200)
        first = train(spec, data, seed=9).predict_score(data.features)
        second = train(spec, data, seed=9).predict_score(data.features)
        assert np.array_equal(first, second)

    def test_non_finite_features(self):
        data = population(n_rows=50)
        features = data.features.copy()
        features[3, 1] = np.inf
        with pytest.raises(NonFiniteFeaturesError):
            train(
                TrainerSpec(kind=TrainerKind.DECISION_TREE),
                data.model_copy(update={"features": features}),
                seed=0,
            )

    def test_single_label(self):
        data = LabeledDataset.from_rows([((float(i),), 1 + i % 2, 1) for i in range(10)])
        with pytest.raises(DegenerateLabelsError):
            train(TrainerSpec(kind=TrainerKind.LOGISTIC_REGRESSION), data, seed=0)


class TestBuildPool(TestCase):
    def setUp(self):
        self.splits = split(population(n_rows=300), SplitSpec(seed=0))
        self.trainer = TrainerSpec(kind=TrainerKind.DECISION_TREE, max_depth=3)

    def test_pool_is_deterministic(self):
        first = build_pool(self.trainer, SearchType.SAMPLE, self.splits, count=5, master_seed=1)
        second = build_pool(self.trainer, SearchType.SAMPLE, self.splits, count=5, master_seed=1)
        assert [record.model_id for record in first.records] == list(range(5))
        assert first == second

    def test_records_hold_split_metrics(self):
        pool = build_pool(self.trainer, SearchType.SAMPLE, self.splits, count=3, master_seed=1)
        for record in pool.records:
            for metrics in (record.train, record.eval, record.test):
                assert math.isclose(metrics.disparity, metrics.sr_1 - metrics.sr_2)

    def test_bootstraps_differ(self):
        pool = build_pool(self.trainer, SearchType.SAMPLE, self.splits, count=8, master_seed=1)
        assert len({record.eval.disparity for record in pool.records}) > 1

    def test_random_seed_needs_a_forest(self):
        with pytest.raises(InvalidSearchTypeError):
            build_pool(self.trainer, SearchType.RANDOM_SEED, self.splits, count=2, master_seed=0)

    def test_random_seed_forest(self):
        forest = TrainerSpec(kind=TrainerKind.RANDOM_FOREST, n_trees=3)
        pool = build_pool(forest, SearchType.RANDOM_SEED, self.splits, count=3, master_seed=0)
        assert all(record.search_type is SearchType.RANDOM_SEED for record in pool.records)


class TestSubsampleSelect(TestCase):
    def setUp(self):
        self.pool = pool_of(
            eval_disparities=[0.3, -0.1, 0.2, 0.1],
            test_disparities=[0.4, 0.2, 0.1, -0.05],
            test_utilities=[0.5, 0.6, 0.7, 0.8],
        )

    def test_whole_pool_picks_lowest_eval_disparity(self):
        trial = subsample_select(self.pool, n=4, seed=0)
        # |eval| ties between models 1 and 3 go to the lower id
        assert trial.selected_id == 1
        assert math.isclose(trial.delta_test_disparity, 0.2 - 0.1875)
        assert math.isclose(trial.delta_test_utility, 0.6 - 0.65)
        assert not trial.perfect_guess

    def test_single_model_trial(self):
        trial = subsample_select(self.pool, n=1, seed=3)
        assert trial.delta_test_disparity == 0.0
        assert trial.delta_test_utility == 0.0
        assert trial.perfect_guess

    def test_trial_size(self):
        for n in (0, 5):
            with pytest.raises(TrialSizeError):
                subsample_select(self.pool, n=n, seed=0)


class TestTrialStatistics(TestCase):
    def test_identical_models_change_nothing(self):
        pool = pool_of([0.1] * 10, [0.2] * 10, [0.5] * 10)
        statistics = trial_statistics(pool, n=4, reps=200, seed=0)
        assert math.isclose(statistics.disparity_mean, 0.0, abs_tol=1e-12)
        assert not statistics.disparity_significant
        assert not statistics.utility_significant
        assert statistics.perfect_guess_freq == 1.0

    def test_matching_splits_always_improve(self):
        disparities = np.random.default_rng(1).uniform(0, 0.2, size=50)
        pool = pool_of(disparities, disparities)
        statistics = trial_statistics(pool, n=5, reps=500, seed=0)
        assert statistics.disparity_mean < 0
        assert statistics.disparity_p97_5 < 0
        assert statistics.disparity_significant
        assert statistics.perfect_guess_freq == 1.0

    def test_independent_splits_guess_at_chance(self):
        rng = np.random.default_rng(2)
        pool = pool_of(rng.uniform(0, 0.2, size=200), rng.uniform(0, 0.2, size=200))
        statistics = trial_statistics(pool, n=5, reps=2000, seed=0)
        assert abs(statistics.perfect_guess_freq - 1 / 5) < 0.05
        assert not statistics.disparity_significant

    def test_sweep_and_summary(self):
        rng = np.random.default_rng(3)
        pool = pool_of(rng.uniform(size=30), rng.uniform(size=30))
        statistics = sweep(pool, [2, 5, 10], reps=100, seed=7)
        assert [entry.n for entry in statistics] == [2, 5, 10]
        assert statistics == sweep(pool, [2, 5, 10], reps=100, seed=7)
        assert perfect_guess_frequency(pool, [2, 5, 10], reps=100, seed=7) == {
            entry.n: entry.perfect_guess_freq for entry in statistics
        }

        row = table_summary(pool, statistics, n=5)
        assert row.n == 5
        assert row.disparity == statistics[1].disparity_mean
        assert table_summary(pool, statistics, n=100).n == 10

    def test_summary_needs_statistics(self):
        pool = pool_of([0.1, 0.2], [0.1, 0.2])
        with pytest.raises(EmptySweepError):
            table_summary(pool, [], n=2)


class TestTrialSizes(TestCase):
    def test_sizes_above_the_pool_are_dropped(self):
        assert fitting_trial_sizes([2, 3, 5, 8], pool_size=5) == [2, 3, 5]

    def test_pool_size_when_nothing_fits(self):
        assert fitting_trial_sizes(list(range(2, 101)), pool_size=1) == [1]
        assert fitting_trial_sizes([50], pool_size=12) == [12]


class TestPoolRegion(TestCase):
    def region(self, base_rates):
        data = synthetic_dataset(
            n_rows=1000, group_balance=0.5, base_rates=base_rates, signal_strength=1.0, seed=6
        )
        splits = split(data, SplitSpec(seed=6))
        trainer = TrainerSpec(kind=TrainerKind.DECISION_TREE, max_depth=3)
        pool = build_pool(trainer, SearchType.SAMPLE, splits, count=6, master_seed=6)
        return pool, pool_region(pool, splits[1])

    def test_models_lie_in_the_eval_region(self):
        pool, region = self.region((0.6, 0.2))
        assert not region.relabeled
        assert region.points.shape == (6, 2)
        assert region.points[:, 0].tolist() == [record.eval.disparity for record in pool.records]
        assert contains_points(region.polygon, region.points).all()
        assert region.frontier.delta_star > 0

    def test_region_relabels_when_group_2_has_the_higher_base_rate(self):
        pool, region = self.region((0.2, 0.7))
        assert region.relabeled
        assert region.points[:, 0].tolist() == [-record.eval.disparity for record in pool.records]
        assert contains_points(region.polygon, region.points).all()
        assert region.frontier.delta_star > 0
