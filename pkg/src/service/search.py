from collections.abc import Sequence
from typing import NamedTuple
import logging

from joblib import Parallel, delayed
import numpy as np

from ..schema.errors import (
    DegenerateLabelsError,
    DegenerateSplitError,
    EmptySweepError,
    InvalidSearchTypeError,
    NonFiniteFeaturesError,
    TrialSizeError,
)
from ..schema.polygon import FeasiblePolygon, FrontierSummary
from ..schema.population import LabeledDataset
from ..schema.search import (
    SPLIT_NAMES,
    CandidatePool,
    PoolRecord,
    SearchType,
    SplitMetrics,
    SplitSpec,
    TableRow,
    TrainerKind,
    TrainerSpec,
    TrialRecord,
    TrialStatistics,
)
from .models import TRAINER_DISPATCHER, Classifier, balanced_weights
from .polygon import feasible_polygon, orient, utility_threshold
from .population import metrics_from_decisions, tally
from .seeds import derive_seed

logger = logging.getLogger(__name__)

SIGNIFICANCE_SHARE = 0.95
ZERO_TOLERANCE = 1e-12

Splits = tuple[LabeledDataset, LabeledDataset, LabeledDataset]


def split(dataset: LabeledDataset, spec: SplitSpec) -> Splits:
    """Seeded shuffle, then consecutive train/eval/test blocks of rounded sizes."""
    n = len(dataset)
    order = np.random.default_rng(spec.seed).permutation(n)
    n_train = round(n * spec.train_fraction)
    n_eval = round(n * spec.eval_fraction)
    blocks = (order[:n_train], order[n_train : n_train + n_eval], order[n_train + n_eval :])

    parts = [
        dataset.subset(np.sort(rows), name=f"{dataset.name}/{name}")
        for name, rows in zip(SPLIT_NAMES, blocks)
    ]
    for name, part in zip(SPLIT_NAMES, parts):
        _check_split(name, part)
    parts = _fill_missing(parts)
    logger.info(f"Split {n} rows into {[len(part) for part in parts]}")
    return tuple(parts)


def train(trainer: TrainerSpec, data: LabeledDataset, seed: int) -> Classifier:
    non_finite = int((~np.isfinite(data.features)).sum())
    if non_finite:
        raise NonFiniteFeaturesError(non_finite)
    n_pos = int(data.labels.sum())
    if n_pos == 0 or n_pos == len(data):
        raise DegenerateLabelsError(n_pos, len(data) - n_pos)

    labels = data.labels.astype(np.int64)
    if trainer.balanced_weights:
        weights = balanced_weights(labels)
    else:
        weights = np.ones(len(labels))

    model = TRAINER_DISPATCHER[trainer.kind].from_spec(trainer)
    return model.fit(data.features, labels, weights, np.random.default_rng(seed))


def train_candidate(
    trainer: TrainerSpec, search_type: SearchType, training: LabeledDataset, seed: int
) -> Classifier:
    """Rebuilds one pool member from its recorded seed."""
    if search_type is SearchType.SAMPLE:
        bootstrap_rng = np.random.default_rng(derive_seed(seed, "bootstrap"))
        rows = bootstrap_rng.integers(0, len(training), size=len(training))
        training = training.subset(rows)
    return train(trainer, training, seed)


def build_pool(
    trainer: TrainerSpec,
    search_type: SearchType,
    splits: Splits,
    count: int,
    master_seed: int,
    lam: float = 1.0,
    jobs: int = 1,
) -> CandidatePool:
    if search_type is SearchType.RANDOM_SEED and trainer.kind is not TrainerKind.RANDOM_FOREST:
        raise InvalidSearchTypeError(trainer.kind, search_type)

    records = Parallel(n_jobs=jobs)(
        delayed(_pool_record)(
            model_id,
            derive_seed(master_seed, "pool", model_id),
            trainer,
            search_type,
            splits,
            lam,
        )
        for model_id in range(count)
    )
    logger.info(f"Trained {count} {trainer.kind.value} models ({search_type.value})")
    return CandidatePool(
        trainer=trainer, search_type=search_type, lam=lam, records=records
    )


def split_metrics(model: Classifier, data: LabeledDataset, lam: float) -> SplitMetrics:
    result = metrics_from_decisions(
        data.groups, data.labels, model.predict(data.features), lam
    )
    return SplitMetrics(
        disparity=result.delta, utility=result.utility, sr_1=result.sr_1, sr_2=result.sr_2
    )


def subsample_select(pool: CandidatePool, n: int, seed: int) -> TrialRecord:
    columns = _PoolColumns(pool)
    _check_trial_size(n, len(columns.ids))
    drawn = np.random.default_rng(seed).choice(len(columns.ids), size=n, replace=False)
    return columns.select(drawn)


def trial_statistics(
    pool: CandidatePool, n: int, reps: int, seed: int
) -> TrialStatistics:
    columns = _PoolColumns(pool)
    _check_trial_size(n, len(columns.ids))

    trials = [
        columns.select(rng.choice(len(columns.ids), size=n, replace=False))
        for rng in np.random.default_rng(seed).spawn(reps)
    ]
    disparity = np.array([trial.delta_test_disparity for trial in trials])
    utility = np.array([trial.delta_test_utility for trial in trials])
    disparity_band = np.percentile(disparity, [2.5, 97.5])
    utility_band = np.percentile(utility, [2.5, 97.5])

    return TrialStatistics(
        n=n,
        reps=reps,
        disparity_mean=float(disparity.mean()),
        disparity_p2_5=float(disparity_band[0]),
        disparity_p97_5=float(disparity_band[1]),
        disparity_significant=_sign_consistent(disparity),
        utility_mean=float(utility.mean()),
        utility_p2_5=float(utility_band[0]),
        utility_p97_5=float(utility_band[1]),
        utility_significant=_sign_consistent(utility),
        perfect_guess_freq=float(np.mean([trial.perfect_guess for trial in trials])),
    )


def sweep(
    pool: CandidatePool, n_values: Sequence[int], reps: int, seed: int
) -> list[TrialStatistics]:
    statistics = []
    for n in n_values:
        statistics.append(trial_statistics(pool, n, reps, derive_seed(seed, "sweep", n)))
        logger.debug(f"n = {n}: mean delta disparity {statistics[-1].disparity_mean}")
    return statistics


def perfect_guess_frequency(
    pool: CandidatePool, n_values: Sequence[int], reps: int, seed: int
) -> dict[int, float]:
    return {
        statistics.n: statistics.perfect_guess_freq
        for statistics in sweep(pool, n_values, reps, seed)
    }


def table_summary(
    pool: CandidatePool, statistics: Sequence[TrialStatistics], n: int
) -> TableRow:
    """The sweep entry at n, or the largest n swept when n itself was not."""
    if not statistics:
        raise EmptySweepError()
    at_n = [entry for entry in statistics if entry.n == n]
    chosen = at_n[0] if at_n else max(statistics, key=lambda entry: entry.n)
    return TableRow(
        model=pool.trainer.kind,
        search_type=pool.search_type,
        n=chosen.n,
        disparity=chosen.disparity_mean,
        disparity_significant=chosen.disparity_significant,
        utility=chosen.utility_mean,
        utility_significant=chosen.utility_significant,
        freq_min_disp=chosen.perfect_guess_freq,
    )


def fitting_trial_sizes(n_values: Sequence[int], pool_size: int) -> list[int]:
    """The requested trial sizes a pool of `pool_size` can serve, else the pool size itself."""
    fitting = [n for n in n_values if n <= pool_size]
    if len(fitting) < len(n_values):
        logger.warning(f"Dropped trial sizes above the pool size {pool_size}")
    if not fitting:
        logger.warning(f"Sweeping at n = {pool_size} instead")
        fitting = [pool_size]
    return fitting


class PoolRegion(NamedTuple):
    polygon: FeasiblePolygon
    frontier: FrontierSummary
    points: np.ndarray  # (m, 2) eval (disparity, utility) per model
    relabeled: bool


def pool_region(pool: CandidatePool, evaluation: LabeledDataset) -> PoolRegion:
    """
    Feasible region of the evaluation split with every pool member placed in it.
    Groups are relabeled when group 2 has the higher base rate, and the model
    disparities are negated to match.
    """
    oriented, relabeled = orient(tally(evaluation))
    sign = -1.0 if relabeled else 1.0
    points = np.array(
        [(sign * record.eval.disparity, record.eval.utility) for record in pool.records],
        dtype=float,
    ).reshape(-1, 2)
    return PoolRegion(
        polygon=feasible_polygon(oriented, pool.lam),
        frontier=utility_threshold(oriented, pool.lam),
        points=points,
        relabeled=relabeled,
    )


class _PoolColumns:
    """Pool records as arrays; selection uses absolute disparities."""

    def __init__(self, pool: CandidatePool):
        records = pool.records
        self.ids = np.array([record.model_id for record in records])
        self.eval_abs = np.array([abs(record.eval.disparity) for record in records])
        self.test_abs = np.array([abs(record.test.disparity) for record in records])
        self.test_utility = np.array([record.test.utility for record in records])

    def select(self, drawn: np.ndarray) -> TrialRecord:
        # lexsort sorts by the last key first: eval |disparity|, then model id
        chosen = drawn[np.lexsort((self.ids[drawn], self.eval_abs[drawn]))[0]]
        return TrialRecord(
            selected_id=int(self.ids[chosen]),
            delta_test_disparity=float(self.test_abs[chosen] - self.test_abs[drawn].mean()),
            delta_test_utility=float(
                self.test_utility[chosen] - self.test_utility[drawn].mean()
            ),
            delta_eval_disparity=float(self.eval_abs[chosen] - self.eval_abs[drawn].mean()),
            perfect_guess=bool(self.test_abs[chosen] == self.test_abs[drawn].min()),
        )


def _pool_record(
    model_id: int,
    seed: int,
    trainer: TrainerSpec,
    search_type: SearchType,
    splits: Splits,
    lam: float,
) -> PoolRecord:
    model = train_candidate(trainer, search_type, splits[0], seed)
    return PoolRecord(
        model_id=model_id,
        seed=seed,
        search_type=search_type,
        **{
            name: split_metrics(model, data, lam)
            for name, data in zip(SPLIT_NAMES, splits)
        },
    )


def _check_split(name: str, part: LabeledDataset):
    for group in (1, 2):
        if not (part.groups == group).any():
            raise DegenerateSplitError(name, f"members of group {group}")
    for label in (0, 1):
        if not (part.labels == label).any():
            raise DegenerateSplitError(name, f"rows labeled {label}")


def _check_trial_size(n: int, pool_size: int):
    if not 1 <= n <= pool_size:
        raise TrialSizeError(n, pool_size)


def _sign_consistent(deltas: np.ndarray) -> bool:
    return bool(
        (deltas < -ZERO_TOLERANCE).mean() >= SIGNIFICANCE_SHARE
        or (deltas > ZERO_TOLERANCE).mean() >= SIGNIFICANCE_SHARE
    )


def _fill_missing(parts: list[LabeledDataset]) -> list[LabeledDataset]:
    """NaN features take the training split's column mean (0 for all-NaN columns)."""
    if not any(np.isnan(part.features).any() for part in parts):
        return parts
    with np.errstate(all="ignore"):
        means = np.nanmean(parts[0].features, axis=0)
    means = np.where(np.isnan(means), 0.0, means)
    logger.info("Filled missing numeric features with training-split means")
    return [
        part.model_copy(
            update={"features": np.where(np.isnan(part.features), means, part.features)}
        )
        for part in parts
    ]
