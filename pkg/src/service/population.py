import logging

import numpy as np

from ..schema.errors import (
    DegenerateLabelsError,
    EmptyGroupError,
    EmptyPopulationError,
    IdenticalApplicantError,
)
from ..schema.population import (
    CellClassifier,
    GroupTally,
    LabeledDataset,
    Metrics,
    PathologicalTranscript,
)

logger = logging.getLogger(__name__)


def tally(dataset: LabeledDataset) -> GroupTally:
    if len(dataset) == 0:
        raise EmptyPopulationError()

    counts = []
    for group in (1, 2):
        in_group = dataset.groups == group
        counts.append(int(np.sum(in_group & (dataset.labels == 1))))
        counts.append(int(np.sum(in_group & (dataset.labels == 0))))
    return GroupTally.of(counts)


def base_rates(tally: GroupTally) -> tuple[float, float]:
    check_population(tally)
    return tally.n_1_pos / tally.n_1, tally.n_2_pos / tally.n_2


def relabel_groups(tally: GroupTally) -> GroupTally:
    """Swap groups 1 and 2, e.g. to put the higher base rate first."""
    return GroupTally.of((tally.n_2_pos, tally.n_2_neg, tally.n_1_pos, tally.n_1_neg))


def metrics(tally: GroupTally, classifier: CellClassifier, lam: float) -> Metrics:
    """
    Selection rates, disparity and utility U = TPR - lam * FPR of a cell classifier.
    """
    check_population(tally)
    p_1_pos, p_1_neg, p_2_pos, p_2_neg = classifier.as_tuple()

    selected_1_pos = p_1_pos * tally.n_1_pos
    selected_1_neg = p_1_neg * tally.n_1_neg
    selected_2_pos = p_2_pos * tally.n_2_pos
    selected_2_neg = p_2_neg * tally.n_2_neg

    sr_1 = (selected_1_pos + selected_1_neg) / tally.n_1
    sr_2 = (selected_2_pos + selected_2_neg) / tally.n_2
    tpr = (selected_1_pos + selected_2_pos) / tally.n_pos
    fpr = (selected_1_neg + selected_2_neg) / tally.n_neg
    return Metrics(
        sr_1=sr_1,
        sr_2=sr_2,
        delta=sr_1 - sr_2,
        tpr=tpr,
        fpr=fpr,
        utility=tpr - lam * fpr,
        lam=lam,
    )


def metrics_from_decisions(
    groups: np.ndarray, labels: np.ndarray, decisions: np.ndarray, lam: float
) -> Metrics:
    """Same quantities as `metrics`, enumerated row by row."""
    groups = np.asarray(groups)
    labels = np.asarray(labels)
    decisions = np.asarray(decisions, dtype=float)

    positives = labels == 1
    n_pos = int(positives.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError(n_pos, n_neg)

    sr_1, sr_2 = group_selection_rates(groups, decisions)
    tpr = float(decisions[positives].sum()) / n_pos
    fpr = float(decisions[~positives].sum()) / n_neg
    return Metrics(
        sr_1=sr_1,
        sr_2=sr_2,
        delta=sr_1 - sr_2,
        tpr=tpr,
        fpr=fpr,
        utility=tpr - lam * fpr,
        lam=lam,
    )


def group_selection_rates(
    groups: np.ndarray, decisions: np.ndarray
) -> tuple[float, float]:
    rates = []
    for group in (1, 2):
        in_group = groups == group
        if not in_group.any():
            raise EmptyGroupError(group)
        rates.append(float(decisions[in_group].mean()))
    return rates[0], rates[1]


def pathological_rule(
    pre_deploy: LabeledDataset, post_deploy: LabeledDataset
) -> PathologicalTranscript:
    """
    A rule that is perfectly accurate before deployment and has zero disparity after:
    it returns the memorized label for applicants seen before deployment and
    selects every applicant it has never seen.
    """
    pre_rows = list(pre_deploy.rows())
    post_rows = list(post_deploy.rows())

    memorized: dict[tuple[float, ...], int] = {}
    for features, _, label in pre_rows:
        if features in memorized:
            raise IdenticalApplicantError(features)
        memorized[features] = label

    seen_after: set[tuple[float, ...]] = set()
    for features, _, _ in post_rows:
        if features in memorized or features in seen_after:
            raise IdenticalApplicantError(features)
        seen_after.add(features)

    def rule(features: tuple[float, ...]) -> int:
        return memorized.get(features, 1)

    pre_decisions = [rule(features) for features, _, _ in pre_rows]
    post_decisions = [rule(features) for features, _, _ in post_rows]

    pre_accuracy = float(np.mean(np.array(pre_decisions) == pre_deploy.labels))
    sr_1, sr_2 = group_selection_rates(post_deploy.groups, np.array(post_decisions))
    logger.info(
        f"Pathological rule: pre-deploy accuracy {pre_accuracy}, "
        f"post-deploy disparity {sr_1 - sr_2}"
    )
    return PathologicalTranscript(
        pre_decisions=pre_decisions,
        post_decisions=post_decisions,
        pre_accuracy=pre_accuracy,
        post_disparity=sr_1 - sr_2,
    )


def check_population(tally: GroupTally):
    if tally.n_pos == 0 or tally.n_neg == 0:
        raise DegenerateLabelsError(tally.n_pos, tally.n_neg)
    for group, size in ((1, tally.n_1), (2, tally.n_2)):
        if size == 0:
            raise EmptyGroupError(group)
