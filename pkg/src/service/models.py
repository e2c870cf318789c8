from abc import ABC, abstractmethod
import logging
import math

import numpy as np

from ..schema.search import TrainerKind, TrainerSpec

logger = logging.getLogger(__name__)

DECISION_THRESHOLD = 0.5


def balanced_weights(labels: np.ndarray) -> np.ndarray:
    """n / (2 * n_class) per row, so both labels carry equal total weight."""
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=2).astype(float)
    return len(labels) / (2 * counts[labels])


class Classifier(ABC):
    """Hard classifier: positive iff the weighted class score exceeds 0.5."""

    @classmethod
    @abstractmethod
    def from_spec(cls, spec: TrainerSpec) -> "Classifier":
        pass

    @abstractmethod
    def fit(
        self,
        features: np.ndarray,
        labels: np.ndarray,
        weights: np.ndarray,
        rng: np.random.Generator,
    ) -> "Classifier":
        pass

    @abstractmethod
    def predict_score(self, features: np.ndarray) -> np.ndarray:
        pass

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (self.predict_score(features) > DECISION_THRESHOLD).astype(np.int8)


class LogisticRegressionModel(Classifier):
    """
    Full-batch gradient descent on the weighted mean log-loss over standardized
    features. Starts from zero, so the fit does not depend on the rng.
    """

    def __init__(self, iterations: int = 500, step_size: float = 0.1):
        self.iterations = iterations
        self.step_size = step_size

    @classmethod
    def from_spec(cls, spec):
        return cls(iterations=spec.iterations, step_size=spec.step_size)

    def fit(self, features, labels, weights, rng):
        self.mean_ = features.mean(axis=0)
        scale = features.std(axis=0)
        self.scale_ = np.where(scale > 0, scale, 1.0)
        standardized = (features - self.mean_) / self.scale_

        normalized = weights / weights.sum()
        self.coef_ = np.zeros(features.shape[1])
        self.intercept_ = 0.0
        for _ in range(self.iterations):
            residual = normalized * (_sigmoid(standardized @ self.coef_ + self.intercept_) - labels)
            self.coef_ -= self.step_size * (standardized.T @ residual)
            self.intercept_ -= self.step_size * residual.sum()
        return self

    def predict_score(self, features):
        standardized = (features - self.mean_) / self.scale_
        return _sigmoid(standardized @ self.coef_ + self.intercept_)


class DecisionTreeModel(Classifier):
    """
    Greedy weighted-Gini tree with midpoint thresholds. Nodes live in flat arrays;
    a leaf has feature -1 and its value is the weighted share of positives.
    """

    def __init__(
        self,
        max_depth: int | None = None,
        min_samples_split: int = 2,
        max_features: int | None = None,
    ):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features

    @classmethod
    def from_spec(cls, spec):
        return cls(max_depth=spec.max_depth, min_samples_split=spec.min_samples_split)

    def fit(self, features, labels, weights, rng):
        self.feature_: list[int] = []
        self.threshold_: list[float] = []
        self.left_: list[int] = []
        self.right_: list[int] = []
        self.value_: list[float] = []

        labels = np.asarray(labels, dtype=float)
        stack = [(self._new_node(), np.arange(len(labels)), 0)]
        while stack:
            node, rows, depth = stack.pop()
            node_weights = weights[rows]
            positive_share = float(node_weights @ labels[rows] / node_weights.sum())
            self.value_[node] = positive_share

            if (
                (self.max_depth is not None and depth >= self.max_depth)
                or len(rows) < self.min_samples_split
                or positive_share in (0.0, 1.0)
            ):
                continue
            split = self._best_split(features[rows], labels[rows], node_weights, rng)
            if split is None:
                continue

            feature, threshold = split
            goes_left = features[rows, feature] <= threshold
            left, right = self._new_node(), self._new_node()
            self.feature_[node], self.threshold_[node] = feature, threshold
            self.left_[node], self.right_[node] = left, right
            stack.append((right, rows[~goes_left], depth + 1))
            stack.append((left, rows[goes_left], depth + 1))

        self.feature_ = np.array(self.feature_)
        self.threshold_ = np.array(self.threshold_)
        self.left_ = np.array(self.left_)
        self.right_ = np.array(self.right_)
        self.value_ = np.array(self.value_)
        logger.debug(f"Grew tree with {len(self.value_)} nodes")
        return self

    def predict_score(self, features):
        nodes = np.zeros(len(features), dtype=int)
        active = self.feature_[nodes] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            current = nodes[rows]
            goes_left = features[rows, self.feature_[current]] <= self.threshold_[current]
            nodes[rows] = np.where(goes_left, self.left_[current], self.right_[current])
            active = self.feature_[nodes] >= 0
        return self.value_[nodes]

    def _new_node(self) -> int:
        self.feature_.append(-1)
        self.threshold_.append(0.0)
        self.left_.append(-1)
        self.right_.append(-1)
        self.value_.append(0.0)
        return len(self.value_) - 1

    def _best_split(self, features, labels, weights, rng):
        n_features = features.shape[1]
        candidates = np.arange(n_features)
        if self.max_features is not None and self.max_features < n_features:
            candidates = np.sort(rng.choice(n_features, self.max_features, replace=False))

        total_weight = weights.sum()
        total_positive = weights @ labels
        best_cost = _gini_cost(total_positive, total_weight) - 1e-12
        best = None
        for feature in candidates:
            order = np.argsort(features[:, feature], kind="stable")
            values = features[order, feature]
            left_weight = np.cumsum(weights[order])[:-1]
            left_positive = np.cumsum(weights[order] * labels[order])[:-1]
            distinct = values[:-1] < values[1:]
            if not distinct.any():
                continue

            cost = _gini_cost(left_positive, left_weight) + _gini_cost(
                total_positive - left_positive, total_weight - left_weight
            )
            cost = np.where(distinct, cost, np.inf)
            position = int(np.argmin(cost))
            if cost[position] < best_cost:
                best_cost = cost[position]
                best = int(feature), float((values[position] + values[position + 1]) / 2)
        return best


class RandomForestModel(Classifier):
    """
    Bagged trees with ceil(sqrt(features)) candidates per split. Each tree draws
    from its own child of the model seed; the score is the mean tree score.
    """

    def __init__(
        self, n_trees: int = 100, max_depth: int | None = 5, min_samples_split: int = 2
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split

    @classmethod
    def from_spec(cls, spec):
        return cls(
            n_trees=spec.n_trees,
            max_depth=spec.max_depth,
            min_samples_split=spec.min_samples_split,
        )

    def fit(self, features, labels, weights, rng):
        n_rows, n_features = features.shape
        max_features = math.ceil(math.sqrt(n_features))
        self.trees_ = []
        for tree_rng in rng.spawn(self.n_trees):
            rows = tree_rng.integers(0, n_rows, size=n_rows)
            tree = DecisionTreeModel(self.max_depth, self.min_samples_split, max_features)
            self.trees_.append(
                tree.fit(features[rows], labels[rows], weights[rows], tree_rng)
            )
        return self

    def predict_score(self, features):
        return np.mean([tree.predict_score(features) for tree in self.trees_], axis=0)


# Dispatcher is extendible with further classifiers sharing the Classifier contract
TRAINER_DISPATCHER: dict[TrainerKind, type[Classifier]] = {
    TrainerKind.LOGISTIC_REGRESSION: LogisticRegressionModel,
    TrainerKind.DECISION_TREE: DecisionTreeModel,
    TrainerKind.RANDOM_FOREST: RandomForestModel,
}


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def _gini_cost(positive, total):
    """Total weight times Gini impurity: 2 * p * (w - p) / w."""
    total = np.asarray(total, dtype=float)
    safe = np.where(total > 0, total, 1.0)
    return np.where(total > 0, 2 * positive * (total - positive) / safe, 0.0)
