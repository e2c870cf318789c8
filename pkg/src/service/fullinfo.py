from abc import ABC, abstractmethod
from fractions import Fraction
from itertools import combinations
from typing import NamedTuple
import logging
import math
import time

import numpy as np

from ..schema.errors import (
    InstanceGenerationError,
    InstanceTooLargeError,
    InvalidInstanceError,
    InvalidParameterError,
    SolverConsistencyError,
    SolveTimeoutError,
)
from ..schema.fullinfo import (
    SIGMA_DIGITS,
    FullInfoInstance,
    LdaSolution,
    LdaStatus,
    SubsetSumInstance,
    ValueRecord,
    ValueScores,
    decimal_places,
    to_fraction,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_CELLS = 50_000_000
EXHAUSTIVE_MAX_VALUES = 20
GENERATION_RETRIES = 100
STAR_ID = "x*"
DOUBLE_STAR_ID = "x**"


def value_scores(instance: FullInfoInstance) -> list[ValueScores]:
    """
    Per-value disparity d = rho1 - rho2 and utility u = rho_bar * (sigma - lam * (1 - sigma)),
    where rho_bar is the population share of x under equal group masses.
    """
    lam = instance.lam
    return [
        ValueScores(
            id=value.id,
            d=value.rho1 - value.rho2,
            u=(value.rho1 + value.rho2) / 2 * (value.sigma - lam * (1 - value.sigma)),
        )
        for value in instance.values
    ]


def baseline_scores(instance: FullInfoInstance) -> tuple[Fraction, Fraction]:
    scores = {score.id: score for score in value_scores(instance)}
    unknown = set(instance.baseline) - scores.keys()
    if unknown:
        raise InvalidInstanceError(f"baseline names unknown values {sorted(unknown)}")
    delta0 = sum((scores[id_].d for id_ in instance.baseline), Fraction(0))
    u0 = sum((scores[id_].u for id_ in instance.baseline), Fraction(0))
    return delta0, u0


def verify_solution(instance: FullInfoInstance, selection: list[str]) -> bool:
    """One linear pass: utility at least the baseline's, absolute disparity strictly lower."""
    scores = {score.id: score for score in value_scores(instance)}
    delta0, u0 = baseline_scores(instance)
    delta = sum((scores[id_].d for id_ in selection), Fraction(0))
    utility = sum((scores[id_].u for id_ in selection), Fraction(0))
    return utility >= u0 and abs(delta) < abs(delta0)


class _IntegerProblem(NamedTuple):
    """Scores scaled to integers so sums compare exactly; values sorted by id."""

    ids: list[str]
    d: list[int]
    u: list[int]
    d_scale: int
    u_scale: int
    delta0: int
    u0: int
    baseline_ids: frozenset[str]

    @classmethod
    def from_instance(cls, instance: FullInfoInstance) -> "_IntegerProblem":
        scores = sorted(value_scores(instance), key=lambda score: score.id)
        d_scale = math.lcm(*(score.d.denominator for score in scores))
        u_scale = math.lcm(*(score.u.denominator for score in scores))
        d = [int(score.d * d_scale) for score in scores]
        u = [int(score.u * u_scale) for score in scores]
        baseline = set(instance.baseline)
        ids = [score.id for score in scores]
        return cls(
            ids=ids,
            d=d,
            u=u,
            d_scale=d_scale,
            u_scale=u_scale,
            delta0=sum(d_i for id_, d_i in zip(ids, d) if id_ in baseline),
            u0=sum(u_i for id_, u_i in zip(ids, u) if id_ in baseline),
            baseline_ids=frozenset(baseline),
        )


class _Candidate(NamedTuple):
    delta: int
    utility: int
    selection: tuple[str, ...]


class LdaSolver(ABC):
    algorithm: str
    miss_status: LdaStatus = LdaStatus.NONE_EXISTS

    def solve(self, instance: FullInfoInstance, time_limit_s: float | None = None):
        problem = _IntegerProblem.from_instance(instance)
        deadline = None if time_limit_s is None else time.monotonic() + time_limit_s
        best = self.search(problem, _Deadline(deadline, time_limit_s))
        return self._to_solution(problem, best)

    @abstractmethod
    def search(self, problem: _IntegerProblem, deadline: "_Deadline") -> _Candidate:
        """Selection minimizing |delta| subject to utility >= u0."""

    def _to_solution(
        self, problem: _IntegerProblem, best: _Candidate, note: str | None = None
    ) -> LdaSolution:
        baseline_delta = Fraction(problem.delta0, problem.d_scale)
        baseline_utility = Fraction(problem.u0, problem.u_scale)
        if abs(best.delta) < abs(problem.delta0):
            status = LdaStatus.FOUND
            selection = sorted(best.selection)
            delta = Fraction(best.delta, problem.d_scale)
            utility = Fraction(best.utility, problem.u_scale)
        else:
            status = self.miss_status
            selection = [id_ for id_ in problem.ids if id_ in problem.baseline_ids]
            delta, utility = baseline_delta, baseline_utility

        logger.info(
            f"{self.algorithm}: {status.value}, |delta| {float(abs(delta))} "
            f"vs baseline {float(abs(baseline_delta))}"
        )
        return LdaSolution(
            status=status,
            selection=selection,
            delta=delta,
            utility=utility,
            baseline_delta=baseline_delta,
            baseline_utility=baseline_utility,
            algorithm=self.algorithm,
            note=note,
        )


class ExactLdaSolver(LdaSolver):
    """
    Pseudo-polynomial DP over every signed disparity integer, keeping the maximum
    utility reachable at each one. The table width grows with 10**digits.

    Values enter in descending id order, so each new value has the smallest id seen
    so far and equal-utility ties resolve to the lexicographically smallest selection.
    """

    algorithm = "exact"

    def __init__(self, max_cells: int = DEFAULT_MAX_CELLS):
        self.max_cells = max_cells

    def search(self, problem, deadline):
        offset = -sum(d_i for d_i in problem.d if d_i < 0)
        width = offset + sum(d_i for d_i in problem.d if d_i > 0) + 1
        cells = width * (len(problem.d) + 1)
        if cells > self.max_cells:
            raise InstanceTooLargeError(cells, self.max_cells)

        best: list[int | None] = [None] * width
        best[offset] = 0
        nonempty = bytearray(width)
        took_layers: list[tuple[int, bytearray]] = []

        for index in reversed(range(len(problem.d))):
            deadline.check()
            d_i, u_i = problem.d[index], problem.u[index]
            layer = best[:]
            layer_nonempty = bytearray(nonempty)
            took = bytearray(width)
            for key, utility in enumerate(best):
                if utility is None:
                    continue
                target = key + d_i
                candidate = utility + u_i
                current = layer[target]
                # on a tie, taking the value sorts first unless the kept selection is empty
                if (
                    current is None
                    or candidate > current
                    or (candidate == current and nonempty[target])
                ):
                    layer[target] = candidate
                    layer_nonempty[target] = 1
                    took[target] = 1
            best = layer
            nonempty = layer_nonempty
            took_layers.append((index, took))

        feasible = [
            key
            for key, utility in enumerate(best)
            if utility is not None and utility >= problem.u0
        ]
        top = min((abs(key - offset), -best[key]) for key in feasible)
        tied = [key for key in feasible if (abs(key - offset), -best[key]) == top]

        def backtrack(key: int) -> tuple[str, ...]:
            selection = []
            for index, took in reversed(took_layers):
                if took[key]:
                    selection.append(problem.ids[index])
                    key -= problem.d[index]
            return tuple(selection)

        final_key = min(tied, key=backtrack)
        return _Candidate(final_key - offset, best[final_key], backtrack(final_key))


class ApproxLdaSolver(LdaSolver):
    """
    List trimming in the style of the Subset-Sum approximation scheme: partial
    disparity sums are bucketed at width eps * |delta0| / (2n(1 + eps)) and each
    bucket keeps its highest-utility state, so an LDA is found whenever one exists
    with |delta| <= |delta0| / (1 + eps).
    """

    miss_status = LdaStatus.NOT_FOUND_AT_EPSILON

    def __init__(self, epsilon: float):
        if not epsilon > 0:
            raise InvalidParameterError("epsilon", epsilon, "epsilon must be positive")
        self.epsilon = epsilon
        self.algorithm = f"approx[eps={epsilon}]"

    def solve(self, instance, time_limit_s=None):
        problem = _IntegerProblem.from_instance(instance)
        if problem.delta0 == 0:
            baseline_only = _Candidate(0, problem.u0, ())
            return self._to_solution(
                problem,
                baseline_only,
                note="baseline disparity is 0, so no approximate LDA can exist",
            )
        return super().solve(instance, time_limit_s)

    def search(self, problem, deadline):
        n = len(problem.d)
        epsilon = Fraction(self.epsilon)
        width = epsilon * abs(problem.delta0) / (2 * n * (1 + epsilon))

        remaining_gain = [0] * (n + 1)
        for index in reversed(range(n)):
            remaining_gain[index] = remaining_gain[index + 1] + max(problem.u[index], 0)

        states: dict[int, _Candidate] = {0: _Candidate(0, 0, ())}
        for index, (id_, d_i, u_i) in enumerate(zip(problem.ids, problem.d, problem.u)):
            deadline.check()
            extended = [
                _Candidate(state.delta + d_i, state.utility + u_i, state.selection + (id_,))
                for state in states.values()
            ]
            trimmed: dict[int, _Candidate] = {}
            for state in list(states.values()) + extended:
                if state.utility + remaining_gain[index + 1] < problem.u0:
                    continue
                bucket = state.delta * width.denominator // width.numerator
                kept = trimmed.get(bucket)
                if kept is None or state.utility > kept.utility:
                    trimmed[bucket] = state
            states = trimmed
            logger.debug(f"{self.algorithm}: {len(states)} states after value {id_}")

        feasible = [state for state in states.values() if state.utility >= problem.u0]
        if not feasible:
            raise SolverConsistencyError("trimming discarded every feasible state")
        return min(feasible, key=lambda state: (abs(state.delta), -state.utility, state.selection))


class ExhaustiveLdaSolver(LdaSolver):
    """Enumerates all 2**n selections; the reference oracle for small instances."""

    algorithm = "exhaustive"

    def search(self, problem, deadline):
        n = len(problem.d)
        if n > EXHAUSTIVE_MAX_VALUES:
            raise InstanceTooLargeError(2**n, 2**EXHAUSTIVE_MAX_VALUES)

        best = None
        for size in range(n + 1):
            deadline.check()
            for chosen in combinations(range(n), size):
                utility = sum(problem.u[index] for index in chosen)
                if utility < problem.u0:
                    continue
                candidate = _Candidate(
                    sum(problem.d[index] for index in chosen),
                    utility,
                    tuple(problem.ids[index] for index in chosen),
                )
                if best is None or _rank(candidate) < _rank(best):
                    best = candidate
        return best


# Dispatcher is extendible with further algorithms sharing the LdaSolver contract
SOLVER_DISPATCHER = {
    "exact": ExactLdaSolver,
    "approx": ApproxLdaSolver,
    "exhaustive": ExhaustiveLdaSolver,
}


def get_solver(name: str, **options) -> LdaSolver:
    solver_clazz = SOLVER_DISPATCHER.get(name)
    if solver_clazz is None:
        raise NotImplementedError(f"No solver implemented for algorithm: {name}")
    return solver_clazz(**options)


def solve_exact(
    instance: FullInfoInstance,
    max_cells: int = DEFAULT_MAX_CELLS,
    time_limit_s: float | None = None,
) -> LdaSolution:
    return ExactLdaSolver(max_cells).solve(instance, time_limit_s)


def solve_approx(
    instance: FullInfoInstance, epsilon: float, time_limit_s: float | None = None
) -> LdaSolution:
    return ApproxLdaSolver(epsilon).solve(instance, time_limit_s)


def solve_exhaustive(instance: FullInfoInstance) -> LdaSolution:
    return ExhaustiveLdaSolver().solve(instance)


def reduce_subset_sum(w: SubsetSumInstance, lam) -> FullInfoInstance:
    """
    Builds the balanced population whose LDAs are exactly the zero-sum subsets of W:
    2|w_i| people of type x_i in group 1 (w_i > 0) or group 2 (w_i < 0), one group-1
    person of type x*, and never-worth-selecting people of type x** balancing the
    groups, alpha extra per group.
    """
    lam = to_fraction(lam)
    total_abs = sum(abs(weight) for weight in w.weights)
    imbalance = 2 * sum(w.weights) + 1
    alpha = math.floor((total_abs + Fraction(1, 2)) / lam) + 1

    group_1 = 2 * sum(weight for weight in w.weights if weight > 0) + 1
    filler_1 = alpha + max(0, -imbalance)
    filler_2 = alpha + max(0, imbalance)
    half = group_1 + filler_1

    values = [
        ValueRecord(
            id=f"x{index}",
            rho1=Fraction(2 * weight, half) if weight > 0 else 0,
            rho2=Fraction(-2 * weight, half) if weight < 0 else 0,
            sigma=1,
        )
        for index, weight in enumerate(w.weights, start=1)
    ]
    values.append(ValueRecord(id=STAR_ID, rho1=Fraction(1, half), rho2=0, sigma=1))
    values.append(
        ValueRecord(
            id=DOUBLE_STAR_ID,
            rho1=Fraction(filler_1, half),
            rho2=Fraction(filler_2, half),
            sigma=0,
        )
    )
    logger.info(f"Reduced W = {w.weights} to N = {2 * half} people, alpha = {alpha}")
    return FullInfoInstance(values=values, lam=lam, baseline=[STAR_ID], digits=None)


def extract_subset_sum_solution(w: SubsetSumInstance, solution: LdaSolution) -> list[int]:
    if solution.status is not LdaStatus.FOUND:
        raise InvalidParameterError("solution.status", solution.status.value)
    slack = {STAR_ID, DOUBLE_STAR_ID} & set(solution.selection)
    if slack:
        raise SolverConsistencyError(f"solution selects slack values {sorted(slack)}")

    indices = sorted(int(id_.removeprefix("x")) for id_ in solution.selection)
    subset = [w.weights[index - 1] for index in indices]
    if not subset or sum(subset) != 0:
        raise SolverConsistencyError(f"selected weights {subset} do not sum to 0")
    return subset


def generate_instance(
    n_options: int, max_digits: int, seed: int, lam=1
) -> FullInfoInstance:
    """
    Random instance: both densities are normalized uniform draws rounded to
    `max_digits` decimals (rounding residual on the largest entry), sigma values are
    uniform draws rounded to 2 decimals, and the baseline is a random nonempty
    proper subset.
    """
    if n_options < 2:
        raise InvalidParameterError("n_options", n_options, "need at least 2 options")
    if max_digits < 1:
        raise InvalidParameterError("max_digits", max_digits, "need at least 1 digit")

    rng = np.random.default_rng(seed)
    rho1 = _random_density(rng, n_options, max_digits)
    rho2 = _random_density(rng, n_options, max_digits)
    sigma = [
        Fraction(int(units), 10**SIGMA_DIGITS)
        for units in np.round(rng.uniform(size=n_options) * 10**SIGMA_DIGITS)
    ]

    baseline_mask = np.zeros(n_options, dtype=bool)
    while not 0 < baseline_mask.sum() < n_options:
        baseline_mask = rng.random(n_options) < 0.5

    ids = [f"x{index}" for index in range(n_options)]
    return FullInfoInstance(
        values=[
            ValueRecord(id=id_, rho1=r1, rho2=r2, sigma=s)
            for id_, r1, r2, s in zip(ids, rho1, rho2, sigma)
        ],
        lam=lam,
        baseline=[id_ for id_, chosen in zip(ids, baseline_mask) if chosen],
        digits=max_digits,
    )


def input_size_digits(instance: FullInfoInstance) -> int:
    """Total decimal places used to write every sigma and rho entry."""
    total = 0
    for value in instance.values:
        for number in (value.sigma, value.rho1, value.rho2):
            places = decimal_places(number)
            if places is None:
                raise InvalidInstanceError(f"{value.id}: {number} has no finite decimal form")
            total += places
    return total


def _random_density(rng: np.random.Generator, n: int, digits: int) -> list[Fraction]:
    units = 10**digits
    for _ in range(GENERATION_RETRIES):
        shares = rng.uniform(size=n)
        counts = np.round(shares / shares.sum() * units).astype(np.int64)
        counts[np.argmax(counts)] += units - counts.sum()
        if counts.min() >= 0 and counts.max() <= units:
            return [Fraction(int(count), units) for count in counts]
    raise InstanceGenerationError(n, digits, GENERATION_RETRIES)


def _rank(candidate: _Candidate):
    return (abs(candidate.delta), -candidate.utility, candidate.selection)


class _Deadline(NamedTuple):
    at: float | None
    limit_s: float | None

    def check(self):
        if self.at is not None and time.monotonic() > self.at:
            raise SolveTimeoutError(self.limit_s)
