from collections import defaultdict
from itertools import product
from pathlib import Path
import logging
import time

from joblib import Parallel, delayed
import numpy as np

from ..schema.bench import BenchConfig, BenchReport, BenchRow, BenchSummary
from ..schema.errors import (
    BenchmarkConsistencyError,
    NoPositiveInstancesError,
    SolveTimeoutError,
)
from ..schema.fullinfo import FullInfoInstance, LdaStatus
from .fullinfo import (
    LdaSolver,
    generate_instance,
    get_solver,
    input_size_digits,
    verify_solution,
)
from .io import write_instance
from .seeds import derive_seed

logger = logging.getLogger(__name__)

TIMED_OUT = "timed_out"


def run_benchmark(
    config: BenchConfig, instance_dir: Path | None = None
) -> BenchReport:
    """
    Generates `instance_count` instances up front, cycling through every
    (n_options, max_digits) combination, then runs the exact solver and one
    approximate solver per epsilon on each. Exact results are the ground truth.
    """
    instances = generate_bench_instances(config)
    if instance_dir is not None:
        for instance_id, _, _, instance in instances:
            write_instance(instance, Path(instance_dir) / f"{instance_id}.csv")

    solvers = _solvers(config)
    _warm_up(solvers, instances[0][3])

    per_instance = Parallel(n_jobs=config.jobs)(
        delayed(_bench_instance)(
            instance_id, n_options, max_digits, instance, solvers, config
        )
        for instance_id, n_options, max_digits, instance in instances
    )
    rows = sorted(
        (row for rows in per_instance for row in rows),
        key=lambda row: (row.instance_id, _algorithm_order(row, config)),
    )
    logger.info(f"Benchmark finished: {len(instances)} instances, {len(rows)} rows")
    return BenchReport(rows=rows)


def generate_bench_instances(
    config: BenchConfig,
) -> list[tuple[str, int, int, FullInfoInstance]]:
    combos = list(product(config.n_options_values, config.max_digits_values))
    instances = []
    for index in range(config.instance_count):
        n_options, max_digits = combos[index % len(combos)]
        seed = derive_seed(config.master_seed, "bench", "instance", index)
        instance = generate_instance(n_options, max_digits, seed, lam=config.lam)
        instances.append((f"i{index:04d}", n_options, max_digits, instance))
    return instances


def hit_rate(report: BenchReport) -> dict[str, float]:
    """
    Per algorithm: found / instances with an LDA. Timed-out rows and instances whose
    exact solve timed out leave the denominator.
    """
    if not report.rows:
        raise NoPositiveInstancesError("empty report")
    if not any(row.lda_exists for row in report.rows):
        raise NoPositiveInstancesError()

    found = defaultdict(int)
    positives = defaultdict(int)
    for row in report.rows:
        if not row.lda_exists or row.status == TIMED_OUT:
            continue
        positives[row.algorithm] += 1
        found[row.algorithm] += row.status == LdaStatus.FOUND.value

    rates = {}
    for algorithm in dict.fromkeys(row.algorithm for row in report.rows):
        if positives[algorithm] == 0:
            logger.warning(f"{algorithm}: every positive instance timed out")
            continue
        rates[algorithm] = found[algorithm] / positives[algorithm]
    return rates


def summarize(report: BenchReport) -> BenchSummary:
    walls = defaultdict(lambda: defaultdict(list))
    points = defaultdict(list)
    for row in report.rows:
        if row.status == TIMED_OUT:
            continue
        walls[row.algorithm][row.max_digits].append(row.wall_ms)
        points[row.algorithm].append((row.input_digits, row.wall_ms))

    try:
        rates = hit_rate(report)
    except NoPositiveInstancesError:
        logger.warning("No instance has an LDA; hit rates are undefined")
        rates = {}

    instances = {row.instance_id: row.lda_exists for row in report.rows}
    return BenchSummary(
        hit_rates=rates,
        median_wall_ms={
            algorithm: {
                digits: float(np.median(times))
                for digits, times in sorted(buckets.items())
            }
            for algorithm, buckets in walls.items()
        },
        log_log_slope={
            algorithm: _log_log_slope(pairs) for algorithm, pairs in points.items()
        },
        instances=len(instances),
        lda_instances=sum(bool(exists) for exists in instances.values()),
        timed_out_instances=sum(exists is None for exists in instances.values()),
    )


def _solvers(config: BenchConfig) -> list[LdaSolver]:
    return [get_solver("exact")] + [
        get_solver("approx", epsilon=epsilon) for epsilon in config.epsilons
    ]


def _warm_up(solvers: list[LdaSolver], instance: FullInfoInstance):
    for solver in solvers:
        try:
            solver.solve(instance)
        except SolveTimeoutError:
            pass


def _bench_instance(
    instance_id: str,
    n_options: int,
    max_digits: int,
    instance: FullInfoInstance,
    solvers: list[LdaSolver],
    config: BenchConfig,
) -> list[BenchRow]:
    digits = input_size_digits(instance)
    outcomes = [
        _timed_solve(solver, instance, config.time_limit_per_solve)
        for solver in solvers
    ]

    exact_status = outcomes[0][0]
    lda_exists = None if exact_status == TIMED_OUT else exact_status == "found"

    rows = []
    for solver, (status, selection, wall_ms) in zip(solvers, outcomes):
        valid = status == "found" and verify_solution(instance, selection)
        if status == "found" and not valid:
            raise BenchmarkConsistencyError(
                f"{instance_id}: {solver.algorithm} returned an invalid LDA"
            )
        if status == "found" and lda_exists is False:
            raise BenchmarkConsistencyError(
                f"{instance_id}: {solver.algorithm} found an LDA the exact solver ruled out"
            )
        rows.append(
            BenchRow(
                instance_id=instance_id,
                n_options=n_options,
                max_digits=max_digits,
                input_digits=digits,
                algorithm=solver.algorithm,
                epsilon=getattr(solver, "epsilon", None),
                wall_ms=wall_ms,
                status=status,
                valid=valid,
                lda_exists=lda_exists,
            )
        )
    logger.debug(f"{instance_id}: {[row.status for row in rows]}")
    return rows


def _timed_solve(solver: LdaSolver, instance: FullInfoInstance, limit_s: float):
    start = time.perf_counter()
    try:
        solution = solver.solve(instance, time_limit_s=limit_s)
    except SolveTimeoutError:
        return TIMED_OUT, [], (time.perf_counter() - start) * 1000
    wall_ms = (time.perf_counter() - start) * 1000
    return solution.status.value, solution.selection, wall_ms


def _algorithm_order(row: BenchRow, config: BenchConfig) -> int:
    if row.epsilon is None:
        return 0
    return 1 + config.epsilons.index(row.epsilon)


def _log_log_slope(pairs: list[tuple[int, float]]) -> float | None:
    digits, wall_ms = np.array(pairs, dtype=float).T
    usable = (digits > 0) & (wall_ms > 0)
    if len(np.unique(digits[usable])) < 2:
        return None
    slope, _ = np.polyfit(np.log(digits[usable]), np.log(wall_ms[usable]), 1)
    return float(slope)
