"""
Command-line entry point. Every command writes its artifacts plus one
manifest.json into its output directory and prints a JSON result to stdout.

Exit codes: 0 success (or LDA found), 2 no LDA (none_exists or
not_found_at_epsilon), 1 any error.
"""

from pathlib import Path
import argparse
import json
import logging
import sys

from pydantic import ValidationError

from . import __version__
from .schema.bench import BenchConfig
from .schema.errors import LdaAuditError, UsageError
from .schema.fullinfo import LdaStatus, SubsetSumInstance, to_fraction
from .schema.population import GroupTally
from .schema.search import SearchConfig, SearchType, TrainerKind, TrainerSpec
from .service import bench, data, fullinfo, io, plotting, polygon, population, search
from .service.seeds import derive_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_LDA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=args.log_level,
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.handler(args)
    except (LdaAuditError, ValidationError, json.JSONDecodeError, OSError) as error:
        logging.getLogger(__name__).error(str(error))
        print(str(error), file=sys.stderr)
        return EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lda-audit", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--seed", type=int, default=0, help="master seed for every random stream")
    parser.add_argument("--lambda", dest="lam", default="1", help="false-positive price")
    parser.add_argument("--jobs", type=int, default=-1, help="worker processes (-1: all cores)")
    parser.add_argument("--output", type=Path, default=None, help="output directory")
    parser.add_argument("--plot", action="store_true", help="also render SVG figures")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    commands = parser.add_subparsers(dest="command", required=True)

    for name, handler, help_text in (
        ("polygon", cmd_polygon, "feasible (delta, utility) polygon of a population"),
        ("grid", cmd_grid, "(delta, utility) of every deterministic cell classifier"),
        ("threshold", cmd_threshold, "utility threshold and zero-disparity repair"),
    ):
        command = commands.add_parser(name, help=help_text)
        source = command.add_mutually_exclusive_group(required=True)
        source.add_argument("--tally", help="n_1_pos,n_1_neg,n_2_pos,n_2_neg")
        source.add_argument("--dataset", type=Path, help="population CSV with group and label columns")
        command.add_argument(
            "--schema", help="adult, german, or a schema JSON path for --dataset (default: inferred)"
        )
        command.set_defaults(handler=handler)
        if name == "grid":
            command.add_argument("--cap", type=int, default=polygon.DEFAULT_GRID_CAP)
        if name == "threshold":
            command.add_argument("--u0", type=float, help="also report the least disparity at this utility")

    solve = commands.add_parser("solve", help="exact full-information LDA")
    solve.add_argument("instance", type=Path)
    solve.add_argument("--max-cells", type=int, default=fullinfo.DEFAULT_MAX_CELLS)
    solve.add_argument("--time-limit", type=float, default=None)
    solve.set_defaults(handler=cmd_solve)

    approx = commands.add_parser("approx", help="(1 + eps)-approximate LDA")
    approx.add_argument("instance", type=Path)
    approx.add_argument("--epsilon", type=float, required=True)
    approx.add_argument("--time-limit", type=float, default=None)
    approx.set_defaults(handler=cmd_approx)

    reduce = commands.add_parser("reduce", help="LDA instance from Subset-Sum weights")
    reduce.add_argument("--weights", required=True, help="comma-separated nonzero integers")
    reduce.set_defaults(handler=cmd_reduce)

    for name, handler in (("gen", cmd_gen), ("bench", cmd_bench)):
        command = commands.add_parser(name, help=f"{name} random instances")
        command.add_argument("--config", type=Path, help="BenchConfig JSON")
        command.add_argument("--instance-count", type=int)
        command.add_argument("--n-options", type=_int_list)
        command.add_argument("--max-digits", type=_int_list)
        command.set_defaults(handler=handler)
        if name == "bench":
            command.add_argument("--epsilons", type=_float_list)
            command.add_argument("--time-limit", type=float)

    search_command = commands.add_parser("search", help="randomized model-multiplicity search")
    source = search_command.add_mutually_exclusive_group(required=True)
    source.add_argument("--dataset", type=Path)
    source.add_argument("--synthetic", action="store_true", help="use the synthetic generator")
    search_command.add_argument("--schema", help="adult, german, or a schema JSON path")
    search_command.add_argument("--config", type=Path, help="SearchConfig JSON")
    search_command.add_argument("--trainer", choices=[kind.value for kind in TrainerKind])
    search_command.add_argument("--search-type", choices=[kind.value for kind in SearchType])
    search_command.add_argument("--count", type=int)
    search_command.add_argument("--n-values", type=_int_list, help="e.g. 2-100 or 1,2,5")
    search_command.add_argument("--reps", type=int)
    search_command.set_defaults(handler=cmd_search)

    demo = commands.add_parser(
        "demo-pathological", help="perfect accuracy before deployment, zero disparity after"
    )
    demo.add_argument("--pre", type=Path, help="population CSV seen before deployment")
    demo.add_argument("--post", type=Path, help="population CSV seen after deployment")
    demo.set_defaults(handler=cmd_demo_pathological)

    sources = commands.add_parser("sources", help="where to obtain the Adult and German files")
    sources.add_argument("name", choices=sorted(data.SOURCES))
    sources.set_defaults(handler=cmd_sources)
    return parser


def cmd_polygon(args) -> int:
    tally, inputs = _tally(args)
    lam = _float_lambda(args)
    output = _output_dir(args)
    feasible = polygon.feasible_polygon(tally, lam)
    outputs = [io.write_points(output / "polygon.csv", feasible.vertices)]

    oriented, relabeled = polygon.orient(tally)
    summary = polygon.utility_threshold(oriented, lam)
    result = {**summary.model_dump(mode="json"), "relabeled": relabeled}
    outputs.append(io.write_json(output / "summary.json", result))
    if args.plot:
        shown = polygon.feasible_polygon(oriented, lam) if relabeled else feasible
        grid = _grid_if_small(oriented, lam)
        outputs.append(plotting.plot_polygon(output / "polygon.svg", shown, summary, grid))
    _finish(args, output, inputs, outputs, {"tally": tally.model_dump()})
    _emit(result)
    return EXIT_OK


def cmd_grid(args) -> int:
    tally, inputs = _tally(args)
    lam = _float_lambda(args)
    output = _output_dir(args)
    grid = polygon.deterministic_grid(tally, lam, args.cap)
    outputs = [io.write_points(output / "grid.csv", grid)]
    if args.plot:
        feasible = polygon.feasible_polygon(tally, lam)
        outputs.append(plotting.plot_polygon(output / "grid.svg", feasible, grid=grid))
    _finish(args, output, inputs, outputs, {"tally": tally.model_dump(), "cap": args.cap})
    _emit({"points": len(grid)})
    return EXIT_OK


def cmd_threshold(args) -> int:
    tally, inputs = _tally(args)
    lam = _float_lambda(args)
    output = _output_dir(args)
    oriented, relabeled = polygon.orient(tally)
    summary = polygon.utility_threshold(oriented, lam)
    result = {**summary.model_dump(mode="json"), "relabeled": relabeled}
    if args.u0 is not None:
        result["u0"] = args.u0
        result["min_disparity"] = polygon.min_disparity_at_utility(oriented, lam, args.u0)
    outputs = [io.write_json(output / "threshold.json", result)]
    _finish(args, output, inputs, outputs, {"tally": tally.model_dump(), "u0": args.u0})
    _emit(result)
    return EXIT_OK


def cmd_solve(args) -> int:
    instance = io.read_instance(args.instance)
    solution = fullinfo.solve_exact(instance, args.max_cells, args.time_limit)
    return _report_solution(args, solution, {"max_cells": args.max_cells})


def cmd_approx(args) -> int:
    instance = io.read_instance(args.instance)
    solution = fullinfo.solve_approx(instance, args.epsilon, args.time_limit)
    return _report_solution(args, solution, {"epsilon": args.epsilon})


def cmd_reduce(args) -> int:
    weights = SubsetSumInstance(weights=_int_list(args.weights))
    output = _output_dir(args)
    instance = fullinfo.reduce_subset_sum(weights, args.lam)
    path = io.write_instance(instance, output / "reduction.csv")
    _finish(args, output, [], [path, io.sidecar_path(path)], {"weights": weights.weights})
    _emit({"instance": str(path), "values": len(instance.values)})
    return EXIT_OK


def cmd_gen(args) -> int:
    config = _bench_config(args)
    output = _output_dir(args)
    outputs = []
    for instance_id, _, _, instance in bench.generate_bench_instances(config):
        path = io.write_instance(instance, output / "instances" / f"{instance_id}.csv")
        outputs += [path, io.sidecar_path(path)]
    _finish(args, output, _config_inputs(args), outputs, config.model_dump())
    _emit({"instances": config.instance_count, "directory": str(output / "instances")})
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _bench_config(args)
    output = _output_dir(args)
    report = bench.run_benchmark(config, instance_dir=output / "instances")
    summary = bench.summarize(report)
    outputs = [
        io.write_report(output / "report.csv", report),
        io.write_json(output / "summary.json", summary),
    ]
    for instance_id in dict.fromkeys(row.instance_id for row in report.rows):
        path = output / "instances" / f"{instance_id}.csv"
        outputs += [path, io.sidecar_path(path)]
    if args.plot:
        outputs.append(plotting.plot_bench(output / "bench.svg", summary))
    _finish(args, output, _config_inputs(args), outputs, config.model_dump())
    _emit(summary.model_dump(mode="json"))
    return EXIT_OK


def cmd_search(args) -> int:
    config = _search_config(args)
    output = _output_dir(args)
    inputs = _config_inputs(args)

    if args.dataset is not None:
        schema = _schema(args, data.adult_schema)
        dataset = data.load_csv(args.dataset, schema)
        inputs += [args.dataset, *_schema_inputs(args)]
    else:
        synthetic = config.synthetic
        dataset = data.synthetic_dataset(
            synthetic.n_rows,
            synthetic.group_balance,
            synthetic.base_rates,
            synthetic.signal_strength,
            derive_seed(config.master_seed, "synthetic"),
            synthetic.n_features,
        )

    splits = search.split(dataset, config.split)
    pool = search.build_pool(
        config.trainer,
        config.search_type,
        splits,
        config.count,
        derive_seed(config.master_seed, "pool"),
        config.lam,
        config.jobs,
    )
    n_values = search.fitting_trial_sizes(config.n_values, config.count)
    statistics = search.sweep(pool, n_values, config.reps, derive_seed(config.master_seed, "trials"))
    row = search.table_summary(pool, statistics, config.summary_n)

    region = search.pool_region(pool, splits[1])
    frontier = {**region.frontier.model_dump(mode="json"), "relabeled": region.relabeled}

    outputs = [
        io.write_pool(output / "pool.csv", pool),
        io.write_statistics(output / "statistics.csv", statistics),
        io.write_json(output / "summary.json", row),
        io.write_points(output / "eval_polygon.csv", region.polygon.vertices),
        io.write_json(output / "eval_frontier.json", frontier),
    ]
    if args.plot:
        outputs.append(plotting.plot_sweep(output / "sweep.svg", statistics))
        outputs.append(
            plotting.plot_polygon(
                output / "eval_polygon.svg", region.polygon, region.frontier, models=region.points
            )
        )
    _finish(args, output, inputs, outputs, config.model_dump(mode="json"))
    _emit(row.model_dump(mode="json"))
    return EXIT_OK


def cmd_demo_pathological(args) -> int:
    output = _output_dir(args)
    if (args.pre is None) != (args.post is None):
        raise UsageError("--pre and --post go together")
    if args.pre is not None:
        pre = data.load_csv(args.pre, data.infer_schema(args.pre))
        post = data.load_csv(args.post, data.infer_schema(args.post))
        inputs = [args.pre, args.post]
    else:
        # continuous features: applicants are distinct with probability one
        pre = data.synthetic_dataset(200, 0.5, (0.6, 0.3), 1.0, derive_seed(args.seed, "pre"))
        post = data.synthetic_dataset(200, 0.5, (0.6, 0.3), 1.0, derive_seed(args.seed, "post"))
        inputs = []

    transcript = population.pathological_rule(pre, post)
    result = {
        "pre_accuracy": transcript.pre_accuracy,
        "post_disparity": transcript.post_disparity,
        "pre_rows": len(pre),
        "post_rows": len(post),
    }
    outputs = [io.write_json(output / "transcript.json", transcript)]
    _finish(args, output, inputs, outputs, {})
    _emit(result)
    return EXIT_OK


def cmd_sources(args) -> int:
    print(data.source_instructions(args.name))
    return EXIT_OK


def _report_solution(args, solution, options: dict) -> int:
    output = _output_dir(args)
    outputs = [io.write_json(output / "solution.json", solution)]
    inputs = [args.instance, io.sidecar_path(args.instance)]
    _finish(args, output, inputs, outputs, {"instance": str(args.instance), **options})
    _emit(solution.model_dump(mode="json"))
    return EXIT_OK if solution.status is LdaStatus.FOUND else EXIT_NO_LDA


def _tally(args) -> tuple[GroupTally, list[Path]]:
    if args.tally is not None:
        return GroupTally.of(_int_list(args.tally)), []
    schema = _schema(args, lambda: data.infer_schema(args.dataset))
    dataset = data.load_csv(args.dataset, schema)
    return population.tally(dataset), [args.dataset, *_schema_inputs(args)]


def _grid_if_small(tally: GroupTally, lam: float):
    try:
        return polygon.deterministic_grid(tally, lam)
    except LdaAuditError:
        logger.info("Grid too large to draw; plotting the hull only")
        return None


def _bench_config(args) -> BenchConfig:
    document = _load_json(args.config)
    overrides = {
        "instance_count": args.instance_count,
        "n_options_values": args.n_options,
        "max_digits_values": args.max_digits,
        "epsilons": getattr(args, "epsilons", None),
        "time_limit_per_solve": getattr(args, "time_limit", None),
    }
    document.update({key: value for key, value in overrides.items() if value is not None})
    document.update(master_seed=args.seed, lam=args.lam, jobs=args.jobs)
    return BenchConfig.model_validate(document)


def _search_config(args) -> SearchConfig:
    document = _load_json(args.config)
    if args.trainer is not None:
        trainer = document.get("trainer", {})
        if trainer.get("kind") != args.trainer:
            trainer = {}
        document["trainer"] = TrainerSpec.model_validate({**trainer, "kind": args.trainer})
    overrides = {
        "search_type": args.search_type,
        "count": args.count,
        "n_values": args.n_values,
        "reps": args.reps,
    }
    document.update({key: value for key, value in overrides.items() if value is not None})
    document.update(
        master_seed=args.seed, lam=float(to_fraction(args.lam)), jobs=args.jobs
    )
    return SearchConfig.model_validate(document)


def _schema(args, fallback):
    if args.schema is None:
        return fallback()
    if args.schema in data.NAMED_SCHEMAS:
        return data.NAMED_SCHEMAS[args.schema]()
    return data.load_schema(args.schema)


def _schema_inputs(args) -> list[Path]:
    if args.schema is None or args.schema in data.NAMED_SCHEMAS:
        return []
    return [Path(args.schema)]


def _config_inputs(args) -> list[Path]:
    return [args.config] if args.config is not None else []


def _load_json(path: Path | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def _output_dir(args) -> Path:
    output = args.output if args.output is not None else Path("out") / args.command
    output.mkdir(parents=True, exist_ok=True)
    return output


def _float_lambda(args) -> float:
    return float(to_fraction(args.lam))


def _finish(args, output: Path, inputs, outputs, config: dict):
    io.write_manifest(
        output,
        command=args.command,
        config={"lambda": args.lam, "jobs": args.jobs, "plot": args.plot, **config},
        master_seed=args.seed,
        version=__version__,
        inputs=inputs,
        outputs=outputs,
    )


def _emit(result):
    print(json.dumps(result, indent=2, sort_keys=True))


def _int_list(text: str) -> list[int]:
    """'1,-1,3' or an inclusive range '2-100'."""
    text = text.strip()
    try:
        if "," not in text and "-" in text[1:]:
            start, end = text[1:].split("-", 1)
            return list(range(int(text[0] + start), int(end) + 1))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}")
