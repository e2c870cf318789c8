from pathlib import Path
from typing import Sequence
import logging

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..schema.bench import BenchSummary  # noqa: E402
from ..schema.polygon import FeasiblePolygon, FrontierSummary  # noqa: E402
from ..schema.search import TrialStatistics  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed salt and no date keep repeated renders byte-identical
plt.rcParams["svg.hashsalt"] = "lda-audit"
SVG_METADATA = {"Date": None}


def plot_polygon(
    path: str | Path,
    polygon: FeasiblePolygon,
    summary: FrontierSummary | None = None,
    grid: np.ndarray | None = None,
    models: np.ndarray | None = None,
) -> Path:
    """`models` overlays trained classifiers as (disparity, utility) rows."""
    figure, axes = plt.subplots(figsize=(6, 5))
    if grid is not None and len(grid):
        axes.scatter(grid[:, 0], grid[:, 1], s=2, color="tab:gray", alpha=0.4, label="deterministic")

    vertices = np.array(polygon.vertices + polygon.vertices[:1])
    axes.fill(vertices[:, 0], vertices[:, 1], color="tab:blue", alpha=0.15)
    axes.plot(vertices[:, 0], vertices[:, 1], color="tab:blue", label="feasible region")

    if summary is not None:
        axes.plot(
            [0.0, summary.delta_star], [summary.u_f, 1.0], color="tab:red", linestyle="--"
        )
        axes.scatter([summary.delta_star], [1.0], color="tab:red", zorder=3, label="perfect classifier")
        axes.scatter([0.0], [summary.u_f], color="tab:green", zorder=3, label="zero-disparity optimum")

    if models is not None and len(models):
        axes.scatter(
            models[:, 0], models[:, 1], s=8, color="tab:orange", zorder=2, label="trained models"
        )

    axes.axvline(0.0, color="black", linewidth=0.5)
    axes.set_xlabel("disparity (SR_1 - SR_2)")
    axes.set_ylabel(f"utility (TPR - {polygon.lam:g} FPR)")
    axes.legend(loc="lower left", fontsize="small")
    return _save(figure, path)


def plot_sweep(path: str | Path, statistics: Sequence[TrialStatistics]) -> Path:
    n = np.array([entry.n for entry in statistics])
    figure, (disparity, utility, guess) = plt.subplots(1, 3, figsize=(14, 4))

    for axes, field, label in (
        (disparity, "disparity", "test |disparity| change"),
        (utility, "utility", "test utility change"),
    ):
        mean = np.array([getattr(entry, f"{field}_mean") for entry in statistics])
        low = np.array([getattr(entry, f"{field}_p2_5") for entry in statistics])
        high = np.array([getattr(entry, f"{field}_p97_5") for entry in statistics])
        axes.fill_between(n, low, high, color="tab:blue", alpha=0.2)
        axes.plot(n, mean, color="tab:blue")
        axes.axhline(0.0, color="black", linewidth=0.5)
        axes.set_xlabel("models per trial (n)")
        axes.set_ylabel(label)

    guess.plot(n, [entry.perfect_guess_freq for entry in statistics], color="tab:orange")
    guess.set_ylim(0, 1.05)
    guess.set_xlabel("models per trial (n)")
    guess.set_ylabel("eval minimizer is test minimizer")
    figure.tight_layout()
    return _save(figure, path)


def plot_bench(path: str | Path, summary: BenchSummary) -> Path:
    figure, (runtime, hits) = plt.subplots(1, 2, figsize=(11, 4))
    for algorithm, buckets in summary.median_wall_ms.items():
        digits = sorted(buckets)
        runtime.plot(digits, [buckets[bucket] for bucket in digits], marker="o", label=algorithm)
    runtime.set_yscale("log")
    runtime.set_xlabel("max digits")
    runtime.set_ylabel("median wall time (ms)")
    runtime.legend(fontsize="small")

    names = list(summary.hit_rates)
    hits.bar(range(len(names)), [summary.hit_rates[name] for name in names], color="tab:green")
    hits.set_xticks(range(len(names)), names, rotation=20, fontsize="small")
    hits.set_ylim(0, 1.05)
    hits.set_ylabel("hit rate")
    figure.tight_layout()
    return _save(figure, path)


def _save(figure, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(figure)
    logger.info(f"Rendered {path}")
    return path
