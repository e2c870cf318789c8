from collections.abc import Iterable, Sequence
from pathlib import Path
import hashlib
import json
import logging
import re

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from ..schema.bench import BenchReport
from ..schema.errors import InstanceFormatError
from ..schema.fullinfo import (
    FullInfoInstance,
    InstanceSidecar,
    ValueRecord,
    fraction_text,
    to_fraction,
)
from ..schema.manifest import RunManifest
from ..schema.search import SPLIT_NAMES, CandidatePool, TrialStatistics

logger = logging.getLogger(__name__)

INSTANCE_COLUMNS = ["id", "rho1", "rho2", "sigma"]
REPORT_COLUMNS = [
    "instance_id",
    "n_options",
    "max_digits",
    "input_digits",
    "algorithm",
    "epsilon",
    "wall_ms",
    "status",
    "valid",
    "lda_exists",
]
POOL_COLUMNS = ["model_id", "seed", "search_type", "split", "disparity", "utility", "sr_1", "sr_2"]
MANIFEST_NAME = "manifest.json"


def sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".json")


def write_instance(instance: FullInfoInstance, path: str | Path) -> Path:
    """Densities are written as exact text, so a written instance reads back unchanged."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [
            [value.id, fraction_text(value.rho1), fraction_text(value.rho2), fraction_text(value.sigma)]
            for value in instance.values
        ],
        columns=INSTANCE_COLUMNS,
    )
    frame.to_csv(path, index=False, lineterminator="\n")
    sidecar = InstanceSidecar(
        lam=fraction_text(instance.lam), baseline=instance.baseline, digits=instance.digits
    )
    sidecar_path(path).write_text(sidecar.model_dump_json(by_alias=True, indent=2) + "\n")
    return path


def read_instance(path: str | Path) -> FullInfoInstance:
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise InstanceFormatError(path, 0, "file not found")
    except pd.errors.ParserError as error:
        match = re.search(r"line (\d+)", str(error))
        raise InstanceFormatError(path, int(match.group(1)) if match else 0, str(error))

    if list(frame.columns) != INSTANCE_COLUMNS:
        raise InstanceFormatError(path, 1, f"header must be {','.join(INSTANCE_COLUMNS)}")

    values = []
    for index, row in enumerate(frame.itertuples(index=False)):
        line = index + 2
        try:
            values.append(
                ValueRecord(
                    id=row.id.strip(),
                    rho1=to_fraction(row.rho1),
                    rho2=to_fraction(row.rho2),
                    sigma=to_fraction(row.sigma),
                )
            )
        except (ValueError, ZeroDivisionError) as error:
            raise InstanceFormatError(path, line, _reason(error))

    sidecar_file = sidecar_path(path)
    try:
        sidecar = InstanceSidecar.model_validate_json(sidecar_file.read_text())
    except FileNotFoundError:
        raise InstanceFormatError(sidecar_file, 0, "sidecar JSON not found")
    except ValidationError as error:
        raise InstanceFormatError(sidecar_file, 1, _reason(error))

    return FullInfoInstance(
        values=values, lam=sidecar.lam, baseline=sidecar.baseline, digits=sidecar.digits
    )


def write_points(path: str | Path, points: np.ndarray | Sequence[Sequence[float]]) -> Path:
    frame = pd.DataFrame(np.asarray(points, dtype=float).reshape(-1, 2), columns=["delta", "utility"])
    return _write_frame(frame, path)


def write_report(path: str | Path, report: BenchReport) -> Path:
    frame = pd.DataFrame([row.model_dump() for row in report.rows], columns=REPORT_COLUMNS)
    return _write_frame(frame, path)


def write_pool(path: str | Path, pool: CandidatePool) -> Path:
    frame = pd.DataFrame(
        [
            {
                "model_id": record.model_id,
                "seed": record.seed,
                "search_type": record.search_type.value,
                "split": name,
                **getattr(record, name).model_dump(),
            }
            for record in pool.records
            for name in SPLIT_NAMES
        ],
        columns=POOL_COLUMNS,
    )
    return _write_frame(frame, path)


def write_statistics(path: str | Path, statistics: Iterable[TrialStatistics]) -> Path:
    return _write_frame(pd.DataFrame([entry.model_dump() for entry in statistics]), path)


def write_json(path: str | Path, content: BaseModel | dict | list) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(content, BaseModel):
        text = content.model_dump_json(indent=2)
    else:
        text = json.dumps(content, indent=2, sort_keys=True, default=_plain)
    path.write_text(text + "\n")
    return path


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(
    output_dir: str | Path,
    command: str,
    config: dict,
    master_seed: int,
    version: str,
    inputs: Sequence[str | Path] = (),
    outputs: Sequence[str | Path] = (),
) -> Path:
    output_dir = Path(output_dir)
    manifest = RunManifest(
        command=command,
        config=config,
        master_seed=master_seed,
        artifact_version=version,
        input_digests={str(path): file_digest(path) for path in inputs},
        outputs=sorted(str(Path(path).relative_to(output_dir)) for path in outputs),
    )
    return write_json(output_dir / MANIFEST_NAME, manifest)


def _write_frame(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def _reason(error: Exception) -> str:
    if isinstance(error, ValidationError):
        return "; ".join(detail["msg"] for detail in error.errors())
    return str(error)


def _plain(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"cannot serialize {value!r}")
