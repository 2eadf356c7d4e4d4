"""Score merging, z-score normalization, and top-fraction selection.

The normalization follows the pipeline's standardization rule: metrics
where lower is better are negated first, every metric column is
standardized with its population mean and standard deviation, and each
crop's aggregate is the average of its z-scores.  Selection keeps the top
fraction of crops by aggregate and then applies per-metric thresholds in
the metric's native direction (no back-fill for threshold failures).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import IO

import numpy as np

from .common import ConfigError, WarningSink

MANIFEST_SCHEMA_VERSION = 1


class Direction(str, Enum):
    HIGHER_BETTER = "higher_better"
    LOWER_BETTER = "lower_better"


class MetricSource(str, Enum):
    IN_CORE = "in_core"
    EXTERNAL = "external"


class Status(str, Enum):
    SELECTED = "selected"
    BELOW_TOP_FRACTION = "below_top_fraction"
    FAILED_THRESHOLD = "failed_threshold"
    FAILED_BLUR_GATE = "failed_blur_gate"
    FAILED_SIZE_GATE = "failed_size_gate"
    SUPPRESSED_NMS = "suppressed_nms"


@dataclass(frozen=True)
class MetricSpec:
    name: str
    direction: Direction
    threshold: float | None = None
    source: MetricSource = MetricSource.IN_CORE


@dataclass(frozen=True)
class RowMeta:
    """Provenance of one scored crop (filled by the orchestrator)."""

    source_image_id: str
    rect: tuple[int, int, int]  # x, y, side
    crop_path: str = ""


@dataclass
class ScoreTable:
    """Per-crop metric values, keyed by crop_id, column-major."""

    crop_ids: list[str]
    columns: dict[str, np.ndarray]
    meta: dict[str, RowMeta] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.crop_ids)
        if len(set(self.crop_ids)) != n:
            raise ValueError("crop_ids must be unique")
        for name, col in self.columns.items():
            if col.shape != (n,):
                raise ValueError(f"column {name!r} length {col.shape} != {n} rows")

    def __len__(self) -> int:
        return len(self.crop_ids)

    def index_of(self, crop_id: str) -> int:
        try:
            return self.crop_ids.index(crop_id)
        except ValueError:
            raise KeyError(crop_id) from None

    def require(self, names: list[str]) -> None:
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise ValueError(f"missing metric column(s): {', '.join(missing)}")
        for n in names:
            if not np.all(np.isfinite(self.columns[n])):
                raise ValueError(f"metric column {n!r} contains non-finite values")

    def copy(self) -> "ScoreTable":
        return ScoreTable(
            crop_ids=list(self.crop_ids),
            columns={k: v.copy() for k, v in self.columns.items()},
            meta=dict(self.meta),
        )

    def to_json(self, path) -> None:
        doc = {
            "crop_ids": self.crop_ids,
            "columns": {k: v.tolist() for k, v in self.columns.items()},
            "meta": {
                cid: {"source_image_id": m.source_image_id, "rect": list(m.rect), "crop_path": m.crop_path}
                for cid, m in self.meta.items()
            },
        }
        with open(path, "w") as f:
            json.dump(doc, f)

    @classmethod
    def from_json(cls, path) -> "ScoreTable":
        with open(path) as f:
            doc = json.load(f)
        return cls(
            crop_ids=list(doc["crop_ids"]),
            columns={k: np.array(v, dtype=np.float64) for k, v in doc["columns"].items()},
            meta={
                cid: RowMeta(m["source_image_id"], tuple(m["rect"]), m.get("crop_path", ""))
                for cid, m in doc.get("meta", {}).items()
            },
        )


def ingest_external_scores(
    table: ScoreTable,
    stream: IO[str] | IO[bytes],
    expected_metrics: list[str],
    sink: WarningSink | None = None,
) -> ScoreTable:
    """Merge an external scores CSV (header ``crop_id,<metric...>``).

    Every expected metric must appear as a column and every crop_id must
    already exist in the table.  Duplicate crop_id rows are last-wins with
    a warning.
    """
    sink = sink if sink is not None else WarningSink()
    data = stream.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.DictReader(data.splitlines())
    header = reader.fieldnames or []
    if "crop_id" not in header:
        raise ValueError("external scores CSV must have a crop_id column")
    missing = [m for m in expected_metrics if m not in header]
    if missing:
        raise ValueError(f"external scores CSV missing expected metric(s): {', '.join(missing)}")

    index = {cid: i for i, cid in enumerate(table.crop_ids)}
    values: dict[str, np.ndarray] = {
        m: np.full(len(table), np.nan) for m in header if m != "crop_id"
    }
    unknown: list[str] = []
    seen: set[str] = set()
    for row in reader:
        cid = row["crop_id"]
        if cid not in index:
            unknown.append(cid)
            continue
        if cid in seen:
            sink.warn("duplicate_crop_id", f"duplicate external row for {cid}, last wins")
        seen.add(cid)
        for m in values:
            values[m][index[cid]] = float(row[m])
    if unknown:
        raise ValueError(f"external scores reference unknown crop_id(s): {', '.join(sorted(unknown))}")

    merged = table.copy()
    for m, col in values.items():
        merged.columns[m] = col
    return merged


def normalize(table: ScoreTable, specs: list[MetricSpec]) -> ScoreTable:
    """Add z_<metric> columns and the per-crop aggregate.

    Lower-is-better metrics are negated before standardizing; statistics
    are population (not sample).  A metric with zero spread is an error.
    """
    if len(table) < 2:
        raise ValueError("normalize requires at least 2 rows")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError("metric names must be unique")
    table.require(names)
    out = table.copy()
    zcols = []
    for spec in specs:
        vals = table.columns[spec.name].astype(np.float64)
        if spec.direction == Direction.LOWER_BETTER:
            vals = -vals
        mu = float(np.mean(vals))
        sigma = float(np.std(vals))
        if sigma == 0.0:
            raise ValueError(f"degenerate metric {spec.name}")
        z = (vals - mu) / sigma
        out.columns[f"z_{spec.name}"] = z
        zcols.append(z)
    out.columns["aggregate"] = np.mean(np.stack(zcols, axis=0), axis=0)
    return out


@dataclass
class ManifestEntry:
    crop_id: str
    source_image_id: str
    rect: tuple[int, int, int] | None
    status: Status
    raw_scores: dict[str, float] = field(default_factory=dict)
    z_scores: dict[str, float] = field(default_factory=dict)
    aggregate: float | None = None
    rank: int | None = None
    failed_metric: str | None = None
    crop_path: str = ""

    def to_dict(self) -> dict:
        return {
            "crop_id": self.crop_id,
            "source_image_id": self.source_image_id,
            "rect": list(self.rect) if self.rect is not None else None,
            "status": self.status.value,
            "raw_scores": self.raw_scores,
            "z_scores": self.z_scores,
            "aggregate": self.aggregate,
            "rank": self.rank,
            "failed_metric": self.failed_metric,
            "crop_path": self.crop_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestEntry":
        return cls(
            crop_id=d["crop_id"],
            source_image_id=d["source_image_id"],
            rect=tuple(d["rect"]) if d.get("rect") is not None else None,
            status=Status(d["status"]),
            raw_scores=d.get("raw_scores", {}),
            z_scores=d.get("z_scores", {}),
            aggregate=d.get("aggregate"),
            rank=d.get("rank"),
            failed_metric=d.get("failed_metric"),
            crop_path=d.get("crop_path", ""),
        )


@dataclass
class SelectionManifest:
    """Final curated set, one entry per candidate crop with one status."""

    entries: list[ManifestEntry]

    def selected(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.status == Status.SELECTED]

    def status_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for e in self.entries:
            counts[e.status.value] = counts.get(e.status.value, 0) + 1
        return counts

    def write_jsonl(self, path) -> None:
        with open(path, "w") as f:
            meta = {"type": "meta", "schema_version": MANIFEST_SCHEMA_VERSION}
            f.write(json.dumps(meta, sort_keys=True) + "\n")
            for e in self.entries:
                f.write(json.dumps({"type": "entry", **e.to_dict()}, sort_keys=True) + "\n")

    @classmethod
    def read_jsonl(cls, path) -> "SelectionManifest":
        entries = []
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                d = json.loads(line)
                if d.get("type") == "meta":
                    if d.get("schema_version") != MANIFEST_SCHEMA_VERSION:
                        raise ValueError("unsupported manifest schema version")
                    continue
                entries.append(ManifestEntry.from_dict(d))
        return cls(entries=entries)


def select_top(
    table: ScoreTable,
    fraction: float = 1.0 / 3.0,
    specs: list[MetricSpec] | None = None,
) -> SelectionManifest:
    """Rank by aggregate and select the passing crops in the top fraction.

    Rows are ranked by aggregate descending (ties by ascending crop_id);
    the top floor(fraction * N) rows form the cut, and within the cut a
    row is selected iff every thresholded metric passes in its native
    direction.  Threshold failures are not back-filled from below the cut.
    """
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"selection fraction must be in (0, 1], got {fraction}")
    specs = specs or []
    if "aggregate" not in table.columns:
        raise ValueError("table has no aggregate column; run normalize first")

    agg = table.columns["aggregate"]
    order = sorted(range(len(table)), key=lambda i: (-agg[i], table.crop_ids[i]))
    n_top = int(np.floor(fraction * len(table)))

    metric_names = [s.name for s in specs]
    entries: list[ManifestEntry] = []
    for rank_zero, i in enumerate(order):
        cid = table.crop_ids[i]
        meta = table.meta.get(cid)
        raw = {m: float(table.columns[m][i]) for m in metric_names if m in table.columns}
        if "laplacian_variance" in table.columns:
            raw["laplacian_variance"] = float(table.columns["laplacian_variance"][i])
        z = {
            m: float(table.columns[f"z_{m}"][i])
            for m in metric_names
            if f"z_{m}" in table.columns
        }
        status = Status.BELOW_TOP_FRACTION
        failed = None
        if rank_zero < n_top:
            status = Status.SELECTED
            for spec in specs:
                if spec.threshold is None:
                    continue
                val = float(table.columns[spec.name][i])
                ok = (
                    val >= spec.threshold
                    if spec.direction == Direction.HIGHER_BETTER
                    else val <= spec.threshold
                )
                if not ok:
                    status = Status.FAILED_THRESHOLD
                    failed = spec.name
                    break
        entries.append(
            ManifestEntry(
                crop_id=cid,
                source_image_id=meta.source_image_id if meta else "",
                rect=meta.rect if meta else None,
                status=status,
                raw_scores=raw,
                z_scores=z,
                aggregate=float(agg[i]),
                rank=rank_zero + 1,
                failed_metric=failed,
                crop_path=meta.crop_path if meta else "",
            )
        )
    return SelectionManifest(entries=entries)
