"""Drives the four pipeline stages with shards, workers, and checkpoints.

Stage flow: ingest annotations -> blur gate -> squarify / size gate /
center-priority NMS -> crop + resize + in-core scoring -> normalize +
select.  Records are processed in shards (fixed, deterministic chunks);
per-image work runs fused inside one worker so each source image is
decoded once.  Completed shards are checkpointed, and the final manifest
is byte-identical regardless of worker count or resume boundaries.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from . import imaging
from .annotations import (
    DatasetOrigin,
    LabelAliasMap,
    SourceRecord,
    parse_coco,
    parse_detection_import,
    parse_odgt,
    parse_oid_csv,
)
from .boxgeom import center_priority_nms, size_gate, squarify
from .common import ConfigError, PipelineError, WarningSink
from .iqa import niqe
from .selection import (
    Direction,
    ManifestEntry,
    MetricSource,
    MetricSpec,
    RowMeta,
    ScoreTable,
    SelectionManifest,
    Status,
    ingest_external_scores,
    normalize,
    select_top,
)

CONFIG_VERSION = 1
CHECKPOINT_VERSION = 1

_IMAGE_EXTS = (".jpg", ".jpeg", ".png")


@dataclass(frozen=True)
class InputSpec:
    origin: DatasetOrigin
    annotations: str
    images_dir: str
    min_confidence: float = 0.5  # detection imports only

    def to_dict(self) -> dict:
        return {
            "origin": self.origin.value,
            "annotations": self.annotations,
            "images_dir": self.images_dir,
            "min_confidence": self.min_confidence,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InputSpec":
        return cls(
            origin=DatasetOrigin(d["origin"]),
            annotations=d["annotations"],
            images_dir=d["images_dir"],
            min_confidence=float(d.get("min_confidence", 0.5)),
        )


@dataclass
class PipelineConfig:
    inputs: list[InputSpec]
    output_dir: str
    checkpoint_dir: str | None = None
    aliases: list[str] | None = None  # None -> default person alias map
    blur_variance_threshold: float = 100.0
    blur_gate_scope: str = "image"  # or "box": gate each crop region
    min_side: int = 384
    iou_threshold: float = 0.45
    selection_fraction: float = 1.0 / 3.0
    metrics: list[MetricSpec] = field(
        default_factory=lambda: [MetricSpec("niqe", Direction.LOWER_BETTER)]
    )
    external_scores: str | None = None
    niqe_model_path: str | None = None  # None -> packaged model
    crop_format: str = "png"  # "jpg" trades lossless crops for size
    workers: int = 1
    shard_size: int = 1000
    fail_fast: bool = True  # False: skip unreadable images, count them

    def validate(self) -> None:
        if not self.inputs:
            raise ConfigError("config needs at least one input")
        if self.blur_variance_threshold <= 0:
            raise ConfigError("blur_variance_threshold must be positive")
        if self.blur_gate_scope not in ("image", "box"):
            raise ConfigError("blur_gate_scope must be 'image' or 'box'")
        if self.min_side <= 0:
            raise ConfigError("min_side must be positive")
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise ConfigError("iou_threshold must be in [0, 1]")
        if not 0.0 < self.selection_fraction <= 1.0:
            raise ConfigError("selection_fraction must be in (0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.shard_size < 1:
            raise ConfigError("shard_size must be >= 1")
        if self.crop_format not in ("png", "jpg"):
            raise ConfigError("crop_format must be 'png' or 'jpg'")
        names = [m.name for m in self.metrics]
        if len(set(names)) != len(names):
            raise ConfigError("metric names must be unique")

    def alias_map(self) -> LabelAliasMap:
        if self.aliases is None:
            return LabelAliasMap.default()
        return LabelAliasMap(canonical="person", aliases=frozenset(self.aliases))

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "inputs": [i.to_dict() for i in self.inputs],
            "output_dir": self.output_dir,
            "checkpoint_dir": self.checkpoint_dir,
            "aliases": self.aliases,
            "blur_variance_threshold": self.blur_variance_threshold,
            "blur_gate_scope": self.blur_gate_scope,
            "min_side": self.min_side,
            "iou_threshold": self.iou_threshold,
            "selection_fraction": self.selection_fraction,
            "metrics": [
                {
                    "name": m.name,
                    "direction": m.direction.value,
                    "threshold": m.threshold,
                    "source": m.source.value,
                }
                for m in self.metrics
            ],
            "external_scores": self.external_scores,
            "niqe_model_path": self.niqe_model_path,
            "crop_format": self.crop_format,
            "workers": self.workers,
            "shard_size": self.shard_size,
            "fail_fast": self.fail_fast,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        if d.get("version", CONFIG_VERSION) != CONFIG_VERSION:
            raise ConfigError("unsupported config version")
        metrics = [
            MetricSpec(
                name=m["name"],
                direction=Direction(m["direction"]),
                threshold=m.get("threshold"),
                source=MetricSource(m.get("source", "in_core")),
            )
            for m in d.get("metrics", [{"name": "niqe", "direction": "lower_better"}])
        ]
        cfg = cls(
            inputs=[InputSpec.from_dict(i) for i in d["inputs"]],
            output_dir=d["output_dir"],
            checkpoint_dir=d.get("checkpoint_dir"),
            aliases=d.get("aliases"),
            blur_variance_threshold=float(d.get("blur_variance_threshold", 100.0)),
            blur_gate_scope=d.get("blur_gate_scope", "image"),
            min_side=int(d.get("min_side", 384)),
            iou_threshold=float(d.get("iou_threshold", 0.45)),
            selection_fraction=float(d.get("selection_fraction", 1.0 / 3.0)),
            metrics=metrics,
            external_scores=d.get("external_scores"),
            niqe_model_path=d.get("niqe_model_path"),
            crop_format=d.get("crop_format", "png"),
            workers=int(d.get("workers", 1)),
            shard_size=int(d.get("shard_size", 1000)),
            fail_fast=bool(d.get("fail_fast", True)),
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "PipelineConfig":
        try:
            with open(path) as f:
                d = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
        return cls.from_dict(d)

    def semantic_hash(self) -> str:
        """Hash of the result-affecting fields (worker count and dirs excluded)."""
        d = self.to_dict()
        for key in ("workers", "checkpoint_dir", "output_dir"):
            d.pop(key, None)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


@dataclass
class FunnelStats:
    collected: int = 0
    person_labeled: int = 0
    passed_blur_gate: int = 0
    boxes_total: int = 0
    boxes_after_size_gate: int = 0
    crops_after_nms: int = 0
    scored: int = 0
    top_fraction: int = 0
    selected: int = 0
    rejection_counts: dict[str, int] = field(default_factory=dict)
    stage_seconds: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "collected": self.collected,
            "person_labeled": self.person_labeled,
            "passed_blur_gate": self.passed_blur_gate,
            "boxes_total": self.boxes_total,
            "boxes_after_size_gate": self.boxes_after_size_gate,
            "crops_after_nms": self.crops_after_nms,
            "scored": self.scored,
            "top_fraction": self.top_fraction,
            "selected": self.selected,
            "rejection_counts": self.rejection_counts,
            "stage_seconds": self.stage_seconds,
        }

    def to_text(self) -> str:
        lines = [
            "stage                    count",
            "-----                    -----",
            f"collected              {self.collected:>8}",
            f"person labeled         {self.person_labeled:>8}",
            f"passed blur gate       {self.passed_blur_gate:>8}",
            f"boxes total            {self.boxes_total:>8}",
            f"boxes after size gate  {self.boxes_after_size_gate:>8}",
            f"crops after NMS        {self.crops_after_nms:>8}",
            f"scored                 {self.scored:>8}",
            f"top fraction           {self.top_fraction:>8}",
            f"selected               {self.selected:>8}",
        ]
        if self.rejection_counts:
            lines.append("")
            lines.append("rejections:")
            for reason in sorted(self.rejection_counts):
                lines.append(f"  {reason:<22} {self.rejection_counts[reason]:>6}")
        return "\n".join(lines) + "\n"


@dataclass
class CropRow:
    """Per-crop outcome of the fused gate/geometry/score stage."""

    crop_id: str
    image_id: str
    rect: tuple[int, int, int]
    status: str | None  # None when scored; otherwise a rejection reason
    laplacian: float | None = None
    niqe: float | None = None
    crop_path: str = ""

    def to_dict(self) -> dict:
        return {
            "crop_id": self.crop_id,
            "image_id": self.image_id,
            "rect": list(self.rect),
            "status": self.status,
            "laplacian": self.laplacian,
            "niqe": self.niqe,
            "crop_path": self.crop_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CropRow":
        return cls(
            crop_id=d["crop_id"],
            image_id=d["image_id"],
            rect=tuple(d["rect"]),
            status=d.get("status"),
            laplacian=d.get("laplacian"),
            niqe=d.get("niqe"),
            crop_path=d.get("crop_path", ""),
        )


def _sanitize(name: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9._-]+", "_", name)
    digest = hashlib.sha1(name.encode()).hexdigest()[:8]
    return f"{safe}_{digest}"


def _dims_lookup(images_dir: str) -> Callable[[str], tuple[int, int] | None]:
    def lookup(image_id: str) -> tuple[int, int] | None:
        for ext in _IMAGE_EXTS:
            p = os.path.join(images_dir, image_id + ext)
            if os.path.exists(p):
                return imaging.image_size(p)
        return None

    return lookup


def _resolve_image_path(spec: InputSpec, rec: SourceRecord) -> str:
    if rec.image_path:
        p = rec.image_path
        if not os.path.isabs(p):
            p = os.path.join(spec.images_dir, p)
        return p
    for ext in _IMAGE_EXTS:
        p = os.path.join(spec.images_dir, rec.image_id + ext)
        if os.path.exists(p):
            return p
    return os.path.join(spec.images_dir, rec.image_id)


def ingest(cfg: PipelineConfig, sink: WarningSink) -> list[SourceRecord]:
    """Parse every configured input into a single namespaced record list."""
    aliases = cfg.alias_map()
    records: list[SourceRecord] = []
    seen: set[str] = set()
    for spec in cfg.inputs:
        try:
            f = open(spec.annotations, "rb")
        except OSError as e:
            raise PipelineError(f"cannot read annotations {spec.annotations}: {e}") from e
        with f:
            if spec.origin in (DatasetOrigin.COCO, DatasetOrigin.OBJECT365):
                it: Iterator[SourceRecord] = parse_coco(f, aliases, origin=spec.origin, sink=sink)
            elif spec.origin == DatasetOrigin.OID:
                it = parse_oid_csv(f, _dims_lookup(spec.images_dir), aliases, sink=sink)
            elif spec.origin == DatasetOrigin.CROWDHUMAN:
                it = parse_odgt(f, _dims_lookup(spec.images_dir), sink=sink)
            else:
                it = parse_detection_import(f, min_confidence=spec.min_confidence, sink=sink)
            for rec in it:
                rec.image_path = _resolve_image_path(spec, rec)
                rec.image_id = f"{spec.origin.value.lower()}/{rec.image_id}"
                if rec.image_id in seen:
                    raise PipelineError(f"duplicate image_id in run: {rec.image_id}")
                seen.add(rec.image_id)
                records.append(rec)
    return records


# --- fused per-record stage -------------------------------------------------

_WORKER_CTX: dict = {}


def _worker_init(ctx: dict) -> None:
    global _WORKER_CTX
    _WORKER_CTX = dict(ctx)
    _WORKER_CTX["model"] = niqe.load_model(ctx["model_path"])


def _int_rect(crop, img_w: int, img_h: int) -> tuple[int, int, int]:
    side = min(int(round(crop.side)), img_w, img_h)
    x = min(max(int(round(crop.x)), 0), img_w - side)
    y = min(max(int(round(crop.y)), 0), img_h - side)
    return x, y, side


def process_record(rec: SourceRecord, ctx: dict) -> list[CropRow]:
    """Run gate -> geometry -> crop -> score for one source image."""
    crops = [squarify(b, rec.width, rec.height) for b in rec.person_boxes]
    crops.sort(key=lambda c: (c.center_distance, c.x, c.y))
    ids = {id(c): f"{rec.image_id}#p{i:02d}" for i, c in enumerate(crops)}

    rows: list[CropRow] = []
    try:
        img = imaging.load_image(rec.image_path)
    except (OSError, ValueError) as e:
        if ctx["fail_fast"]:
            raise PipelineError(f"cannot read image {rec.image_path}: {e}") from e
        return [
            CropRow(ids[id(c)], rec.image_id, _int_rect(c, rec.width, rec.height), "unreadable_image")
            for c in crops
        ]
    if img.shape[1] != rec.width or img.shape[0] != rec.height:
        # Trust the decoded pixels over the annotation header.
        reclamped = [b.clamped(img.shape[1], img.shape[0]) for b in rec.person_boxes]
        rec = SourceRecord(
            image_id=rec.image_id,
            image_path=rec.image_path,
            dataset_origin=rec.dataset_origin,
            width=img.shape[1],
            height=img.shape[0],
            person_boxes=[b for b in reclamped if b is not None],
            confidences=rec.confidences,
        )
        crops = [squarify(b, rec.width, rec.height) for b in rec.person_boxes]
        crops.sort(key=lambda c: (c.center_distance, c.x, c.y))
        ids = {id(c): f"{rec.image_id}#p{i:02d}" for i, c in enumerate(crops)}

    gray = imaging.to_luma(img)
    image_variance = imaging.laplacian_variance(gray) if min(gray.shape) >= 3 else 0.0

    if ctx["blur_gate_scope"] == "image" and image_variance < ctx["blur_threshold"]:
        return [
            CropRow(
                ids[id(c)],
                rec.image_id,
                _int_rect(c, rec.width, rec.height),
                Status.FAILED_BLUR_GATE.value,
                laplacian=image_variance,
            )
            for c in crops
        ]

    survivors = []
    for c in crops:
        rect = _int_rect(c, rec.width, rec.height)
        if not size_gate(c, ctx["min_side"]):
            rows.append(
                CropRow(
                    ids[id(c)],
                    rec.image_id,
                    rect,
                    Status.FAILED_SIZE_GATE.value,
                    laplacian=image_variance,
                )
            )
            continue
        if ctx["blur_gate_scope"] == "box":
            region = imaging.crop(gray, rect)
            var = imaging.laplacian_variance(region) if min(region.shape) >= 3 else 0.0
            if var < ctx["blur_threshold"]:
                rows.append(
                    CropRow(
                        ids[id(c)],
                        rec.image_id,
                        rect,
                        Status.FAILED_BLUR_GATE.value,
                        laplacian=var,
                    )
                )
                continue
        survivors.append(c)

    kept = center_priority_nms(survivors, ctx["iou_threshold"])
    kept_ids = {id(c) for c in kept}
    for c in survivors:
        if id(c) not in kept_ids:
            rows.append(
                CropRow(
                    ids[id(c)],
                    rec.image_id,
                    _int_rect(c, rec.width, rec.height),
                    Status.SUPPRESSED_NMS.value,
                    laplacian=image_variance,
                )
            )

    for c in kept:
        rect = _int_rect(c, rec.width, rec.height)
        patch = imaging.crop(img, rect)
        resized = imaging.resize(patch, ctx["crop_size"])
        cid = ids[id(c)]
        rel_path = os.path.join("crops", _sanitize(cid) + "." + ctx["crop_format"])
        imaging.save_image(resized, os.path.join(ctx["output_dir"], rel_path))
        if ctx["blur_gate_scope"] == "box":
            region = imaging.crop(gray, rect)
            lap_value = imaging.laplacian_variance(region) if min(region.shape) >= 3 else 0.0
        else:
            lap_value = image_variance
        rows.append(
            CropRow(
                cid,
                rec.image_id,
                rect,
                None,
                laplacian=lap_value,
                niqe=niqe.score(resized, ctx["model"]),
                crop_path=rel_path,
            )
        )
    order = {f"{rec.image_id}#p{i:02d}": i for i in range(len(crops))}
    rows.sort(key=lambda r: order[r.crop_id])
    return rows


def _run_shard(args: tuple[int, list[SourceRecord]]) -> tuple[int, list[dict]]:
    shard_idx, records = args
    rows: list[CropRow] = []
    for rec in records:
        rows.extend(process_record(rec, _WORKER_CTX))
    return shard_idx, [r.to_dict() for r in rows]


# --- checkpointing ----------------------------------------------------------


def _ckpt_meta_path(ckpt_dir: Path) -> Path:
    return ckpt_dir / "meta.json"


def _ckpt_shard_path(ckpt_dir: Path, i: int) -> Path:
    return ckpt_dir / f"shard_{i:05d}.json"


def _write_atomic(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w") as f:
        json.dump(payload, f, sort_keys=True)
    os.replace(tmp, path)


def _prepare_checkpoints(cfg: PipelineConfig, require_existing: bool) -> Path | None:
    if cfg.checkpoint_dir is None:
        if require_existing:
            raise ConfigError("resume requires a checkpoint_dir")
        return None
    ckpt = Path(cfg.checkpoint_dir)
    ckpt.mkdir(parents=True, exist_ok=True)
    meta_path = _ckpt_meta_path(ckpt)
    h = cfg.semantic_hash()
    if meta_path.exists():
        with open(meta_path) as f:
            meta = json.load(f)
        if meta.get("config_hash") != h:
            raise PipelineError(
                "checkpoint config hash mismatch: the checkpoints were produced "
                "by a different configuration; clear the checkpoint directory "
                "or restore the original config"
            )
    else:
        _write_atomic(meta_path, {"version": CHECKPOINT_VERSION, "config_hash": h})
    return ckpt


# --- the pipeline -----------------------------------------------------------


def run(
    cfg: PipelineConfig,
    on_shard: Callable[[int, int], None] | None = None,
    _resume: bool = False,
) -> tuple[SelectionManifest, FunnelStats]:
    """Execute the full pipeline and write manifest, stats, and crops.

    ``on_shard(done, total)`` is invoked after each shard completes (also
    the hook that progress bars and the resume tests use).  The returned
    manifest is deterministic: independent of worker count and of resume
    boundaries.
    """
    cfg.validate()
    sink = WarningSink()
    stats = FunnelStats()
    out_dir = Path(cfg.output_dir)
    (out_dir / "crops").mkdir(parents=True, exist_ok=True)
    ckpt_dir = _prepare_checkpoints(cfg, require_existing=_resume)

    t0 = time.perf_counter()
    records = ingest(cfg, sink)
    stats.stage_seconds["ingest"] = time.perf_counter() - t0
    stats.collected = int(sink.counts.get("images_seen", len(records)))
    stats.person_labeled = len(records)

    shards = [
        (i, records[i * cfg.shard_size : (i + 1) * cfg.shard_size])
        for i in range((len(records) + cfg.shard_size - 1) // cfg.shard_size)
    ]

    ctx = {
        "model_path": cfg.niqe_model_path or os.path.abspath(niqe.default_model_path()),
        "blur_threshold": cfg.blur_variance_threshold,
        "blur_gate_scope": cfg.blur_gate_scope,
        "min_side": cfg.min_side,
        "iou_threshold": cfg.iou_threshold,
        "crop_size": 512,
        "crop_format": cfg.crop_format,
        "output_dir": str(out_dir),
        "fail_fast": cfg.fail_fast,
    }

    t0 = time.perf_counter()
    results: dict[int, list[dict]] = {}
    pending = []
    for idx, shard in shards:
        ck = _ckpt_shard_path(ckpt_dir, idx) if ckpt_dir else None
        if ck is not None and ck.exists():
            with open(ck) as f:
                results[idx] = json.load(f)["rows"]
        else:
            pending.append((idx, shard))

    done = len(results)
    if on_shard:
        on_shard(done, len(shards))

    def _record_shard(idx: int, rows: list[dict]) -> None:
        nonlocal done
        results[idx] = rows
        if ckpt_dir is not None:
            _write_atomic(_ckpt_shard_path(ckpt_dir, idx), {"shard": idx, "rows": rows})
        done += 1
        if on_shard:
            on_shard(done, len(shards))

    if pending:
        if cfg.workers == 1:
            _worker_init(ctx)
            for idx, shard in pending:
                _record_shard(*_run_shard((idx, shard)))
        else:
            with ProcessPoolExecutor(
                max_workers=cfg.workers, initializer=_worker_init, initargs=(ctx,)
            ) as pool:
                for idx, rows in pool.map(_run_shard, pending):
                    _record_shard(idx, rows)
    stats.stage_seconds["process"] = time.perf_counter() - t0

    rows = [CropRow.from_dict(d) for i in sorted(results) for d in results[i]]
    gated_images = {r.image_id for r in rows if r.status == Status.FAILED_BLUR_GATE.value}
    readable_images = {r.image_id for r in rows if r.status != "unreadable_image"}
    if cfg.blur_gate_scope == "image":
        stats.passed_blur_gate = len(readable_images - gated_images)
    else:
        stats.passed_blur_gate = len(readable_images)
    box_rows = [r for r in rows if r.status != "unreadable_image" and r.image_id not in (
        gated_images if cfg.blur_gate_scope == "image" else set()
    )]
    stats.boxes_total = len(box_rows)
    stats.boxes_after_size_gate = sum(
        1 for r in box_rows if r.status != Status.FAILED_SIZE_GATE.value
    )
    stats.crops_after_nms = sum(
        1
        for r in box_rows
        if r.status not in (Status.FAILED_SIZE_GATE.value, Status.SUPPRESSED_NMS.value, Status.FAILED_BLUR_GATE.value)
    )

    scored = [r for r in rows if r.status is None]
    stats.scored = len(scored)
    rejected_entries = [
        ManifestEntry(
            crop_id=r.crop_id,
            source_image_id=r.image_id,
            rect=r.rect,
            status=Status(r.status),
            raw_scores={"laplacian_variance": r.laplacian} if r.laplacian is not None else {},
        )
        for r in rows
        if r.status is not None and r.status != "unreadable_image"
    ]
    sink.count("unreadable_image", sum(1 for r in rows if r.status == "unreadable_image"))

    t0 = time.perf_counter()
    manifest = SelectionManifest(entries=[])
    if scored:
        table = ScoreTable(
            crop_ids=[r.crop_id for r in scored],
            columns={
                "niqe": np.array([r.niqe for r in scored]),
                "laplacian_variance": np.array([r.laplacian for r in scored]),
            },
            meta={
                r.crop_id: RowMeta(r.image_id, r.rect, r.crop_path) for r in scored
            },
        )
        if cfg.external_scores:
            with open(cfg.external_scores) as f:
                table = ingest_external_scores(
                    table, f, [m.name for m in cfg.metrics if m.source == MetricSource.EXTERNAL], sink
                )
        if len(table) >= 2:
            table = normalize(table, cfg.metrics)
            manifest = select_top(table, cfg.selection_fraction, cfg.metrics)
        else:
            manifest = SelectionManifest(
                entries=[
                    ManifestEntry(
                        crop_id=r.crop_id,
                        source_image_id=r.image_id,
                        rect=r.rect,
                        status=Status.SELECTED,
                        raw_scores={"niqe": r.niqe, "laplacian_variance": r.laplacian},
                        rank=1,
                        crop_path=r.crop_path,
                    )
                    for r in scored
                ]
            )
    stats.top_fraction = sum(
        1
        for e in manifest.entries
        if e.status in (Status.SELECTED, Status.FAILED_THRESHOLD)
    )
    stats.selected = len(manifest.selected())
    manifest.entries.extend(sorted(rejected_entries, key=lambda e: e.crop_id))
    for status, count in manifest.status_counts().items():
        if status != Status.SELECTED.value:
            stats.rejection_counts[status] = count
    stats.stage_seconds["select"] = time.perf_counter() - t0

    manifest.write_jsonl(out_dir / "manifest.jsonl")
    with open(out_dir / "funnel_stats.json", "w") as f:
        json.dump(stats.to_dict(), f, sort_keys=True, indent=2)
    with open(out_dir / "funnel.txt", "w") as f:
        f.write(stats.to_text())
    with open(out_dir / "crop_list.tsv", "w") as f:
        for e in manifest.entries:
            if e.crop_path:
                f.write(f"{e.crop_id}\t{os.path.join(str(out_dir), e.crop_path)}\n")
    if sink:
        with open(out_dir / "warnings.log", "w") as f:
            for msg in sink.messages:
                f.write(msg + "\n")
            for cat, n in sorted(sink.counts.items()):
                f.write(f"count {cat} = {n}\n")
    return manifest, stats


def resume(
    cfg: PipelineConfig, on_shard: Callable[[int, int], None] | None = None
) -> tuple[SelectionManifest, FunnelStats]:
    """Continue from existing checkpoints; output equals a cold run."""
    return run(cfg, on_shard=on_shard, _resume=True)
