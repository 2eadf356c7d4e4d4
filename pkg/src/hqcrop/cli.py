"""Command-line surface for the curation pipeline.

Exit codes: 0 on success, 1 on input/data errors, 2 on configuration
errors.  Structured logs go to stderr; machine-readable outputs are
written to files only.  Flags override config-file values; the default
config path can be set with the HQCROP_CONFIG environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .common import ConfigError, ParseError, PipelineError

_HELP_WIDTH = 100


def _formatter(prog):
    return argparse.ArgumentDefaultsHelpFormatter(prog, width=_HELP_WIDTH)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hqcrop",
        description="Crop and quality-filter human images from detection corpora.",
        formatter_class=_formatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, formatter_class=_formatter)
        return p

    def add_config(p, required=False):
        p.add_argument(
            "--config",
            default=os.environ.get("HQCROP_CONFIG"),
            required=required and "HQCROP_CONFIG" not in os.environ,
            help="pipeline config JSON (defaults to $HQCROP_CONFIG)",
        )

    p = add("run", "run the full pipeline: ingest, gate, crop, score, select")
    add_config(p, required=True)
    p.add_argument("--workers", type=int, default=None, help="worker process count")
    p.add_argument("--out", default=None, help="output directory override")
    p.add_argument("--checkpoints", default=None, help="checkpoint directory override")
    p.add_argument("--fraction", type=float, default=None, help="selection fraction override")
    p.add_argument("--blur-threshold", type=float, default=None, help="blur gate variance threshold override")
    p.add_argument("--min-side", type=int, default=None, help="minimum crop side override")
    p.add_argument("--iou-threshold", type=float, default=None, help="NMS IoU threshold override")

    p = add("resume", "resume an interrupted run from its checkpoints")
    add_config(p, required=True)
    p.add_argument("--workers", type=int, default=None, help="worker process count")
    p.add_argument("--out", default=None, help="output directory override")
    p.add_argument("--checkpoints", default=None, help="checkpoint directory override")

    p = add("ingest", "parse annotation inputs into a records JSONL")
    add_config(p, required=True)
    p.add_argument("--out", required=True, help="records JSONL output path")

    p = add("gate", "apply the blur gate to ingested records")
    add_config(p, required=True)
    p.add_argument("--records", required=True, help="records JSONL from ingest")
    p.add_argument("--out", required=True, help="gated records JSONL output path")
    p.add_argument("--blur-threshold", type=float, default=None, help="variance threshold override")

    p = add("crop", "squarify, size-gate, NMS, crop and resize gated records")
    add_config(p, required=True)
    p.add_argument("--records", required=True, help="gated records JSONL")
    p.add_argument("--out", required=True, help="output directory for crops and crop rows")

    p = add("score", "score crops with the in-core metrics (NIQE)")
    add_config(p, required=True)
    p.add_argument("--crops", required=True, help="crop rows JSONL from crop")
    p.add_argument("--out", required=True, help="score table JSON output path")

    p = add("ingest-scores", "merge an external metric CSV into a score table")
    p.add_argument("--table", required=True, help="score table JSON")
    p.add_argument("--csv", required=True, help="external scores CSV (crop_id,<metric...>)")
    p.add_argument("--expect", default="", help="comma-separated metric columns that must exist")
    p.add_argument("--out", required=True, help="merged score table output path")

    p = add("select", "normalize scores and select the top fraction")
    add_config(p)
    p.add_argument("--table", required=True, help="score table JSON")
    p.add_argument("--fraction", type=float, default=None, help="selection fraction override")
    p.add_argument("--out", required=True, help="manifest JSONL output path")

    p = add("degrade", "build degraded LQ counterparts for a manifest")
    p.add_argument("--manifest", required=True, help="selection manifest JSONL")
    p.add_argument("--out", required=True, help="output directory for LQ files and pairs.jsonl")
    p.add_argument("--seed", type=int, default=0, help="degradation seed")
    p.add_argument("--hq-root", default=None, help="base directory for relative crop paths")
    p.add_argument("--identity", action="store_true", help="use the identity (no-op) degradation config")
    p.add_argument("--lq-size", type=int, default=512, help="LQ output side (128 gives x4-downscaled pairs)")

    p = add("niqe-fit", "fit a pristine NIQE model from a directory of images")
    p.add_argument("--pristine-dir", required=True, help="directory of pristine images")
    p.add_argument("--out", required=True, help="model JSON output path")
    p.add_argument("--patch-size", type=int, default=96, help="feature patch size")
    p.add_argument("--sharpness-fraction", type=float, default=0.75, help="fraction of sharpest tiles kept")

    p = add("report", "print the funnel summary for a finished run")
    p.add_argument("--stats", required=True, help="funnel_stats.json from a run")

    p = add("holdout-split", "split a manifest into train/val by source dataset")
    p.add_argument("--manifest", required=True, help="selection manifest JSONL")
    p.add_argument("--val-origins", required=True, help="comma-separated origin prefixes for validation")
    p.add_argument("--out-train", required=True, help="training manifest output path")
    p.add_argument("--out-val", required=True, help="validation manifest output path")

    return parser


def _load_config(args, **overrides):
    from .orchestrator import PipelineConfig

    if not args.config:
        raise ConfigError("no config given (use --config or set HQCROP_CONFIG)")
    cfg = PipelineConfig.from_file(args.config)
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def _cmd_run(args, resume: bool) -> int:
    from . import orchestrator

    cfg = _load_config(
        args,
        workers=getattr(args, "workers", None),
        output_dir=getattr(args, "out", None),
        checkpoint_dir=getattr(args, "checkpoints", None),
        selection_fraction=getattr(args, "fraction", None),
        blur_variance_threshold=getattr(args, "blur_threshold", None),
        min_side=getattr(args, "min_side", None),
        iou_threshold=getattr(args, "iou_threshold", None),
    )

    def progress(done, total):
        print(f"shard {done}/{total}", file=sys.stderr)

    fn = orchestrator.resume if resume else orchestrator.run
    manifest, stats = fn(cfg, on_shard=progress)
    print(stats.to_text(), file=sys.stderr)
    print(f"manifest: {Path(cfg.output_dir) / 'manifest.jsonl'}", file=sys.stderr)
    return 0


def _read_records_jsonl(path):
    from .annotations import BBox, DatasetOrigin, SourceRecord

    records = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            records.append(
                SourceRecord(
                    image_id=d["image_id"],
                    image_path=d["image_path"],
                    dataset_origin=DatasetOrigin(d["dataset_origin"]),
                    width=d["width"],
                    height=d["height"],
                    person_boxes=[BBox(*b) for b in d["person_boxes"]],
                    confidences=d.get("confidences"),
                )
            )
    return records


def _write_records_jsonl(records, path):
    with open(path, "w") as f:
        for r in records:
            f.write(
                json.dumps(
                    {
                        "image_id": r.image_id,
                        "image_path": r.image_path,
                        "dataset_origin": r.dataset_origin.value,
                        "width": r.width,
                        "height": r.height,
                        "person_boxes": [[b.x, b.y, b.w, b.h] for b in r.person_boxes],
                        "confidences": r.confidences,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def _cmd_ingest(args) -> int:
    from . import orchestrator
    from .common import WarningSink

    cfg = _load_config(args)
    sink = WarningSink()
    records = orchestrator.ingest(cfg, sink)
    _write_records_jsonl(records, args.out)
    print(f"ingested {len(records)} person-labeled records", file=sys.stderr)
    return 0


def _cmd_gate(args) -> int:
    from . import imaging

    cfg = _load_config(args, blur_variance_threshold=getattr(args, "blur_threshold", None))
    records = _read_records_jsonl(args.records)
    kept = []
    for rec in records:
        gray = imaging.to_luma(imaging.load_image(rec.image_path))
        if imaging.laplacian_variance(gray) >= cfg.blur_variance_threshold:
            kept.append(rec)
    _write_records_jsonl(kept, args.out)
    print(f"blur gate kept {len(kept)}/{len(records)} records", file=sys.stderr)
    return 0


def _cmd_crop(args) -> int:
    from . import orchestrator
    from .iqa import niqe as niqe_mod

    cfg = _load_config(args, output_dir=args.out)
    records = _read_records_jsonl(args.records)
    os.makedirs(os.path.join(args.out, "crops"), exist_ok=True)
    ctx = {
        "model_path": cfg.niqe_model_path or os.path.abspath(niqe_mod.default_model_path()),
        "blur_threshold": 0.0,  # gate stage already ran
        "blur_gate_scope": "image",
        "min_side": cfg.min_side,
        "iou_threshold": cfg.iou_threshold,
        "crop_size": 512,
        "crop_format": cfg.crop_format,
        "output_dir": args.out,
        "fail_fast": cfg.fail_fast,
    }
    orchestrator._worker_init(ctx)
    rows = []
    for rec in records:
        rows.extend(orchestrator.process_record(rec, orchestrator._WORKER_CTX))
    with open(os.path.join(args.out, "crop_rows.jsonl"), "w") as f:
        for r in rows:
            f.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
    print(f"wrote {sum(1 for r in rows if r.status is None)} crops", file=sys.stderr)
    return 0


def _cmd_score(args) -> int:
    import numpy as np

    from .orchestrator import CropRow
    from .selection import RowMeta, ScoreTable

    _load_config(args)
    rows = []
    with open(args.crops) as f:
        for line in f:
            if line.strip():
                rows.append(CropRow.from_dict(json.loads(line)))
    scored = [r for r in rows if r.status is None]
    if not scored:
        raise PipelineError("no scored crop rows in input")
    table = ScoreTable(
        crop_ids=[r.crop_id for r in scored],
        columns={
            "niqe": np.array([r.niqe for r in scored]),
            "laplacian_variance": np.array([r.laplacian for r in scored]),
        },
        meta={r.crop_id: RowMeta(r.image_id, r.rect, r.crop_path) for r in scored},
    )
    table.to_json(args.out)
    print(f"scored table with {len(table)} rows -> {args.out}", file=sys.stderr)
    return 0


def _cmd_ingest_scores(args) -> int:
    from .common import WarningSink
    from .selection import ScoreTable, ingest_external_scores

    table = ScoreTable.from_json(args.table)
    expected = [m for m in args.expect.split(",") if m]
    sink = WarningSink()
    with open(args.csv) as f:
        merged = ingest_external_scores(table, f, expected, sink)
    merged.to_json(args.out)
    for msg in sink.messages:
        print(msg, file=sys.stderr)
    print(f"merged external scores -> {args.out}", file=sys.stderr)
    return 0


def _cmd_select(args) -> int:
    from .selection import ScoreTable, normalize, select_top

    cfg = _load_config(args, selection_fraction=getattr(args, "fraction", None)) if args.config else None
    fraction = args.fraction if args.fraction is not None else (
        cfg.selection_fraction if cfg else 1.0 / 3.0
    )
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"selection fraction must be in (0, 1], got {fraction}")
    specs = cfg.metrics if cfg else None
    if specs is None:
        from .selection import Direction, MetricSpec

        specs = [MetricSpec("niqe", Direction.LOWER_BETTER)]
    table = ScoreTable.from_json(args.table)
    table = normalize(table, specs)
    manifest = select_top(table, fraction, specs)
    manifest.write_jsonl(args.out)
    print(f"selected {len(manifest.selected())}/{len(manifest.entries)} crops", file=sys.stderr)
    return 0


def _cmd_degrade(args) -> int:
    from .degrade import DegradationConfig, build_pairs
    from .selection import SelectionManifest

    manifest = SelectionManifest.read_jsonl(args.manifest)
    hq_root = args.hq_root or str(Path(args.manifest).parent)
    for e in manifest.entries:
        if e.crop_path and not os.path.isabs(e.crop_path):
            e.crop_path = os.path.join(hq_root, e.crop_path)
    from .degrade import FinalStage

    if args.identity:
        cfg = DegradationConfig.identity(args.seed)
        if args.lq_size != 512:
            cfg = DegradationConfig(seed=cfg.seed, first=cfg.first, second=cfg.second,
                                    final=FinalStage(sinc_prob=0.0, output_size=args.lq_size))
    else:
        cfg = DegradationConfig(seed=args.seed, final=FinalStage(output_size=args.lq_size))
    records = build_pairs(manifest, cfg, args.out)
    print(f"wrote {len(records)} LQ/HQ pairs", file=sys.stderr)
    return 0


def _cmd_niqe_fit(args) -> int:
    from . import imaging
    from .iqa import niqe as niqe_mod

    paths = sorted(
        p for p in Path(args.pristine_dir).iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    if not paths:
        raise PipelineError(f"no images found in {args.pristine_dir}")
    images = [imaging.load_image(p) for p in paths]
    model = niqe_mod.fit(images, patch_size=args.patch_size, sharpness_fraction=args.sharpness_fraction)
    niqe_mod.save_model(model, args.out)
    print(f"fitted model on {len(images)} images -> {args.out}", file=sys.stderr)
    return 0


def _cmd_report(args) -> int:
    from .orchestrator import FunnelStats

    with open(args.stats) as f:
        d = json.load(f)
    stats = FunnelStats(**d)
    print(stats.to_text())
    return 0


def _cmd_holdout_split(args) -> int:
    from .selection import SelectionManifest

    manifest = SelectionManifest.read_jsonl(args.manifest)
    val_origins = {o.strip().lower() for o in args.val_origins.split(",") if o.strip()}
    train, val = [], []
    for e in manifest.entries:
        origin = e.source_image_id.split("/", 1)[0].lower()
        (val if origin in val_origins else train).append(e)
    SelectionManifest(entries=train).write_jsonl(args.out_train)
    SelectionManifest(entries=val).write_jsonl(args.out_val)
    print(f"split: {len(train)} train / {len(val)} val entries", file=sys.stderr)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "gate": _cmd_gate,
    "crop": _cmd_crop,
    "score": _cmd_score,
    "ingest-scores": _cmd_ingest_scores,
    "select": _cmd_select,
    "degrade": _cmd_degrade,
    "niqe-fit": _cmd_niqe_fit,
    "report": _cmd_report,
    "holdout-split": _cmd_holdout_split,
}


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args, resume=False)
        if args.command == "resume":
            return _cmd_run(args, resume=True)
        return _COMMANDS[args.command](args)
    except SystemExit as e:  # argparse help/usage errors carry the exit code
        return int(e.code or 0)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (PipelineError, ParseError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
