"""Batch scoring: crop list in, scores CSV out.

Input is a text file of ``crop_id<TAB>path`` lines; output is a CSV with
the exact header ``crop_id,clipiqa,maniqa,musiq``, one row per readable
input, ordered by crop_id.  Unreadable images are omitted from the CSV
and listed in a sidecar error file.  Duplicate crop_ids abort before any
scoring happens.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .backends import METRIC_ORDER, SCORE_RANGES, MetricBackend

CSV_HEADER = "crop_id,clipiqa,maniqa,musiq"


class ScorerError(Exception):
    pass


@dataclass(frozen=True)
class CropRef:
    crop_id: str
    path: str


def read_crop_list(path: str | os.PathLike) -> list[CropRef]:
    refs: list[CropRef] = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ScorerError(f"line {lineno}: expected 'crop_id<TAB>path'")
            refs.append(CropRef(parts[0], parts[1]))
    seen: set[str] = set()
    for ref in refs:
        if ref.crop_id in seen:
            raise ScorerError(f"duplicate crop_id in input: {ref.crop_id}")
        seen.add(ref.crop_id)
    return refs


def _load(path: str) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode != "RGB":
            im = im.convert("RGB")
        return np.asarray(im, dtype=np.float64)


def _validate_row(crop_id: str, row: dict[str, float]) -> dict[str, float]:
    out = {}
    for name in METRIC_ORDER:
        value = float(row[name])
        lo, hi = SCORE_RANGES[name]
        if not np.isfinite(value):
            raise ScorerError(f"{crop_id}: non-finite {name} score")
        out[name] = min(max(value, lo), hi)
    return out


def score_crops(
    refs: list[CropRef],
    backend: MetricBackend,
    batch_size: int = 16,
) -> tuple[list[tuple[str, dict[str, float]]], list[tuple[str, str]]]:
    """Score readable crops; returns (rows sorted by crop_id, errors)."""
    ordered = sorted(refs, key=lambda r: r.crop_id)
    errors: list[tuple[str, str]] = []
    loaded: list[tuple[str, np.ndarray]] = []
    for ref in ordered:
        try:
            loaded.append((ref.crop_id, _load(ref.path)))
        except (OSError, ValueError) as e:
            errors.append((ref.crop_id, f"{ref.path}: {e}"))
    rows: list[tuple[str, dict[str, float]]] = []
    for start in range(0, len(loaded), batch_size):
        chunk = loaded[start : start + batch_size]
        scored = backend.score_batch([img for _, img in chunk])
        for (crop_id, _), row in zip(chunk, scored):
            rows.append((crop_id, _validate_row(crop_id, row)))
    return rows, errors


def write_csv(rows: list[tuple[str, dict[str, float]]], path: str | os.PathLike) -> None:
    with open(path, "w") as f:
        f.write(CSV_HEADER + "\n")
        for crop_id, row in rows:
            f.write(
                f"{crop_id},{row['clipiqa']:.6f},{row['maniqa']:.6f},{row['musiq']:.4f}\n"
            )


def write_errors(errors: list[tuple[str, str]], path: str | os.PathLike) -> None:
    if not errors:
        return
    with open(path, "w") as f:
        for crop_id, message in errors:
            f.write(f"{crop_id}\t{message}\n")


def run(
    crop_list: str | os.PathLike,
    out_csv: str | os.PathLike,
    backend: MetricBackend,
    batch_size: int = 16,
    error_file: str | os.PathLike | None = None,
) -> tuple[int, int]:
    """Full scoring pass; returns (rows written, errors)."""
    refs = read_crop_list(crop_list)
    rows, errors = score_crops(refs, backend, batch_size=batch_size)
    write_csv(rows, out_csv)
    if error_file is None:
        error_file = str(out_csv) + ".errors"
    write_errors(errors, error_file)
    return len(rows), len(errors)
