"""Parsers that turn heterogeneous detection annotations into person records.

Four input families are supported: COCO-style JSON (COCO, Object365),
OID box CSVs, ODGT JSON-lines (CrowdHuman), and pre-computed detector
output in a simple JSON-lines schema.  Every parser yields
:class:`SourceRecord` objects whose boxes are clamped to the image bounds;
images without a usable person box are omitted.

Parsers are pure stream transducers: one instance per input shard can run
concurrently, with warnings collected in a per-shard :class:`WarningSink`.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum
from typing import IO, Callable, Iterator, Mapping

from .common import ParseError, WarningSink


class DatasetOrigin(str, Enum):
    COCO = "COCO"
    OID = "OID"
    OBJECT365 = "Object365"
    CROWDHUMAN = "CrowdHuman"
    DETECTION_IMPORT = "DetectionImport"


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in source-image pixel coordinates (x, y = top-left)."""

    x: float
    y: float
    w: float
    h: float

    def clamped(self, img_w: float, img_h: float) -> "BBox | None":
        """Clamp to image bounds; None if nothing positive-area remains."""
        x0 = min(max(self.x, 0.0), img_w)
        y0 = min(max(self.y, 0.0), img_h)
        x1 = min(max(self.x + self.w, 0.0), img_w)
        y1 = min(max(self.y + self.h, 0.0), img_h)
        if x1 - x0 <= 0 or y1 - y0 <= 0:
            return None
        return BBox(x0, y0, x1 - x0, y1 - y0)

    def inside(self, img_w: float, img_h: float) -> bool:
        return (
            self.x >= 0
            and self.y >= 0
            and self.w > 0
            and self.h > 0
            and self.x + self.w <= img_w
            and self.y + self.h <= img_h
        )


@dataclass
class SourceRecord:
    """One source image with its person boxes and provenance."""

    image_id: str
    image_path: str
    dataset_origin: DatasetOrigin
    width: int
    height: int
    person_boxes: list[BBox]
    confidences: list[float] | None = None


@dataclass(frozen=True)
class LabelAliasMap:
    """Person-label synonyms, matched case-insensitively after trimming."""

    canonical: str
    aliases: frozenset[str]

    def __post_init__(self):
        object.__setattr__(
            self, "aliases", frozenset(a.strip().lower() for a in self.aliases)
        )

    def matches(self, label: str) -> bool:
        return label.strip().lower() in self.aliases

    @classmethod
    def default(cls) -> "LabelAliasMap":
        # Covers COCO "person", OID "Human body"/"Person" plus their machine
        # ids, Object365 "Person" and CrowdHuman's "person" tag.  Overridable
        # through PipelineConfig.
        return cls(
            canonical="person",
            aliases=frozenset(
                {
                    "person",
                    "human body",
                    "human",
                    "/m/01g317",  # OID: Person
                    "/m/02p0tk3",  # OID: Human body
                }
            ),
        )


def _as_text(stream: IO[bytes] | IO[str]) -> IO[str]:
    if isinstance(stream, io.TextIOBase):
        return stream
    data = stream.read()
    if isinstance(data, bytes):
        return io.StringIO(data.decode("utf-8"))
    return io.StringIO(data)


def parse_coco(
    stream: IO[bytes] | IO[str],
    aliases: LabelAliasMap,
    origin: DatasetOrigin = DatasetOrigin.COCO,
    sink: WarningSink | None = None,
) -> Iterator[SourceRecord]:
    """Parse a COCO-format annotation document (also used for Object365).

    Yields one record per image with at least one alias-matching box, in
    the document's ``images`` order.  Boxes are clamped to image bounds;
    degenerate boxes are dropped with a warning.
    """
    sink = sink if sink is not None else WarningSink()
    text = _as_text(stream).read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed COCO document: {e.msg}", byte_offset=e.pos)

    person_cat_ids = {
        c["id"] for c in doc.get("categories", []) if aliases.matches(str(c.get("name", "")))
    }
    images = {img["id"]: img for img in doc.get("images", [])}
    sink.count("images_seen", len(images))
    boxes_by_image: dict = {img_id: [] for img_id in images}

    for ann in doc.get("annotations", []):
        if ann.get("category_id") not in person_cat_ids:
            continue
        img_id = ann.get("image_id")
        if img_id not in images:
            sink.warn("unknown_image_id", f"annotation {ann.get('id')} references image {img_id}")
            continue
        img = images[img_id]
        bx = ann.get("bbox")
        if not bx or len(bx) != 4:
            sink.warn("bad_bbox", f"annotation {ann.get('id')} has malformed bbox")
            continue
        box = BBox(float(bx[0]), float(bx[1]), float(bx[2]), float(bx[3]))
        clamped = box.clamped(float(img["width"]), float(img["height"]))
        if clamped is None:
            sink.warn("degenerate_box", f"annotation {ann.get('id')} empty after clamping")
            continue
        boxes_by_image[img_id].append(clamped)

    for img_id, img in images.items():
        boxes = boxes_by_image[img_id]
        if not boxes:
            continue
        yield SourceRecord(
            image_id=str(img_id),
            image_path=str(img.get("file_name", "")),
            dataset_origin=origin,
            width=int(img["width"]),
            height=int(img["height"]),
            person_boxes=boxes,
        )


def parse_oid_csv(
    stream: IO[bytes] | IO[str],
    image_dims: Mapping[str, tuple[int, int]] | Callable[[str], tuple[int, int] | None],
    aliases: LabelAliasMap,
    use_confidence: bool = False,
    min_confidence: float = 0.0,
    sink: WarningSink | None = None,
) -> Iterator[SourceRecord]:
    """Parse an OID-style box CSV with normalized [0, 1] coordinates.

    ``image_dims`` maps ImageID to (width, height), typically filled by
    reading image headers during ingestion.  The per-row Confidence column
    is ignored unless ``use_confidence`` is set.  Records are yielded in
    first-appearance order of their ImageID.
    """
    sink = sink if sink is not None else WarningSink()
    lookup = image_dims if callable(image_dims) else image_dims.get
    reader = csv.DictReader(_as_text(stream))
    boxes_by_image: dict[str, list[BBox]] = {}
    dims_by_image: dict[str, tuple[int, int]] = {}
    all_image_ids: set[str] = set()

    for row in reader:
        all_image_ids.add(row.get("ImageID", ""))
        label = row.get("LabelName", "")
        if not aliases.matches(label):
            continue
        image_id = row.get("ImageID", "")
        dims = lookup(image_id)
        if dims is None:
            sink.count("missing_dims")
            continue
        w, h = dims
        try:
            xmin, xmax = float(row["XMin"]), float(row["XMax"])
            ymin, ymax = float(row["YMin"]), float(row["YMax"])
        except (KeyError, ValueError):
            sink.warn("bad_row", f"unparseable coordinates for {image_id}")
            continue
        if use_confidence:
            try:
                conf = float(row.get("Confidence", "1") or "1")
            except ValueError:
                conf = 1.0
            if conf < min_confidence:
                continue
        vals = [xmin, xmax, ymin, ymax]
        if any(v < 0.0 or v > 1.0 for v in vals):
            sink.warn("out_of_range", f"normalized value outside [0,1] for {image_id}")
            xmin, xmax = min(max(xmin, 0.0), 1.0), min(max(xmax, 0.0), 1.0)
            ymin, ymax = min(max(ymin, 0.0), 1.0), min(max(ymax, 0.0), 1.0)
        if xmax <= xmin or ymax <= ymin:
            sink.warn("degenerate_box", f"zero-extent box for {image_id}")
            continue
        box = BBox(xmin * w, ymin * h, (xmax - xmin) * w, (ymax - ymin) * h)
        clamped = box.clamped(float(w), float(h))
        if clamped is None:
            sink.warn("degenerate_box", f"empty box after clamping for {image_id}")
            continue
        boxes_by_image.setdefault(image_id, []).append(clamped)
        dims_by_image[image_id] = (w, h)

    sink.count("images_seen", len(all_image_ids))
    for image_id, boxes in boxes_by_image.items():
        w, h = dims_by_image[image_id]
        yield SourceRecord(
            image_id=image_id,
            image_path="",
            dataset_origin=DatasetOrigin.OID,
            width=int(w),
            height=int(h),
            person_boxes=boxes,
        )


def parse_odgt(
    stream: IO[bytes] | IO[str],
    image_dims: Mapping[str, tuple[int, int]] | Callable[[str], tuple[int, int] | None],
    sink: WarningSink | None = None,
) -> Iterator[SourceRecord]:
    """Parse CrowdHuman-style ODGT (one JSON object per line).

    Keeps full-body boxes (``fbox``) tagged ``person`` whose ignore
    attribute is unset.  ``image_dims`` supplies (width, height) read from
    image headers; lines whose image has no known dims are skipped.
    """
    sink = sink if sink is not None else WarningSink()
    lookup = image_dims if callable(image_dims) else image_dims.get

    for lineno, line in enumerate(_as_text(stream), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            sink.warn("bad_line", f"unparseable ODGT line {lineno}")
            continue
        image_id = str(obj.get("ID", ""))
        if not image_id:
            sink.warn("bad_line", f"ODGT line {lineno} missing ID")
            continue
        sink.count("images_seen")
        dims = lookup(image_id)
        if dims is None:
            sink.count("missing_dims")
            continue
        w, h = dims
        boxes = []
        for gt in obj.get("gtboxes", []):
            if gt.get("tag") != "person":
                continue
            extra = gt.get("extra", {}) or {}
            head_attr = gt.get("head_attr", {}) or {}
            if extra.get("ignore") or head_attr.get("ignore"):
                continue
            fbox = gt.get("fbox")
            if not fbox or len(fbox) != 4:
                sink.warn("bad_bbox", f"malformed fbox in {image_id}")
                continue
            box = BBox(float(fbox[0]), float(fbox[1]), float(fbox[2]), float(fbox[3]))
            clamped = box.clamped(float(w), float(h))
            if clamped is None:
                sink.warn("degenerate_box", f"fbox empty after clamping in {image_id}")
                continue
            boxes.append(clamped)
        if not boxes:
            continue
        yield SourceRecord(
            image_id=image_id,
            image_path="",
            dataset_origin=DatasetOrigin.CROWDHUMAN,
            width=int(w),
            height=int(h),
            person_boxes=boxes,
        )


def parse_detection_import(
    stream: IO[bytes] | IO[str],
    min_confidence: float = 0.5,
    person_cls: int | None = 0,
    sink: WarningSink | None = None,
) -> Iterator[SourceRecord]:
    """Parse pre-computed detector output (JSON lines).

    Each line is ``{image, width, height, boxes: [{x1, y1, x2, y2, conf,
    cls}]}`` with corner coordinates in pixels.  Boxes below
    ``min_confidence`` or with a class other than ``person_cls`` are
    dropped; records with no surviving box are omitted.
    """
    sink = sink if sink is not None else WarningSink()

    for lineno, line in enumerate(_as_text(stream), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            image = str(obj["image"])
            w, h = float(obj["width"]), float(obj["height"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            sink.warn("bad_line", f"unparseable detection line {lineno}")
            continue
        sink.count("images_seen")
        boxes: list[BBox] = []
        confs: list[float] = []
        for det in obj.get("boxes", []):
            try:
                x1, y1 = float(det["x1"]), float(det["y1"])
                x2, y2 = float(det["x2"]), float(det["y2"])
                conf = float(det["conf"])
                cls = det.get("cls")
            except (KeyError, TypeError, ValueError):
                sink.warn("bad_bbox", f"malformed box on line {lineno}")
                continue
            if person_cls is not None and cls != person_cls:
                continue
            if conf < min_confidence:
                continue
            if x2 <= x1 or y2 <= y1:
                sink.warn("degenerate_box", f"inverted corners on line {lineno}")
                continue
            clamped = BBox(x1, y1, x2 - x1, y2 - y1).clamped(w, h)
            if clamped is None:
                sink.warn("degenerate_box", f"box empty after clamping on line {lineno}")
                continue
            boxes.append(clamped)
            confs.append(conf)
        if not boxes:
            continue
        yield SourceRecord(
            image_id=image,
            image_path=image,
            dataset_origin=DatasetOrigin.DETECTION_IMPORT,
            width=int(w),
            height=int(h),
            person_boxes=boxes,
            confidences=confs,
        )
