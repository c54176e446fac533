"""Annotation, prediction, detection and feature file formats.

Canonical formats
-----------------
* ``.pts``: 300-W landmark files (``version: 1``, ``n_points: 68``, braces).
* Manifest CSV: ``image_id, x1, y1, ..., x68, y68, turned, tilted, occluded,
  expressive`` and optionally ``box_x, box_y, box_w, box_h``.
* Predictions JSON-lines: ``{"image_id": ..., "points": [[x, y], ...]}``.
* Detections JSON-lines: ``{"image_id": ..., "boxes": [{"x", "y", "w", "h", "score"}, ...]}``.
* Features CSV: ``image_id`` followed by D real columns; an optional header
  row whose first cell is ``image_id`` is skipped.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional

import numpy as np

from .geometry import NUM_LANDMARKS, BoundingBox, GeometryError, as_landmarks, minimal_bounding_box

ATTRIBUTES = ("turned", "tilted", "occluded", "expressive")
BOX_COLUMNS = ("box_x", "box_y", "box_w", "box_h")
NUM_COORDS = 2 * NUM_LANDMARKS
COORD_COLUMNS = tuple(f"{axis}{i}" for i in range(1, NUM_LANDMARKS + 1) for axis in "xy")


class FormatError(ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


# ---------------------------------------------------------------------------
# .pts

def parse_pts(text: str, source: Optional[str] = None) -> np.ndarray:
    lines = text.splitlines()
    # index of the next line to consume; reported line numbers are 1-based
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            return None, len(lines)
        pos += 1
        return lines[pos - 1].strip(), pos

    n_points = None
    while True:
        line, lineno = next_line()
        if line is None:
            raise FormatError("unexpected end of file before '{'", lineno, source)
        if line == "{":
            break
        key, sep, value = line.partition(":")
        if not sep:
            raise FormatError(f"expected header 'key: value' or '{{', got {line!r}", lineno, source)
        key = key.strip().lower()
        if key == "n_points":
            try:
                n_points = int(value.strip())
            except ValueError:
                raise FormatError(f"invalid n_points {value.strip()!r}", lineno, source) from None
            if n_points != NUM_LANDMARKS:
                raise FormatError(f"expected {NUM_LANDMARKS} points, header declares n_points: {n_points}",
                                  lineno, source)
        elif key != "version":
            raise FormatError(f"unknown header key {key!r}", lineno, source)
    if n_points is None:
        raise FormatError("missing n_points header", lineno, source)

    points = []
    while True:
        line, lineno = next_line()
        if line is None:
            raise FormatError("missing closing '}'", lineno, source)
        if line == "}":
            break
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"expected 'x y', got {line!r}", lineno, source)
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise FormatError(f"non-numeric coordinate in {line!r}", lineno, source) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise FormatError(f"non-finite coordinate in {line!r}", lineno, source)
        points.append((x, y))
    if len(points) != NUM_LANDMARKS:
        raise FormatError(f"expected {NUM_LANDMARKS} points, found {len(points)}", lineno, source)
    trailing, lineno = next_line()
    if trailing is not None:
        raise FormatError(f"unexpected content after '}}': {trailing!r}", lineno, source)
    return as_landmarks(points)


def format_pts(landmarks, decimals: Optional[int] = None) -> str:
    """Serialize landmarks as ``.pts`` text.

    With ``decimals=None`` each coordinate is written in shortest round-trip
    form, so :func:`parse_pts` recovers the exact floats.
    """
    pts = as_landmarks(landmarks)
    fmt = repr if decimals is None else (lambda v: f"{v:.{decimals}f}")
    body = "\n".join(f"{fmt(float(x))} {fmt(float(y))}" for x, y in pts)
    return f"version: 1\nn_points: {NUM_LANDMARKS}\n{{\n{body}\n}}\n"


def read_pts(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return parse_pts(fh.read(), source=str(path))


def write_pts(path, landmarks, decimals: Optional[int] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_pts(landmarks, decimals))


# ---------------------------------------------------------------------------
# manifests

class FaceAttributes(NamedTuple):
    turned: bool = False
    tilted: bool = False
    occluded: bool = False
    expressive: bool = False

    @property
    def challenging(self) -> bool:
        return any(self)


@dataclass(frozen=True, eq=False)
class FaceRecord:
    image_id: str
    landmarks: np.ndarray
    attributes: FaceAttributes = FaceAttributes()
    bbox: Optional[BoundingBox] = None

    def __post_init__(self):
        if not self.image_id:
            raise FormatError("image_id must be non-empty")
        object.__setattr__(self, "landmarks", as_landmarks(self.landmarks))

    @property
    def box(self) -> BoundingBox:
        """Annotated box, or the minimal box of the landmarks when absent."""
        return self.bbox if self.bbox is not None else minimal_bounding_box(self.landmarks)


@dataclass(frozen=True, eq=False)
class DatasetManifest:
    records: tuple
    name: str = ""
    _index: Dict[str, FaceRecord] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        records = tuple(self.records)
        index = {}
        for rec in records:
            if rec.image_id in index:
                raise FormatError(f"duplicate image_id {rec.image_id!r}")
            index[rec.image_id] = rec
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __contains__(self, image_id):
        return image_id in self._index

    def __getitem__(self, image_id: str) -> FaceRecord:
        return self._index[image_id]

    @property
    def ids(self) -> List[str]:
        return [r.image_id for r in self.records]


def _parse_flag(cell: str, column: str, lineno: int, source) -> bool:
    cell = cell.strip()
    if cell == "1":
        return True
    if cell == "0":
        return False
    raise FormatError(f"attribute {column!r} must be 0 or 1, got {cell!r}", lineno, source)


def _parse_float(cell: str, column: str, lineno: int, source) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise FormatError(f"non-numeric value {cell.strip()!r} in column {column!r}", lineno, source) from None
    if not math.isfinite(value):
        raise FormatError(f"non-finite value {cell.strip()!r} in column {column!r}", lineno, source)
    return value


def parse_manifest(text: str, name: str = "", source: Optional[str] = None) -> DatasetManifest:
    rows = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(rows)]
    except StopIteration:
        raise FormatError("empty manifest", 1, source) from None

    if not header or header[0] != "image_id":
        raise FormatError("first column must be 'image_id'", 1, source)
    coord_cols = [h for h in header if re.fullmatch(r"[xy]\d+", h)]
    if len(coord_cols) != NUM_COORDS:
        raise FormatError(f"expected {NUM_COORDS} coordinates, header has {len(coord_cols)}", 1, source)
    if tuple(header[1:1 + NUM_COORDS]) != COORD_COLUMNS:
        raise FormatError("coordinate columns must be x1,y1,...,x68,y68 in order", 1, source)
    rest = header[1 + NUM_COORDS:]
    if tuple(rest[:4]) != ATTRIBUTES:
        raise FormatError(f"expected attribute columns {','.join(ATTRIBUTES)} after coordinates", 1, source)
    has_box = tuple(rest[4:]) == BOX_COLUMNS
    if rest[4:] and not has_box:
        raise FormatError(f"unexpected trailing columns {rest[4:]}; optional columns are {','.join(BOX_COLUMNS)}",
                          1, source)

    records = []
    seen = {}
    for row in rows:
        lineno = rows.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            got = len(row) - (len(header) - NUM_COORDS)
            raise FormatError(f"expected {NUM_COORDS} coordinates, got {got} "
                              f"({len(row)} cells for {len(header)} columns)", lineno, source)
        image_id = row[0].strip()
        if not image_id:
            raise FormatError("empty image_id", lineno, source)
        if image_id in seen:
            raise FormatError(f"duplicate image_id {image_id!r} (first seen on line {seen[image_id]})",
                              lineno, source)
        seen[image_id] = lineno
        coords = [_parse_float(c, h, lineno, source) for c, h in zip(row[1:1 + NUM_COORDS], COORD_COLUMNS)]
        flags = [_parse_flag(c, h, lineno, source)
                 for c, h in zip(row[1 + NUM_COORDS:5 + NUM_COORDS], ATTRIBUTES)]
        bbox = None
        if has_box:
            vals = [c.strip() for c in row[5 + NUM_COORDS:]]
            if any(vals):
                nums = [_parse_float(c, h, lineno, source) for c, h in zip(vals, BOX_COLUMNS)]
                try:
                    bbox = BoundingBox(*nums).validate()
                except GeometryError as exc:
                    raise FormatError(str(exc), lineno, source) from None
        records.append(FaceRecord(image_id, np.reshape(coords, (NUM_LANDMARKS, 2)),
                                  FaceAttributes(*flags), bbox))
    return DatasetManifest(tuple(records), name=name)


def load_manifest(path, name: Optional[str] = None) -> DatasetManifest:
    if name is None:
        name = os.path.splitext(os.path.basename(str(path)))[0]
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_manifest(fh.read(), name=name, source=str(path))


def format_manifest(manifest: DatasetManifest) -> str:
    with_box = any(r.bbox is not None for r in manifest)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["image_id", *COORD_COLUMNS, *ATTRIBUTES, *(BOX_COLUMNS if with_box else ())])
    for rec in manifest:
        row = [rec.image_id, *(repr(float(v)) for v in rec.landmarks.ravel()),
               *(int(f) for f in rec.attributes)]
        if with_box:
            row += [repr(float(v)) for v in rec.bbox] if rec.bbox is not None else [""] * 4
        writer.writerow(row)
    return out.getvalue()


def save_manifest(path, manifest: DatasetManifest) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_manifest(manifest))


# ---------------------------------------------------------------------------
# splits

@dataclass(frozen=True)
class SplitFilter:
    """Record filter: ``all``, ``common``, ``challenging`` or a single attribute test."""

    kind: str = "all"
    attribute: Optional[str] = None
    value: bool = True

    def __post_init__(self):
        if self.kind not in ("all", "common", "challenging", "attribute"):
            raise ValueError(f"unknown split kind {self.kind!r}")
        if self.kind == "attribute" and self.attribute not in ATTRIBUTES:
            raise ValueError(f"unknown attribute {self.attribute!r}; expected one of {ATTRIBUTES}")

    @classmethod
    def by_attribute(cls, attribute: str, value: bool = True) -> "SplitFilter":
        return cls("attribute", attribute, bool(value))

    @classmethod
    def parse(cls, text: str) -> "SplitFilter":
        """Parse ``all``, ``common``, ``challenging``, ``tilted`` or ``tilted=0``."""
        text = text.strip().lower()
        if text in ("all", "common", "challenging"):
            return cls(text)
        attr, _, value = text.partition("=")
        if value not in ("", "0", "1"):
            raise ValueError(f"invalid split {text!r}")
        return cls.by_attribute(attr, value != "0")

    @property
    def label(self) -> str:
        if self.kind == "attribute":
            return self.attribute if self.value else f"not-{self.attribute}"
        return self.kind

    def accepts(self, record: FaceRecord) -> bool:
        if self.kind == "all":
            return True
        if self.kind == "common":
            return not record.attributes.challenging
        if self.kind == "challenging":
            return record.attributes.challenging
        return getattr(record.attributes, self.attribute) == self.value


SplitFilter.ALL = SplitFilter("all")
SplitFilter.COMMON = SplitFilter("common")
SplitFilter.CHALLENGING = SplitFilter("challenging")


def filter_split(manifest: DatasetManifest, split: SplitFilter) -> DatasetManifest:
    if isinstance(split, str):
        split = SplitFilter.parse(split)
    if split.kind == "all":
        return manifest
    name = f"{manifest.name}-{split.label}" if manifest.name else split.label
    return DatasetManifest(tuple(r for r in manifest if split.accepts(r)), name=name)


# ---------------------------------------------------------------------------
# predictions and detections

class Detection(NamedTuple):
    box: BoundingBox
    score: float


def _json_lines(text: str, source):
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed JSON: {exc.msg}", lineno, source) from None
        if not isinstance(obj, dict):
            raise FormatError("each line must be a JSON object", lineno, source)
        image_id = obj.get("image_id")
        if not isinstance(image_id, str) or not image_id:
            raise FormatError("missing or empty 'image_id'", lineno, source)
        yield lineno, image_id, obj


def parse_predictions(text: str, source: Optional[str] = None) -> Dict[str, np.ndarray]:
    preds = {}
    for lineno, image_id, obj in _json_lines(text, source):
        if image_id in preds:
            raise FormatError(f"duplicate image_id {image_id!r}", lineno, source)
        points = obj.get("points")
        if not isinstance(points, list) or any(not isinstance(p, list) or len(p) != 2 for p in points):
            raise FormatError("'points' must be a list of [x, y] pairs", lineno, source)
        if len(points) != NUM_LANDMARKS:
            raise FormatError(f"expected {NUM_LANDMARKS} points, got {len(points)}", lineno, source)
        try:
            preds[image_id] = as_landmarks(points)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"invalid coordinates: {exc}", lineno, source) from None
    return preds


def load_predictions(path) -> Dict[str, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        return parse_predictions(fh.read(), source=str(path))


def format_predictions(preds: Dict[str, np.ndarray]) -> str:
    return "".join(
        json.dumps({"image_id": k, "points": np.asarray(v, dtype=float).tolist()}) + "\n"
        for k, v in preds.items()
    )


def parse_detections(text: str, source: Optional[str] = None) -> Dict[str, List[Detection]]:
    dets = {}
    for lineno, image_id, obj in _json_lines(text, source):
        if image_id in dets:
            raise FormatError(f"duplicate image_id {image_id!r}", lineno, source)
        boxes = obj.get("boxes")
        if not isinstance(boxes, list):
            raise FormatError("'boxes' must be a list", lineno, source)
        entries = []
        for b in boxes:
            try:
                vals = [float(b[k]) for k in ("x", "y", "w", "h", "score")]
            except (KeyError, TypeError, ValueError):
                raise FormatError("each box needs numeric x, y, w, h, score", lineno, source) from None
            if not all(math.isfinite(v) for v in vals):
                raise FormatError("non-finite box value", lineno, source)
            x, y, w, h, score = vals
            if w < 0 or h < 0:
                raise FormatError(f"negative box size w={w}, h={h}", lineno, source)
            if not 0.0 <= score <= 1.0:
                raise FormatError(f"score {score} outside [0, 1]", lineno, source)
            entries.append(Detection(BoundingBox(x, y, w, h), score))
        dets[image_id] = entries
    return dets


def load_detections(path) -> Dict[str, List[Detection]]:
    with open(path, encoding="utf-8") as fh:
        return parse_detections(fh.read(), source=str(path))


def format_detections(dets: Dict[str, List[Detection]]) -> str:
    lines = []
    for image_id, entries in dets.items():
        boxes = [dict(zip("xywh", map(float, d.box)), score=float(d.score)) for d in entries]
        lines.append(json.dumps({"image_id": image_id, "boxes": boxes}) + "\n")
    return "".join(lines)


# ---------------------------------------------------------------------------
# features

@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    ids: tuple
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != len(self.ids):
            raise FormatError(f"feature matrix shape {data.shape} does not match {len(self.ids)} ids")
        if not np.all(np.isfinite(data)):
            raise FormatError("feature values must be finite")
        if len(set(self.ids)) != len(self.ids):
            raise FormatError("duplicate image_id in feature matrix")
        data.flags.writeable = False
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def parse_features(text: str, source: Optional[str] = None) -> FeatureMatrix:
    ids, rows = [], []
    dim = None
    reader = csv.reader(io.StringIO(text))
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if not rows and row[0].strip() == "image_id":
            continue
        values = row[1:]
        if dim is None:
            dim = len(values)
            if dim == 0:
                raise FormatError("no feature columns", lineno, source)
        elif len(values) != dim:
            raise FormatError(f"ragged row: expected {dim} values, got {len(values)}", lineno, source)
        try:
            vec = [float(v) for v in values]
        except ValueError:
            raise FormatError("non-numeric feature value", lineno, source) from None
        if not all(math.isfinite(v) for v in vec):
            raise FormatError("non-finite feature value", lineno, source)
        ids.append(row[0].strip())
        rows.append(vec)
    if not rows:
        raise FormatError("no feature rows", None, source)
    return FeatureMatrix(tuple(ids), np.array(rows))


def load_features(path) -> FeatureMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_features(fh.read(), source=str(path))


def format_features(features: FeatureMatrix) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for image_id, row in zip(features.ids, features.data):
        writer.writerow([image_id, *(repr(float(v)) for v in row)])
    return out.getvalue()
