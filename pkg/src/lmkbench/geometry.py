"""Geometric primitives for 68-point landmark sets.

A landmark set is represented as a read-only ``(68, 2)`` float64 array of
``(x, y)`` pixel coordinates in Multi-PIE order.  Use :func:`as_landmarks`
to validate and freeze arbitrary array-likes.
"""
from __future__ import annotations

import enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np

NUM_LANDMARKS = 68

# 0-based Multi-PIE indices of the outer eye corners (points 37 and 46).
LEFT_OUTER_EYE = 36
RIGHT_OUTER_EYE = 45

# Index of the horizontally mirrored counterpart of each landmark.
MIRROR_INDEX = np.array(
    list(range(16, -1, -1))          # jaw
    + list(range(26, 21, -1))        # brows
    + list(range(21, 16, -1))
    + [27, 28, 29, 30]               # nose bridge
    + [35, 34, 33, 32, 31]           # nostrils
    + [45, 44, 43, 42, 47, 46]       # eyes
    + [39, 38, 37, 36, 41, 40]
    + [54, 53, 52, 51, 50, 49, 48]   # outer lips
    + [59, 58, 57, 56, 55]
    + [64, 63, 62, 61, 60]           # inner lips
    + [67, 66, 65]
)


class GeometryError(ValueError):
    """Raised for invalid or degenerate landmark geometry."""


class Point2(NamedTuple):
    x: float
    y: float


class BoundingBox(NamedTuple):
    """Upright box given by its top-left corner and size, in pixels."""

    x: float
    y: float
    w: float
    h: float

    @property
    def center(self) -> Point2:
        return Point2(self.x + self.w / 2.0, self.y + self.h / 2.0)

    def validate(self) -> "BoundingBox":
        vals = (self.x, self.y, self.w, self.h)
        if not all(np.isfinite(v) for v in vals):
            raise GeometryError(f"non-finite box {vals}")
        if self.w < 0 or self.h < 0:
            raise GeometryError(f"negative box size w={self.w}, h={self.h}")
        return self


class NormalizationKind(str, enum.Enum):
    INTEROCULAR = "iod"
    BOX_SIZE = "box"

    @classmethod
    def parse(cls, value: "str | NormalizationKind") -> "NormalizationKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown normalization {value!r}; expected 'iod' or 'box'") from None


class GeomStats(NamedTuple):
    mean_face_aspect_ratio: float
    mean_iod_over_box: float


def as_landmarks(points) -> np.ndarray:
    """Validate ``points`` as a 68x2 finite array and return a read-only copy."""
    arr = np.array(points, dtype=np.float64)
    if arr.shape != (NUM_LANDMARKS, 2):
        raise GeometryError(f"expected {NUM_LANDMARKS} points of shape (68, 2), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("landmark coordinates must be finite")
    arr.flags.writeable = False
    return arr


def minimal_bounding_box(landmarks: np.ndarray) -> BoundingBox:
    pts = np.asarray(landmarks, dtype=np.float64)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    return BoundingBox(float(lo[0]), float(lo[1]), float(hi[0] - lo[0]), float(hi[1] - lo[1]))


def box_size(box: BoundingBox) -> float:
    """Geometric mean of box width and height; 0 for a degenerate box."""
    if box.w < 0 or box.h < 0:
        raise GeometryError(f"negative box size w={box.w}, h={box.h}")
    return float(np.sqrt(box.w * box.h))


def interocular_distance(landmarks: np.ndarray) -> float:
    pts = np.asarray(landmarks, dtype=np.float64)
    d = pts[RIGHT_OUTER_EYE] - pts[LEFT_OUTER_EYE]
    return float(np.hypot(d[0], d[1]))


def normalization_factor(landmarks: np.ndarray, norm, box: BoundingBox | None = None) -> float:
    """Return the NME normalization factor of a ground-truth face.

    ``box`` overrides the minimal bounding box for the box-size norm.
    Zero factors are rejected.
    """
    norm = NormalizationKind.parse(norm)
    if norm is NormalizationKind.INTEROCULAR:
        factor = interocular_distance(landmarks)
    else:
        factor = box_size(box if box is not None else minimal_bounding_box(landmarks))
    if not factor > 0:
        raise GeometryError(f"degenerate normalization factor ({norm.value} = {factor})")
    return factor


def normalize_face(landmarks: np.ndarray, norm) -> np.ndarray:
    """Center a face on its minimal-box center and scale its normalization factor to 1."""
    pts = np.asarray(landmarks, dtype=np.float64)
    factor = normalization_factor(pts, norm)
    c = minimal_bounding_box(pts).center
    return (pts - np.array([c.x, c.y])) / factor


def mean_face(sets: Sequence[np.ndarray] | Iterable[np.ndarray], norm) -> np.ndarray:
    """Per-index mean of normalized faces (no rotational alignment)."""
    faces = [normalize_face(s, norm) for s in sets]
    if not faces:
        raise GeometryError("mean_face requires at least one landmark set")
    return as_landmarks(np.mean(np.stack(faces), axis=0))


def geometry_stats(records: Sequence[np.ndarray]) -> GeomStats:
    records = list(records)
    if not records:
        raise GeometryError("geometry_stats requires at least one landmark set")
    face = mean_face(records, NormalizationKind.BOX_SIZE)
    box = minimal_bounding_box(face)
    if not box.h > 0:
        raise GeometryError("mean face has zero height")
    ratios = [
        normalization_factor(r, NormalizationKind.INTEROCULAR) / normalization_factor(r, NormalizationKind.BOX_SIZE)
        for r in records
    ]
    return GeomStats(box.w / box.h, float(np.mean(ratios)))


def mirror(landmarks: np.ndarray, axis_x: float = 0.0) -> np.ndarray:
    """Reflect a face about the vertical line ``x = axis_x``, relabeling left/right points."""
    pts = np.array(landmarks, dtype=np.float64)[MIRROR_INDEX]
    pts[:, 0] = 2.0 * axis_x - pts[:, 0]
    return pts
