"""Landmark error metrics: NME, failure rate, CED/AUC and per-landmark errors.

All NME values are scaled by 100, so a failure threshold of ``10`` means a
mean point error of one tenth of the normalization factor.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .dataset import DatasetManifest
from .geometry import NUM_LANDMARKS, BoundingBox, NormalizationKind, normalization_factor

DEFAULT_THRESHOLD = 10.0


class MetricError(ValueError):
    pass


class NmeRecord(NamedTuple):
    image_id: str
    nme: float


def _point_errors(pred, gt) -> np.ndarray:
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(gt, dtype=np.float64)
    if diff.shape != (NUM_LANDMARKS, 2):
        raise MetricError(f"expected (68, 2) landmark arrays, got {diff.shape}")
    return np.hypot(diff[:, 0], diff[:, 1])


def nme(pred, gt, gt_box: Optional[BoundingBox] = None, norm=NormalizationKind.INTEROCULAR) -> float:
    """Normalized mean error (x100) of one prediction.

    ``gt_box`` is only used by the box-size norm; the minimal box of ``gt``
    is used when it is omitted.
    """
    factor = normalization_factor(gt, norm, gt_box)
    return 100.0 * float(np.mean(_point_errors(pred, gt))) / factor


@dataclass(frozen=True, eq=False)
class CedCurve:
    """Cumulative error distribution as an exact step function."""

    sorted_nmes: np.ndarray

    def __post_init__(self):
        arr = np.sort(np.asarray(self.sorted_nmes, dtype=np.float64))
        arr.flags.writeable = False
        object.__setattr__(self, "sorted_nmes", arr)

    @property
    def n(self) -> int:
        return len(self.sorted_nmes)

    def __call__(self, t):
        """Fraction of values ``<= t``; accepts scalars or arrays."""
        counts = np.searchsorted(self.sorted_nmes, t, side="right")
        return counts / self.n

    def steps(self, upper: float):
        """Vertices ``(xs, ys)`` of the staircase polyline on ``[0, upper]``."""
        values, counts = np.unique(self.sorted_nmes, return_counts=True)
        fractions = np.cumsum(counts) / self.n
        xs, ys = [0.0], [float(self(0.0))]
        for v, frac in zip(values, fractions):
            if v > upper:
                break
            if v > 0.0:
                xs += [float(v), float(v)]
                ys += [ys[-1], float(frac)]
        xs.append(float(upper))
        ys.append(ys[-1])
        return xs, ys


def ced_curve(nmes: Sequence[float]) -> CedCurve:
    values = np.asarray(list(nmes), dtype=np.float64)
    if values.size == 0:
        raise MetricError("CED curve needs at least one value")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise MetricError("NME values must be finite and non-negative")
    return CedCurve(values)


def auc(curve: CedCurve, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Area under the CED curve on ``[0, threshold]``, scaled to ``[0, 100]``.

    Integrates the step function in closed form::

        100 / (n T) * sum_i (T - min(nme_i, T))
    """
    if not threshold > 0:
        raise MetricError(f"AUC threshold must be positive, got {threshold}")
    capped = np.minimum(curve.sorted_nmes, threshold)
    return 100.0 * math.fsum(threshold - capped) / (curve.n * threshold)


def failure_rate(nmes: Sequence[float], threshold: float = DEFAULT_THRESHOLD) -> float:
    """Percentage of values strictly greater than ``threshold``."""
    values = np.asarray(list(nmes), dtype=np.float64)
    if values.size == 0:
        raise MetricError("failure rate needs at least one value")
    if not threshold > 0:
        raise MetricError(f"failure threshold must be positive, got {threshold}")
    return 100.0 * int(np.count_nonzero(values > threshold)) / values.size


def _covered_ids(manifest: DatasetManifest, preds) -> List[str]:
    return sorted(i for i in manifest.ids if i in preds)


def per_landmark_errors(preds, manifest: DatasetManifest, norm=NormalizationKind.INTEROCULAR) -> np.ndarray:
    ids = _covered_ids(manifest, preds)
    if not ids:
        raise MetricError("no image has both a prediction and ground truth")
    rows = []
    for image_id in ids:
        rec = manifest[image_id]
        factor = normalization_factor(rec.landmarks, norm, rec.box)
        rows.append(_point_errors(preds[image_id], rec.landmarks) / factor)
    return 100.0 * np.mean(np.stack(rows), axis=0)


@dataclass
class MetricReport:
    per_image: List[NmeRecord]
    normalization: NormalizationKind
    fr_threshold: float
    fr: float
    auc: float
    per_landmark: np.ndarray
    coverage: float
    dataset: str = ""
    model: str = ""

    @property
    def nmes(self) -> np.ndarray:
        return np.array([r.nme for r in self.per_image])

    @property
    def mean_nme(self) -> float:
        return math.fsum(r.nme for r in self.per_image) / len(self.per_image)

    @property
    def n(self) -> int:
        return len(self.per_image)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "model": self.model,
            "normalization": self.normalization.value,
            "fr_threshold": self.fr_threshold,
            "n_images": self.n,
            "coverage": self.coverage,
            "mean_nme": self.mean_nme,
            "fr": self.fr,
            "auc": self.auc,
            "per_landmark": [float(v) for v in self.per_landmark],
            "per_image": [{"image_id": r.image_id, "nme": r.nme} for r in self.per_image],
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricReport":
        return cls(
            per_image=[NmeRecord(r["image_id"], float(r["nme"])) for r in doc["per_image"]],
            normalization=NormalizationKind.parse(doc["normalization"]),
            fr_threshold=float(doc["fr_threshold"]),
            fr=float(doc["fr"]),
            auc=float(doc["auc"]),
            per_landmark=np.array(doc["per_landmark"], dtype=np.float64),
            coverage=float(doc["coverage"]),
            dataset=doc.get("dataset", ""),
            model=doc.get("model", ""),
        )

    def to_csv(self) -> str:
        """Per-image rows followed by ``aggregate:*`` footer rows."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["image_id", "nme"])
        writer.writerows([r.image_id, repr(r.nme)] for r in self.per_image)
        t = f"{self.fr_threshold:g}"
        writer.writerows([
            ["aggregate:mean_nme", repr(self.mean_nme)],
            [f"aggregate:fr@{t}", repr(self.fr)],
            [f"aggregate:auc@{t}", repr(self.auc)],
            ["aggregate:coverage", repr(self.coverage)],
        ])
        return out.getvalue()


def evaluate(manifest: DatasetManifest, preds, norm=NormalizationKind.INTEROCULAR,
             fr_threshold: float = DEFAULT_THRESHOLD, model: str = "") -> MetricReport:
    """Score ``preds`` against every manifest image that has a prediction.

    Images without a prediction are left out of all aggregates and show up
    only through ``coverage``.
    """
    norm = NormalizationKind.parse(norm)
    if len(manifest) == 0:
        raise MetricError("manifest is empty")
    ids = _covered_ids(manifest, preds)
    if not ids:
        raise MetricError(f"zero coverage: no predictions match the {len(manifest)} manifest images")
    per_image = []
    for image_id in ids:
        rec = manifest[image_id]
        per_image.append(NmeRecord(image_id, nme(preds[image_id], rec.landmarks, rec.box, norm)))
    values = [r.nme for r in per_image]
    return MetricReport(
        per_image=per_image,
        normalization=norm,
        fr_threshold=float(fr_threshold),
        fr=failure_rate(values, fr_threshold),
        auc=auc(ced_curve(values), fr_threshold),
        per_landmark=per_landmark_errors(preds, manifest, norm),
        coverage=len(ids) / len(manifest),
        dataset=manifest.name,
        model=model,
    )
