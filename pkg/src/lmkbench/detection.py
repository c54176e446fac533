"""Face-detection scoring: IoU, greedy matching and all-points average precision."""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, NamedTuple, Sequence, Tuple

from .dataset import DatasetManifest, Detection, filter_split
from .geometry import BoundingBox

DEFAULT_IOU = 0.5


class Match(NamedTuple):
    score: float
    is_tp: bool


def iou(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = a.w * a.h + b.w * b.h - inter
    if union <= 0:
        return 0.0
    return min(1.0, inter / union)


def match_detections(dets: Sequence[Detection], gts: Sequence[BoundingBox],
                     iou_thresh: float = DEFAULT_IOU) -> List[Match]:
    """Greedily match detections to ground truth in descending score order.

    Each detection takes the unmatched ground truth of highest IoU (lowest
    index on ties) if that IoU reaches ``iou_thresh``.  Equal scores keep
    input order.  Returns matches in processing order.
    """
    if not 0.0 < iou_thresh <= 1.0:
        raise ValueError(f"iou_thresh must be in (0, 1], got {iou_thresh}")
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    taken = [False] * len(gts)
    out = []
    for i in order:
        best, best_iou = -1, iou_thresh
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            o = iou(dets[i].box, gt)
            if o >= best_iou and (best < 0 or o > best_iou):
                best, best_iou = j, o
        if best >= 0:
            taken[best] = True
        out.append(Match(float(dets[i].score), best >= 0))
    return out


def precision_recall(matches: Iterable[Tuple[float, bool]], num_gt: int) -> List[Tuple[Fraction, Fraction]]:
    """Exact ``(recall, precision)`` after each detection in descending score order."""
    if num_gt < 1:
        raise ValueError("num_gt must be at least 1")
    ranked = sorted(matches, key=lambda m: -m[0])
    points = []
    tp = 0
    for k, (_, is_tp) in enumerate(ranked, start=1):
        tp += bool(is_tp)
        if tp > num_gt:
            raise ValueError(f"{tp} true positives exceed num_gt={num_gt}")
        points.append((Fraction(tp, num_gt), Fraction(tp, k)))
    return points


def average_precision(matches: Iterable[Tuple[float, bool]], num_gt: int) -> float:
    """All-points interpolated AP in ``[0, 1]``.

    Sums recall increments weighted by the best precision attained at any
    equal or higher recall.  Exact: precisions are compared as integer
    ratios and the sum is formed as one rational, rounded once.
    """
    if num_gt < 1:
        raise ValueError("num_gt must be at least 1")
    ranked = sorted(matches, key=lambda m: -m[0])
    cum = []
    tp = 0
    for _, is_tp in ranked:
        tp += bool(is_tp)
        cum.append(tp)
    if tp > num_gt:
        raise ValueError(f"{tp} true positives exceed num_gt={num_gt}")
    # right-to-left sweep; best precision so far is bn / bd
    an, ad = 0, 1
    bn, bd = 0, 1
    for k in range(len(cum), 0, -1):
        t = cum[k - 1]
        if t * bd > bn * k:
            bn, bd = t, k
        if ranked[k - 1][1] and t > 0:
            # each TP raises recall by 1 / num_gt
            an, ad = an * bd + bn * ad, ad * bd
    return float(Fraction(an, ad * num_gt))


def dataset_average_precision(manifest: DatasetManifest, dets: Mapping[str, Sequence[Detection]],
                              iou_thresh: float = DEFAULT_IOU) -> float:
    """AP over a manifest with one ground-truth face per image.

    The ground-truth box is the annotated box, else the landmarks' minimal box.
    Images absent from ``dets`` count as having no detections.
    """
    matches: List[Match] = []
    for rec in sorted(manifest, key=lambda r: r.image_id):
        matches += match_detections(dets.get(rec.image_id, ()), [rec.box], iou_thresh)
    return average_precision(matches, len(manifest))


def ap_by_split(manifest: DatasetManifest, dets: Mapping[str, Sequence[Detection]], splits,
                iou_thresh: float = DEFAULT_IOU) -> Dict[str, float]:
    return {
        split.label: dataset_average_precision(filter_split(manifest, split), dets, iou_thresh)
        for split in splits
    }
