"""
Face detection average precision
================================

Simulate a detector that localizes most faces, misses a few and fires
some spurious boxes, then score it per split.
"""
import numpy as np

from lmkbench.dataset import Detection, SplitFilter
from lmkbench.detection import ap_by_split, iou
from lmkbench.geometry import BoundingBox
from lmkbench.synthetic import synthetic_manifest

rng = np.random.default_rng(2)
test = synthetic_manifest(200, 80, rng)

dets = {}
for rec in test:
    b = rec.box
    boxes = []
    # challenging faces are missed more often
    miss = 0.15 if rec.attributes.challenging else 0.02
    if rng.random() > miss:
        jitter = rng.normal(scale=0.05 * b.w, size=4)
        guess = BoundingBox(b.x + jitter[0], b.y + jitter[1], b.w + jitter[2], b.h + jitter[3])
        boxes.append(Detection(guess, float(rng.uniform(0.6, 1.0))))
    if rng.random() < 0.1:
        boxes.append(Detection(BoundingBox(*rng.uniform(0, 400, 2), 30, 30), float(rng.uniform(0, 0.7))))
    dets[rec.image_id] = boxes

first = test.records[0]
if dets[first.image_id]:
    print(f"IoU of first detection: {iou(dets[first.image_id][0].box, first.box):.3f}")

for iou_thresh in (0.5, 0.75):
    aps = ap_by_split(test, dets, (SplitFilter.ALL, SplitFilter.COMMON, SplitFilter.CHALLENGING), iou_thresh)
    print(f"IoU {iou_thresh}: " + ", ".join(f"{k} {100 * v:.1f}" for k, v in aps.items()))
