import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from lmkbench.dataset import DatasetManifest, Detection, FaceRecord
from lmkbench.detection import average_precision, dataset_average_precision, iou, match_detections
from lmkbench.geometry import BoundingBox
from lmkbench.synthetic import random_face

boxes = st.builds(BoundingBox, st.floats(-50, 50), st.floats(-50, 50), st.floats(0, 60), st.floats(0, 60))


class TestIou:
    def test_identical(self):
        b = BoundingBox(3, 4, 10, 20)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(BoundingBox(0, 0, 5, 5), BoundingBox(10, 10, 5, 5)) == 0.0

    def test_half_overlap(self):
        assert iou(BoundingBox(0, 0, 10, 10), BoundingBox(5, 0, 10, 10)) == pytest.approx(1 / 3)

    def test_zero_union(self):
        assert iou(BoundingBox(0, 0, 0, 0), BoundingBox(0, 0, 0, 0)) == 0.0

    @given(boxes, boxes)
    def test_symmetric_and_bounded(self, a, b):
        assert iou(a, b) == iou(b, a)
        assert 0.0 <= iou(a, b) <= 1.0


def brute_force_match(dets, gts, thresh):
    """Walk detections in (score desc, index asc) order, scanning every ground truth."""
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    used = set()
    flags = []
    for i in order:
        candidates = [(iou(dets[i].box, g), -j, j) for j, g in enumerate(gts) if j not in used]
        candidates = [c for c in candidates if c[0] >= thresh]
        if candidates:
            used.add(max(candidates)[2])
        flags.append((dets[i].score, bool(candidates)))
    return flags


class TestMatching:
    def test_single_tp(self):
        gt = BoundingBox(0, 0, 10, 10)
        det = Detection(BoundingBox(0, 0, 10, 9), 0.7)
        assert iou(det.box, gt) == pytest.approx(0.9)
        assert match_detections([det], [gt], 0.5) == [(0.7, True)]

    def test_one_to_one(self):
        gt = BoundingBox(0, 0, 10, 10)
        dets = [Detection(gt, 0.3), Detection(gt, 0.8)]
        assert match_detections(dets, [gt]) == [(0.8, True), (0.3, False)]

    def test_iou_tie_goes_to_lower_index(self):
        gt = BoundingBox(0, 0, 10, 10)
        dets = [Detection(gt, 0.9), Detection(gt, 0.5)]
        out = match_detections(dets, [gt, gt])
        assert out == [(0.9, True), (0.5, True)]

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            match_detections([], [], 0.0)

    def test_random_against_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            gts = [BoundingBox(*rng.uniform(0, 20, 2), *rng.uniform(5, 15, 2)) for _ in range(2)]
            dets = [Detection(BoundingBox(*rng.uniform(0, 20, 2), *rng.uniform(5, 15, 2)),
                              float(rng.choice([0.2, 0.5, 0.9]))) for _ in range(3)]
            assert match_detections(dets, gts, 0.3) == brute_force_match(dets, gts, 0.3)


class TestAveragePrecision:
    def test_perfect(self):
        assert average_precision([(0.9, True)], 1) == 1.0

    def test_fp_then_tp(self):
        assert average_precision([(0.9, False), (0.8, True)], 1) == 0.5

    def test_no_detections(self):
        assert average_precision([], 3) == 0.0

    def test_num_gt_zero(self):
        with pytest.raises(ValueError):
            average_precision([(0.5, True)], 0)

    def test_interpolation_uses_max_to_the_right(self):
        # PR: (1/2,1), (1/2,1/2), (1,2/3): the first half of recall gets precision 1
        ap = average_precision([(0.9, True), (0.8, False), (0.7, True)], 2)
        assert ap == pytest.approx(0.5 * 1 + 0.5 * 2 / 3)

    def test_small_exhaustive_oracle(self):
        for n in range(5):
            for flags in itertools.product([False, True], repeat=n):
                for num_gt in range(max(1, sum(flags)), 4):
                    matches = [(1.0 - 0.1 * i, f) for i, f in enumerate(flags)]
                    assert average_precision(matches, num_gt) == oracles.average_precision(matches, num_gt)

    @given(st.lists(st.tuples(st.floats(0, 1), st.booleans()), max_size=12), st.integers(0, 4))
    def test_fp_properties(self, matches, extra_gt):
        num_gt = max(1, sum(f for _, f in matches)) + extra_gt
        ap = average_precision(matches, num_gt)
        assert 0.0 <= ap <= 1.0
        tp_scores = [s for s, f in matches if f]
        lowest = min(tp_scores) if tp_scores else 1.0
        if lowest > 0:
            assert average_precision(matches + [(lowest / 2, False)], num_gt) <= ap
        fps = [i for i, (_, f) in enumerate(matches) if not f]
        if fps:
            removed = matches[:fps[0]] + matches[fps[0] + 1:]
            assert average_precision(removed, num_gt) >= ap

    def test_ap_one_iff_clean_prefix(self):
        assert average_precision([(0.9, True), (0.8, True), (0.1, False)], 2) == 1.0
        assert average_precision([(0.9, True), (0.8, False), (0.7, True)], 2) < 1.0
        assert average_precision([(0.9, True)], 2) < 1.0


def test_dataset_average_precision_uses_record_boxes():
    rng = np.random.default_rng(0)
    recs = [FaceRecord(f"i{k}", random_face(rng)) for k in range(4)]
    m = DatasetManifest(tuple(recs))
    dets = {r.image_id: [Detection(r.box, 0.9)] for r in recs[:3]}
    dets["i0"].append(Detection(BoundingBox(-500, -500, 5, 5), 0.95))
    # ranked: FP(0.95), TP, TP, TP over 4 gts -> recall 3/4 at precision 3/4
    assert dataset_average_precision(m, dets) == pytest.approx(3 / 4 * 3 / 4)
