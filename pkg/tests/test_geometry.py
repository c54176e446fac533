import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lmkbench.geometry import (
    MIRROR_INDEX,
    BoundingBox,
    GeometryError,
    NormalizationKind,
    as_landmarks,
    box_size,
    geometry_stats,
    interocular_distance,
    mean_face,
    minimal_bounding_box,
    mirror,
    normalize_face,
)
from lmkbench.synthetic import TEMPLATE, make_face, random_face

coords = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)
faces = arrays(np.float64, (68, 2), elements=coords)


def test_as_landmarks_rejects_bad_shapes():
    with pytest.raises(GeometryError):
        as_landmarks(np.zeros((67, 2)))
    with pytest.raises(GeometryError):
        as_landmarks(np.full((68, 2), np.nan))
    assert not as_landmarks(np.zeros((68, 2))).flags.writeable


def test_mirror_index_is_an_involution():
    assert sorted(MIRROR_INDEX) == list(range(68))
    assert np.array_equal(MIRROR_INDEX[MIRROR_INDEX], np.arange(68))


def test_template_is_left_right_symmetric():
    np.testing.assert_allclose(mirror(TEMPLATE), TEMPLATE, atol=1e-12)


class TestMinimalBoundingBox:
    def test_coincident_points(self):
        assert minimal_bounding_box(np.full((68, 2), 5.0)) == BoundingBox(5, 5, 0, 0)

    def test_corner_extrema(self):
        pts = np.full((68, 2), 3.0)
        pts[0] = (0, 0)
        pts[1] = (10, 20)
        assert minimal_bounding_box(pts) == BoundingBox(0, 0, 10, 20)

    def test_matches_brute_force_pass(self):
        face = random_face(np.random.default_rng(3))
        xmin = ymin = math.inf
        xmax = ymax = -math.inf
        for x, y in face.tolist():
            xmin, xmax = min(xmin, x), max(xmax, x)
            ymin, ymax = min(ymin, y), max(ymax, y)
        assert minimal_bounding_box(face) == BoundingBox(xmin, ymin, xmax - xmin, ymax - ymin)

    @given(faces)
    def test_tight(self, pts):
        box = minimal_bounding_box(pts)
        x, y = pts[:, 0], pts[:, 1]
        # x + w is rounded, so the far edges are exact only to an ulp of the coordinate scale
        eps = 1e-12 * (1.0 + np.abs(pts).max())
        assert np.all((x >= box.x) & (x <= box.x + box.w + eps) & (y >= box.y) & (y <= box.y + box.h + eps))
        assert np.any(x == box.x) and np.any(np.abs(x - (box.x + box.w)) <= eps)
        assert np.any(y == box.y) and np.any(np.abs(y - (box.y + box.h)) <= eps)


class TestBoxSize:
    @pytest.mark.parametrize("box, expected", [
        (BoundingBox(0, 0, 16, 4), 8.0),
        (BoundingBox(0, 0, 10, 10), 10.0),
        (BoundingBox(3, 7, 0, 5), 0.0),
    ])
    def test_values(self, box, expected):
        assert box_size(box) == expected

    def test_negative_rejected(self):
        with pytest.raises(GeometryError):
            box_size(BoundingBox(0, 0, -1, 3))


class TestInterocular:
    def test_three_four_five(self):
        pts = np.random.default_rng(0).normal(size=(68, 2))
        pts[36] = (0, 0)
        pts[45] = (3, 4)
        assert interocular_distance(pts) == 5.0

    def test_coincident(self):
        pts = np.ones((68, 2))
        assert interocular_distance(pts) == 0.0

    def test_horizontal(self):
        pts = np.zeros((68, 2))
        pts[36] = (10, 10)
        pts[45] = (110, 10)
        assert interocular_distance(pts) == 100.0


@settings(max_examples=50)
@given(st.floats(0.01, 100), st.floats(-180, 180), st.integers(0, 2**32 - 1))
def test_similarity_equivariance(s, angle, seed):
    face = random_face(np.random.default_rng(seed))
    iod = interocular_distance(face)
    box = box_size(minimal_bounding_box(face))
    assert math.isclose(interocular_distance(face * s), s * iod, rel_tol=1e-9)
    assert math.isclose(box_size(minimal_bounding_box(face * s)), s * box, rel_tol=1e-9)
    rad = math.radians(angle)
    rot = np.array([[math.cos(rad), -math.sin(rad)], [math.sin(rad), math.cos(rad)]])
    assert math.isclose(interocular_distance(face @ rot.T), iod, rel_tol=1e-9)


class TestMeanFace:
    def test_identical_copies(self):
        face = make_face((200, 150), 80, 10)
        expected = normalize_face(face, "iod")
        np.testing.assert_allclose(mean_face([face] * 5, "iod"), expected, atol=1e-12)

    def test_singleton_and_idempotence(self):
        face = random_face(np.random.default_rng(1))
        once = mean_face([face], "box")
        np.testing.assert_allclose(once, normalize_face(face, "box"), atol=1e-15)
        twice = mean_face([once], "box")
        np.testing.assert_allclose(twice, once, atol=1e-12)

    def test_normalized_factor_is_one(self):
        face = random_face(np.random.default_rng(2))
        for norm in NormalizationKind:
            out = normalize_face(face, norm)
            factor = interocular_distance(out) if norm is NormalizationKind.INTEROCULAR \
                else box_size(minimal_bounding_box(out))
            assert math.isclose(factor, 1.0, rel_tol=1e-12)
            c = minimal_bounding_box(out).center
            assert abs(c.x) < 1e-12 and abs(c.y) < 1e-12

    def test_mirrored_pair_is_symmetric(self):
        face = random_face(np.random.default_rng(4))
        m = mean_face([face, mirror(face, axis_x=250.0)], "box")
        np.testing.assert_allclose(np.abs(m[:, 0]), np.abs(m[MIRROR_INDEX, 0]), atol=1e-12)
        np.testing.assert_allclose(m[:, 1], m[MIRROR_INDEX, 1], atol=1e-12)

    def test_errors(self):
        with pytest.raises(GeometryError):
            mean_face([], "iod")
        with pytest.raises(GeometryError):
            mean_face([np.zeros((68, 2))], "iod")


class TestGeometryStats:
    def test_square_face_with_iod_equal_box(self):
        pts = np.zeros((68, 2))
        pts[:4] = [(0, 0), (10, 0), (0, 10), (10, 10)]
        pts[4:] = (5, 5)
        pts[36] = (0, 5)
        pts[45] = (10, 5)
        st_ = geometry_stats([pts, pts])
        assert st_.mean_face_aspect_ratio == pytest.approx(1.0, abs=1e-12)
        assert st_.mean_iod_over_box == pytest.approx(1.0, abs=1e-12)

    def test_mean_of_ratios(self):
        def face(iod):
            # 20 x 5 box: size 10, wide enough to hold either eye span
            pts = np.zeros((68, 2))
            pts[:4] = [(0, 0), (20, 0), (0, 5), (20, 5)]
            pts[4:] = (10, 2.5)
            pts[36] = (10 - iod / 2, 2.5)
            pts[45] = (10 + iod / 2, 2.5)
            return pts
        assert geometry_stats([face(8.0), face(12.0)]).mean_iod_over_box == pytest.approx(1.0, abs=1e-12)

    def test_matches_per_face_recomputation(self):
        rng = np.random.default_rng(10)
        records = [random_face(rng) for _ in range(10)]
        ratios = []
        normalized = []
        for r in records:
            xs, ys = r[:, 0].tolist(), r[:, 1].tolist()
            w, h = max(xs) - min(xs), max(ys) - min(ys)
            size = math.sqrt(w * h)
            iod = math.dist(r[36], r[45])
            ratios.append(iod / size)
            cx, cy = min(xs) + w / 2, min(ys) + h / 2
            normalized.append([((x - cx) / size, (y - cy) / size) for x, y in r.tolist()])
        meanpts = [(sum(f[i][0] for f in normalized) / 10, sum(f[i][1] for f in normalized) / 10)
                   for i in range(68)]
        mw = max(p[0] for p in meanpts) - min(p[0] for p in meanpts)
        mh = max(p[1] for p in meanpts) - min(p[1] for p in meanpts)
        got = geometry_stats(records)
        assert got.mean_iod_over_box == pytest.approx(sum(ratios) / 10, rel=1e-12)
        assert got.mean_face_aspect_ratio == pytest.approx(mw / mh, rel=1e-12)

    def test_wider_faces_have_larger_aspect(self):
        wide = [make_face((0, 0), 50, 0, aspect=1.25)] * 3
        narrow = [make_face((0, 0), 50, 0, aspect=1.0)] * 3
        assert geometry_stats(wide).mean_face_aspect_ratio > geometry_stats(narrow).mean_face_aspect_ratio
