"""Synthetic faces and manifests for tests and demos."""
from __future__ import annotations

import math

import numpy as np

from .dataset import ATTRIBUTES, DatasetManifest, FaceAttributes, FaceRecord
from .geometry import NUM_LANDMARKS, as_landmarks


def _template() -> np.ndarray:
    theta = np.linspace(0.0, math.pi, 17)
    jaw = np.stack([-np.cos(theta), -0.2 + 1.2 * np.sin(theta)], axis=1)
    bx = np.linspace(-0.8, -0.2, 5)
    left_brow = np.stack([bx, -0.55 - 0.1 * np.sin(np.linspace(0.2, math.pi - 0.2, 5))], axis=1)
    right_brow = left_brow[::-1] * [-1.0, 1.0]
    bridge = np.stack([np.zeros(4), np.linspace(-0.35, 0.15, 4)], axis=1)
    nostrils = np.array([[-0.2, 0.25], [-0.1, 0.28], [0.0, 0.3], [0.1, 0.28], [0.2, 0.25]])
    left_eye = np.array([[-0.65, -0.3], [-0.55, -0.37], [-0.35, -0.37], [-0.25, -0.3], [-0.35, -0.24],
                         [-0.55, -0.24]])
    right_eye = left_eye[[3, 2, 1, 0, 5, 4]] * [-1.0, 1.0]
    outer_mouth = np.array([[-0.4, 0.55], [-0.25, 0.48], [-0.1, 0.45], [0.0, 0.47], [0.1, 0.45], [0.25, 0.48],
                            [0.4, 0.55], [0.25, 0.65], [0.1, 0.7], [0.0, 0.71], [-0.1, 0.7], [-0.25, 0.65]])
    inner_mouth = np.array([[-0.3, 0.56], [-0.1, 0.53], [0.0, 0.54], [0.1, 0.53], [0.3, 0.56], [0.1, 0.6],
                            [0.0, 0.61], [-0.1, 0.6]])
    return np.vstack([jaw, left_brow, right_brow, bridge, nostrils, left_eye, right_eye, outer_mouth, inner_mouth])


TEMPLATE = as_landmarks(_template())


def make_face(center=(0.0, 0.0), scale=1.0, angle_deg=0.0, aspect=1.0) -> np.ndarray:
    """Template face stretched horizontally by ``aspect``, scaled, rotated, then translated."""
    rad = math.radians(angle_deg)
    rot = np.array([[math.cos(rad), -math.sin(rad)], [math.sin(rad), math.cos(rad)]])
    pts = (TEMPLATE * [aspect, 1.0] * scale) @ rot.T + np.asarray(center, dtype=np.float64)
    return as_landmarks(pts)


def random_face(rng: np.random.Generator, jitter: float = 0.03) -> np.ndarray:
    face = make_face(center=rng.uniform(100, 400, size=2), scale=rng.uniform(40, 120),
                     angle_deg=rng.uniform(-30, 30), aspect=rng.uniform(0.85, 1.2))
    return as_landmarks(face + rng.normal(scale=jitter * 50, size=(NUM_LANDMARKS, 2)))


def random_attributes(rng: np.random.Generator, challenging: bool) -> FaceAttributes:
    if not challenging:
        return FaceAttributes()
    flags = rng.random(len(ATTRIBUTES)) < 0.35
    flags[rng.integers(len(ATTRIBUTES))] = True
    return FaceAttributes(*(bool(f) for f in flags))


def synthetic_manifest(n: int, n_common: int, rng: np.random.Generator, name: str = "synthetic",
                       prefix: str = "img") -> DatasetManifest:
    """``n`` random faces of which exactly ``n_common`` carry no adverse attribute."""
    if not 0 <= n_common <= n:
        raise ValueError("n_common must lie in [0, n]")
    common = np.zeros(n, dtype=bool)
    common[rng.permutation(n)[:n_common]] = True
    records = [FaceRecord(f"{prefix}{i:04d}", random_face(rng), random_attributes(rng, not common[i]))
               for i in range(n)]
    return DatasetManifest(tuple(records), name=name)


def noisy_predictions(manifest: DatasetManifest, rng: np.random.Generator, sigma: float = 2.0) -> dict:
    return {r.image_id: as_landmarks(r.landmarks + rng.normal(scale=sigma, size=(NUM_LANDMARKS, 2)))
            for r in manifest}
