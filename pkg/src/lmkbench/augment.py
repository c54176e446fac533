"""Geometric and photometric augmentation shared by landmarks and raster images.

Coordinates follow the image convention: ``x`` to the right, ``y`` down,
pixel centers at integer positions.  A positive rotation angle is
counter-clockwise in y-up mathematical axes, i.e. it maps ``(1, 0)`` to
``(0, 1)``; on screen (y down) that appears clockwise.

Random draws use NumPy's PCG64 bit generator, whose output stream is fixed
by its algorithm, so a seed reproduces the same augmentation everywhere.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .geometry import Point2, minimal_bounding_box
from .raster import RasterError, RasterImage


class TransformError(ValueError):
    pass


class AffineTransform:
    """2x3 affine map ``(x, y) -> (a x + b y + tx, c x + d y + ty)``."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = np.array(matrix, dtype=np.float64)
        if m.shape == (3, 3):
            m = m[:2]
        if m.shape != (2, 3):
            raise TransformError(f"expected a 2x3 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise TransformError("transform entries must be finite")
        m.flags.writeable = False
        self.matrix = m

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    @property
    def determinant(self) -> float:
        (a, b, _), (c, d, _) = self.matrix
        return a * d - b * c

    @property
    def homogeneous(self) -> np.ndarray:
        return np.vstack([self.matrix, [0.0, 0.0, 1.0]])

    def compose(self, first: "AffineTransform") -> "AffineTransform":
        """Return ``self o first``: apply ``first``, then ``self``."""
        return AffineTransform(self.homogeneous @ first.homogeneous)

    def inverse(self) -> "AffineTransform":
        det = self.determinant
        if abs(det) <= 1e-12:
            raise TransformError(f"singular transform (determinant {det:g})")
        (a, b, tx), (c, d, ty) = self.matrix
        ia, ib, ic, id_ = d / det, -b / det, -c / det, a / det
        return AffineTransform([[ia, ib, -(ia * tx + ib * ty)], [ic, id_, -(ic * tx + id_ * ty)]])

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.matrix[:, :2].T + self.matrix[:, 2]

    def __repr__(self):
        return f"AffineTransform({self.matrix.tolist()})"


def compose(t2: AffineTransform, t1: AffineTransform) -> AffineTransform:
    """Transform applying ``t1`` first and ``t2`` second."""
    return t2.compose(t1)


@dataclass(frozen=True)
class Rotation:
    angle_deg: float


@dataclass(frozen=True)
class Scale:
    factor: float


def _cos_sin(angle_deg: float) -> Tuple[float, float]:
    # exact values at multiples of 90 degrees keep grid-aligned warps lossless
    quarter, rem = divmod(float(angle_deg), 90.0)
    if rem == 0.0:
        return [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][int(quarter) % 4]
    rad = math.radians(angle_deg)
    return math.cos(rad), math.sin(rad)


def make_transform(kind: Union[Rotation, Scale], center=(0.0, 0.0)) -> AffineTransform:
    cx, cy = center
    if isinstance(kind, Rotation):
        c, s = _cos_sin(kind.angle_deg)
        lin = np.array([[c, -s], [s, c]])
    elif isinstance(kind, Scale):
        if not kind.factor > 0:
            raise TransformError(f"scale factor must be positive, got {kind.factor}")
        lin = np.eye(2) * float(kind.factor)
    else:
        raise TypeError(f"unsupported transform kind {kind!r}")
    ctr = np.array([cx, cy], dtype=np.float64)
    return AffineTransform(np.column_stack([lin, ctr - lin @ ctr]))


def apply_transform(t: AffineTransform, landmarks) -> np.ndarray:
    return t(landmarks)


def warp_raster(t: AffineTransform, img: RasterImage, fill: int = 0, interpolation: str = "bilinear") -> RasterImage:
    """Resample ``img`` so that the point ``p`` of the input lands at ``t(p)``.

    Each output pixel takes the sample of ``img`` at ``t^-1(p)``; samples
    outside the pixel grid get ``fill``.  ``interpolation`` is ``"bilinear"``
    or ``"nearest"``.
    """
    inv = t.inverse()
    h, w, ch = img.pixels.shape
    ys, xs = np.mgrid[0:h, 0:w]
    src = inv(np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64))
    sx, sy = src[:, 0], src[:, 1]
    px = img.pixels.astype(np.float64)
    out = np.empty((h * w, ch), dtype=np.float64)

    if interpolation == "nearest":
        ix = np.floor(sx + 0.5).astype(np.int64)
        iy = np.floor(sy + 0.5).astype(np.int64)
        valid = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
        out[valid] = px[iy[valid], ix[valid]]
    elif interpolation == "bilinear":
        eps = 1e-9
        valid = (sx >= -eps) & (sx <= w - 1 + eps) & (sy >= -eps) & (sy <= h - 1 + eps)
        vx = np.clip(sx[valid], 0, w - 1)
        vy = np.clip(sy[valid], 0, h - 1)
        x0 = np.floor(vx).astype(np.int64)
        y0 = np.floor(vy).astype(np.int64)
        x1 = np.minimum(x0 + 1, w - 1)
        y1 = np.minimum(y0 + 1, h - 1)
        fx = (vx - x0)[:, None]
        fy = (vy - y0)[:, None]
        top = px[y0, x0] * (1 - fx) + px[y0, x1] * fx
        bottom = px[y1, x0] * (1 - fx) + px[y1, x1] * fx
        out[valid] = top * (1 - fy) + bottom * fy
    else:
        raise ValueError(f"unknown interpolation {interpolation!r}")
    out[~valid] = fill
    out = np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    return RasterImage(out.reshape(h, w, ch))


# Rec. 601 luma weights
LUMA = (0.299, 0.587, 0.114)


def grayscale(img: RasterImage) -> RasterImage:
    """Replace each RGB pixel by its luma, replicated over three channels."""
    if img.channels != 3:
        raise RasterError("grayscale expects a 3-channel image")
    px = img.pixels.astype(np.float64)
    luma = LUMA[0] * px[..., 0] + LUMA[1] * px[..., 1] + LUMA[2] * px[..., 2]
    gray = np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)
    return RasterImage(np.repeat(gray[..., None], 3, axis=2))


# ---------------------------------------------------------------------------
# random augmentation

@dataclass(frozen=True)
class AugmentConfig:
    rotation_range_deg: Tuple[float, float] = (0.0, 0.0)
    rotation_prob: float = 0.0
    zoom_range: Tuple[float, float] = (1.0, 1.0)
    zoom_prob: float = 0.0
    grayscale_prob: float = 0.0

    def __post_init__(self):
        for name in ("rotation_range_deg", "zoom_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} must satisfy lo <= hi, got ({lo}, {hi})")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if not self.zoom_range[0] > 0:
            raise ValueError("zoom factors must be positive")
        for name in ("rotation_prob", "zoom_prob", "grayscale_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rotation_range_deg"] = list(self.rotation_range_deg)
        d["zoom_range"] = list(self.zoom_range)
        return d


PRESETS = {
    "R90": AugmentConfig(rotation_range_deg=(-90, 90), rotation_prob=0.6),
    "R90Z": AugmentConfig(rotation_range_deg=(-90, 90), rotation_prob=0.6, zoom_range=(0.75, 1.25), zoom_prob=0.6),
    "R150G": AugmentConfig(rotation_range_deg=(-150, 150), rotation_prob=0.6, grayscale_prob=0.5),
}


def preset(name: str) -> AugmentConfig:
    try:
        return PRESETS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


class AugmentParams(NamedTuple):
    angle_deg: Optional[float]
    zoom: Optional[float]
    grayscale: bool


def sample_parameters(config: AugmentConfig, seed: int) -> AugmentParams:
    """Draw rotation, zoom and grayscale decisions independently from ``seed``."""
    u = np.random.Generator(np.random.PCG64(seed)).random(5)
    angle = zoom = None
    if u[0] < config.rotation_prob:
        lo, hi = config.rotation_range_deg
        angle = lo + (hi - lo) * float(u[1])
    if u[2] < config.zoom_prob:
        lo, hi = config.zoom_range
        zoom = lo + (hi - lo) * float(u[3])
    return AugmentParams(angle, zoom, bool(u[4] < config.grayscale_prob))


def params_transform(params: AugmentParams, center=(0.0, 0.0)) -> AffineTransform:
    t = AffineTransform.identity()
    if params.zoom is not None:
        t = make_transform(Scale(params.zoom), center)
    if params.angle_deg is not None:
        t = compose(make_transform(Rotation(params.angle_deg), center), t)
    return t


def sample_augmentation(config: AugmentConfig, seed: int, center=(0.0, 0.0)) -> Tuple[AffineTransform, bool]:
    """Sample ``(transform, grayscale_applied)``; zoom then rotation about ``center``."""
    params = sample_parameters(config, seed)
    return params_transform(params, center), params.grayscale


def landmark_center(landmarks) -> Point2:
    """Rotation center used when landmarks are augmented without an image."""
    return minimal_bounding_box(landmarks).center


class AugmentedSample(NamedTuple):
    image: Optional[RasterImage]
    landmarks: Optional[np.ndarray]
    transform: AffineTransform
    params: AugmentParams


def augment_sample(config: AugmentConfig, seed: int, image: Optional[RasterImage] = None,
                   landmarks=None, fill: int = 0) -> AugmentedSample:
    """Apply one sampled augmentation to an image and/or its landmarks.

    The image center is the pivot whenever an image is given, so pixels and
    landmarks move together.
    """
    if image is None and landmarks is None:
        raise ValueError("nothing to augment")
    params = sample_parameters(config, seed)
    center = image.center if image is not None else landmark_center(landmarks)
    t = params_transform(params, center)
    out_img = out_pts = None
    if image is not None:
        out_img = warp_raster(t, image, fill)
        if params.grayscale and out_img.channels == 3:
            out_img = grayscale(out_img)
    if landmarks is not None:
        out_pts = apply_transform(t, landmarks)
    return AugmentedSample(out_img, out_pts, t, params)


# ---------------------------------------------------------------------------
# training configuration grid

CONFIG_KEYS = ("rotation_range_deg", "rotation_prob", "zoom_range", "zoom_prob", "grayscale_prob",
               "learning_rate", "freeze_layer")


def _symmetric(value, scale=1.0, offset=0.0):
    if isinstance(value, (int, float)):
        return (offset - value * scale, offset + value * scale)
    lo, hi = value
    return (offset + lo * scale, offset + hi * scale)


@dataclass(frozen=True)
class GridSpace:
    """Hyperparameter choices for the validation search.

    ``rotation_choices`` are degree ranges and ``zoom_choices`` percent
    ranges; a bare number ``v`` stands for ``(-v, +v)`` around 0 degrees or
    100 percent.  ``baseline`` fixes the values held constant while another
    axis is swept and defaults to the first choice on each axis.
    """

    rotation_choices: Tuple = ((-30.0, 30.0),)
    zoom_choices: Tuple = ((100.0, 100.0),)
    lr_choices: Tuple = (1e-4,)
    freeze_choices: Tuple = ("none",)
    rotation_prob: float = 0.6
    zoom_prob: float = 0.6
    grayscale_prob: float = 0.0
    baseline: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("rotation_choices", "zoom_choices", "lr_choices", "freeze_choices"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        rot = tuple(_symmetric(v) for v in self.rotation_choices)
        zoom = tuple(_symmetric(v, offset=100.0) if isinstance(v, (int, float)) else tuple(map(float, v))
                     for v in self.zoom_choices)
        object.__setattr__(self, "rotation_choices", rot)
        object.__setattr__(self, "zoom_choices", zoom)
        object.__setattr__(self, "lr_choices", tuple(float(v) for v in self.lr_choices))
        object.__setattr__(self, "freeze_choices", tuple(str(v) for v in self.freeze_choices))
        base = dict(self.baseline)
        if "rotation" in base:
            base["rotation"] = _symmetric(base["rotation"])
        if "zoom" in base and isinstance(base["zoom"], (int, float)):
            base["zoom"] = _symmetric(base["zoom"], offset=100.0)
        object.__setattr__(self, "baseline", base)

    @classmethod
    def from_dict(cls, doc: dict) -> "GridSpace":
        known = {k: doc[k] for k in ("rotation_choices", "zoom_choices", "lr_choices", "freeze_choices",
                                     "rotation_prob", "zoom_prob", "grayscale_prob", "baseline") if k in doc}
        unknown = set(doc) - set(known)
        if unknown:
            raise ValueError(f"unknown grid-space keys: {sorted(unknown)}")
        return cls(**{k: tuple(v) if k.endswith("_choices") else v for k, v in known.items()})

    def base(self, axis: str):
        choices = {"rotation": self.rotation_choices, "zoom": self.zoom_choices,
                   "lr": self.lr_choices, "freeze": self.freeze_choices}[axis]
        return self.baseline.get(axis, choices[0])


def default_grid_space() -> GridSpace:
    """Published search space, with its selected values as the baseline."""
    return GridSpace(
        rotation_choices=(30, 60, 90, 120, 150),
        zoom_choices=(5, 10, 15, 20, 30, 50),
        lr_choices=(1e-4, 1e-5, 1e-6, 1e-7, 1e-8),
        freeze_choices=("layer2", "layer3", "layer4", "none"),
        baseline={"rotation": 90, "zoom": 25, "lr": 1e-7, "freeze": "layer2"},
    )


def _config(space: GridSpace, rotation, zoom, lr, freeze, sweep: str) -> dict:
    return {
        "rotation_range_deg": [float(rotation[0]), float(rotation[1])],
        "rotation_prob": space.rotation_prob,
        "zoom_range": [zoom[0] / 100.0, zoom[1] / 100.0],
        "zoom_prob": space.zoom_prob,
        "grayscale_prob": space.grayscale_prob,
        "learning_rate": lr,
        "freeze_layer": freeze,
        "sweep": sweep,
    }


def gen_config_grid(space: GridSpace) -> List[dict]:
    """Training configurations for the validation search.

    Learning rate and frozen layer form a full grid at the baseline
    augmentation; rotation and zoom ranges are each swept alone with the
    other settings at baseline.  Duplicate settings are emitted once, tagged
    with the first sweep that produced them.
    """
    rot0, zoom0, lr0, freeze0 = (space.base(a) for a in ("rotation", "zoom", "lr", "freeze"))
    candidates = [_config(space, rot0, zoom0, lr, fr, "lr_freeze")
                  for lr, fr in itertools.product(space.lr_choices, space.freeze_choices)]
    candidates += [_config(space, r, zoom0, lr0, freeze0, "rotation") for r in space.rotation_choices]
    candidates += [_config(space, rot0, z, lr0, freeze0, "zoom") for z in space.zoom_choices]
    seen = set()
    out = []
    for cfg in candidates:
        key = tuple(tuple(cfg[k]) if isinstance(cfg[k], list) else cfg[k] for k in CONFIG_KEYS)
        if key not in seen:
            seen.add(key)
            out.append(cfg)
    return out
