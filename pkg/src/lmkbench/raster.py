"""8-bit raster images and uncompressed PNM (PGM/PPM) I/O."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np


class RasterError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RasterImage:
    """Row-major ``uint8`` image stored as an ``(height, width, channels)`` array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise RasterError(f"expected (H, W, 1|3) pixels, got shape {px.shape}")
        if px.dtype != np.uint8:
            if np.any((px < 0) | (px > 255)) or np.any(px != np.round(px)):
                raise RasterError("pixel values must be integers in [0, 255]")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @classmethod
    def blank(cls, width: int, height: int, channels: int = 1, value: int = 0) -> "RasterImage":
        return cls(np.full((height, width, channels), value, dtype=np.uint8))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def center(self):
        """Center of the pixel grid, with pixel centers at integer coordinates."""
        return ((self.width - 1) / 2.0, (self.height - 1) / 2.0)

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def decode_pnm(data: bytes) -> RasterImage:
    """Decode P2/P3 (ASCII) or P5/P6 (binary) images with maxval 255."""
    pos = 0
    header = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if not m:
            raise RasterError("truncated PNM header")
        header.append(m.group(1))
        pos = m.end()
    magic = header[0]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise RasterError(f"unsupported PNM magic {magic!r}")
    try:
        width, height, maxval = (int(t) for t in header[1:])
    except ValueError:
        raise RasterError("non-integer PNM header field") from None
    if maxval != 255:
        raise RasterError(f"only maxval 255 is supported, got {maxval}")
    channels = 3 if magic in (b"P3", b"P6") else 1
    count = width * height * channels
    if magic in (b"P5", b"P6"):
        raw = data[pos + 1:pos + 1 + count]
        if len(raw) != count:
            raise RasterError(f"expected {count} sample bytes, found {len(raw)}")
        samples = np.frombuffer(raw, dtype=np.uint8)
    else:
        samples = np.array(data[pos:].split()[:count], dtype=np.int64)
        if samples.size != count:
            raise RasterError(f"expected {count} samples, found {samples.size}")
    return RasterImage(samples.reshape(height, width, channels))


def encode_pnm(img: RasterImage) -> bytes:
    """Binary PGM for one channel, binary PPM for three."""
    magic = b"P5" if img.channels == 1 else b"P6"
    return magic + f"\n{img.width} {img.height}\n255\n".encode() + img.tobytes()


def read_pnm(path) -> RasterImage:
    with open(path, "rb") as fh:
        return decode_pnm(fh.read())


def write_pnm(path, img: RasterImage) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pnm(img))
