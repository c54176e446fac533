"""
Rotation augmentation with landmarks
====================================

Paint a face's landmarks into an image, apply a sampled R90 augmentation,
and confirm the warped pixels and transformed coordinates still agree.
"""
import os

import numpy as np

from lmkbench.augment import augment_sample, preset, sample_parameters
from lmkbench.raster import RasterImage, write_pnm
from lmkbench.synthetic import make_face

face = make_face(center=(64, 64), scale=40)
px = np.zeros((128, 128, 3), dtype=np.uint8)
for x, y in np.round(face).astype(int):
    px[y, x] = (255, 200, 0)
image = RasterImage(px)

config = preset("R90")
print(config)

# Roughly 60% of seeds apply a rotation.
hits = sum(sample_parameters(config, s).angle_deg is not None for s in range(2000))
print(f"rotation applied for {hits / 2000:.1%} of seeds")

os.makedirs("demo_out", exist_ok=True)
for seed in range(4):
    sample = augment_sample(config, seed, image, face)
    out = sample.image.pixels[..., 0]
    # nearest bright pixel to each moved landmark
    ys, xs = np.nonzero(out > 60)
    bright = np.stack([xs, ys], axis=1)
    gap = max(np.min(np.linalg.norm(bright - p, axis=1)) for p in sample.landmarks
              if 0 <= p[0] < 128 and 0 <= p[1] < 128)
    print(f"seed {seed}: angle={sample.params.angle_deg}, worst landmark-to-pixel gap {gap:.2f}px")
    write_pnm(f"demo_out/aug_{seed}.ppm", sample.image)

# R150G adds a wider range and a coin flip for grayscale.
gray = sum(augment_sample(preset("R150G"), s, image).params.grayscale for s in range(200))
print(f"R150G grayscale on {gray} of 200 seeds")
