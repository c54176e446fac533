"""
t-SNE of two feature domains
============================

Embed synthetic "adult" and "infant" feature vectors and see whether the
domains separate in 2-D.
"""
import os

import numpy as np

from lmkbench.dataset import FeatureMatrix
from lmkbench.plots import PlotSpec, render_plot
from lmkbench.tsne import TsneConfig, run_tsne_detailed

rng = np.random.default_rng(3)
dim = 64
shift = np.zeros(dim)
shift[:8] = 4.0
adult = rng.normal(size=(40, dim))
infant = rng.normal(size=(30, dim)) + shift

ids = tuple([f"adult{i:02d}" for i in range(40)] + [f"infant{i:02d}" for i in range(30)])
features = FeatureMatrix(ids, np.vstack([adult, infant]))

result = run_tsne_detailed(features, TsneConfig(perplexity=20, seed=0), log_every=250)
for it, kl in result.kl_history:
    print(f"iter {it:4d}  KL {kl:.4f}")

emb = result.embedding
groups = {"adult": [], "infant": []}
for image_id, xy in zip(emb.ids, emb.coords):
    groups["infant" if image_id.startswith("infant") else "adult"].append(xy)
groups = {k: np.array(v) for k, v in groups.items()}
gap = np.linalg.norm(groups["adult"].mean(0) - groups["infant"].mean(0))
print(f"centroid distance between domains: {gap:.2f}")

os.makedirs("demo_out", exist_ok=True)
with open("demo_out/tsne.svg", "w") as fh:
    fh.write(render_plot(PlotSpec("scatter", groups, title="t-SNE, perplexity 20")))
