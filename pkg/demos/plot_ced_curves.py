"""
Cumulative error distribution
=============================

Draw CED curves for three noise levels and check that the AUC read off the
curve matches the closed form.
"""
import os

import numpy as np

from lmkbench import auc, ced_curve, evaluate
from lmkbench.plots import PlotSpec, render_plot
from lmkbench.synthetic import noisy_predictions, synthetic_manifest

rng = np.random.default_rng(1)
test = synthetic_manifest(150, 60, rng)

series = {}
for sigma in (1.0, 3.0, 6.0):
    rep = evaluate(test, noisy_predictions(test, rng, sigma), "iod")
    series[f"sigma={sigma:g}"] = rep.nmes.tolist()
    print(f"sigma={sigma:g}: FR@10 = {rep.fr:.2f}  AUC@10 = {rep.auc:.2f}")

# Integrate the staircase numerically on a fine grid as a sanity check.
values = series["sigma=3"]
grid = np.linspace(0, 10, 100_001)
riemann = 100 * ced_curve(values)(grid).mean()
print(f"closed form {auc(ced_curve(values), 10):.4f} vs grid {riemann:.4f}")

os.makedirs("demo_out", exist_ok=True)
with open("demo_out/ced.svg", "w") as fh:
    fh.write(render_plot(PlotSpec("ced", series, title="CED (NME iod)", threshold=10)))
print("wrote demo_out/ced.svg")
