"""
Training configuration grid
===========================

Expand the published search space into config documents and look at what
each sweep varies.
"""
import collections

from lmkbench.augment import GridSpace, default_grid_space, gen_config_grid

configs = gen_config_grid(default_grid_space())
print(collections.Counter(c["sweep"] for c in configs))

for c in configs:
    if c["sweep"] == "rotation":
        print("rotation sweep:", c["rotation_range_deg"], "lr", c["learning_rate"])

# A custom space: two learning rates by two freeze options.
small = GridSpace(lr_choices=(1e-4, 1e-5), freeze_choices=("none", "layer2"))
for c in gen_config_grid(small):
    print(c["learning_rate"], c["freeze_layer"])
