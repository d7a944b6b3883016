"""Build scaled-down training and test sets and inspect what is in them.

Run:  python demos/dataset_tour.py [--out DIR]
"""

import argparse
from collections import Counter
from pathlib import Path

import numpy as np

from swarmrp import ProfileKind, generate_dataset, read_dataset, write_dataset
from swarmrp.datagen import recipe_spec

parser = argparse.ArgumentParser()
parser.add_argument("--out", type=Path, help="write the datasets as .rpds files here")
args = parser.parse_args()

# thin the placement grid so the sets build in seconds
grid = dict(offset_step=125, count_step=8, stride_step=5)
for name in ("baseline", "enriched", "test"):
    spec = recipe_spec(name, seed=1, **grid)
    ds = generate_dataset(spec)
    kinds = Counter(ProfileKind(k).name.lower() for k in ds.kind)
    n_targets = np.array([len(b) for b in ds.target_bins])
    print(f"{name:9s} {len(ds):6d} profiles  {dict(kinds)}")
    print(f"          bandwidths {np.unique(ds.bandwidth_hz / 1e6).tolist()} MHz, "
          f"reflection {np.unique(ds.reflection_coeff).tolist()}, noise {np.unique(ds.noise_std).tolist()}")
    print(f"          targets per profile: {n_targets.min()}..{n_targets.max()}, "
          f"positive bins {ds.labels.mean():.4f}")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        path = args.out / f"{name}.rpds"
        write_dataset(path, ds)
        assert read_dataset(path).equals(ds)
        print(f"          wrote {path} ({path.stat().st_size / 1e6:.1f} MB)")

# test-set targets are jittered copies of regular placements
test = generate_dataset(recipe_spec("test", seed=1, **grid))
some = next(p for p in test if p.kind == ProfileKind.TARGETS and len(p.target_bins) > 4)
print("irregular spacing example:", np.diff(some.target_bins).tolist())
