"""Train the hybrid complex/real network on a small enriched set and compare
it with matched filtering + CA-CFAR on a jittered, noisier test set.

The training set is tiny compared with a full run, so expect the network to
trail the classical chain, especially on false alarms.

Run:  python demos/train_detector.py [--epochs 10] [--hidden 128] [--model net.rpnn]
"""

import argparse

import numpy as np

from swarmrp import CfarConfig, TrainConfig, generate_dataset, make_lfm_chirp, mf_cfar_detect_full, predict, train
from swarmrp.cvnn import save_checkpoint
from swarmrp.datagen import recipe_spec
from swarmrp.metrics import aggregate, report_table, score_batch, table_filters

parser = argparse.ArgumentParser()
parser.add_argument("--epochs", type=int, default=10)
parser.add_argument("--hidden", type=int, default=128)
parser.add_argument("--model", help="save the trained weights here")
args = parser.parse_args()

train_set = generate_dataset(recipe_spec("enriched", offset_step=61, count_step=6, stride_step=4, seed=1))
valid_set = generate_dataset(recipe_spec("validation", offset_step=250, count_step=8, stride_step=9, seed=2))
test_set = generate_dataset(recipe_spec("test", offset_step=250, count_step=6, stride_step=4, seed=3))
print(f"train {len(train_set)}, valid {len(valid_set)}, test {len(test_set)} profiles")

cfg = TrainConfig(epochs=args.epochs, lr_halving_period=max(1, args.epochs // 5), hidden_width=args.hidden)
params, history = train(train_set, valid_set, cfg, log=print)
if args.model:
    save_checkpoint(args.model, params)

nn_det = predict(params, test_set.samples) > cfg.threshold
mf = mf_cfar_detect_full(test_set.samples, make_lfm_chirp(1e6, 1e-4, 2e6), CfarConfig())
scores = {
    "nn": score_batch(nn_det, test_set),
    "mf+ca-cfar": score_batch(mf["detections"], test_set, valid=mf["valid"]),
}

results = {}
for row, f in table_filters(test_set).items():
    keep = np.flatnonzero(f.mask(test_set))
    results[row] = {name: aggregate(c[i] for i in keep) for name, c in scores.items()}
print(report_table(results, style="text"))
