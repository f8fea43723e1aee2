# %% [markdown]
# # Learning curves on a small MNIST subset
#
# Trains the predictive-coding learner and the backprop baseline with the
# same seed, sample order and dropout masks, and prints both curves. Set
# PCSNN_DATA_DIR to a folder holding mnist/*-idx*-ubyte first. A 1000/300
# subset with 3 epochs takes about a minute per learner.

# %%
import dataclasses
import tempfile

import numpy as np

from pcsnn.cli import load_data, run_train
from pcsnn.config import PRESETS

cfg = dataclasses.replace(PRESETS["mnist"], train_subset=1000, test_subset=300, epochs=3)
train, test = load_data(cfg)
len(train), len(test), np.bincount(train.labels)

# %%
curves = {}
for learner in ("pc", "bp"):
    with tempfile.TemporaryDirectory() as out:
        res = run_train(dataclasses.replace(cfg, learner=learner), out, train, test, log=print)
    curves[learner] = [(r.epoch, r.test_acc, round(r.msse, 1)) for r in res["records"]]
curves

# %%
# mean output firing time per true class (rows) and output neuron (columns)
from pcsnn.cli import evaluate

ev = evaluate(res["net"], test, cfg)
np.round(ev["mean_firing_time_matrix"], 0)
