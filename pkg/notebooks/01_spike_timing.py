# %% [markdown]
# # From pixels to first spikes
#
# A bright pixel fires early and a dark one fires late, or never. This script
# encodes one image, pushes it through one random layer, and checks where
# each neuron's membrane potential crosses threshold.

# %%
import numpy as np

from pcsnn import EncodingParams, SimParams, encode_image, simulate_layer, to_raster

rng = np.random.default_rng(0)

# %%
# a fake 8x8 "digit": a bright vertical bar on a dim background
img = np.full((8, 8), 20)
img[:, 3:5] = 255
img[2, :] = 180

t_in = encode_image(img, EncodingParams(p_max=255, t_max=64))
t_in.reshape(8, 8)

# %%
raster = to_raster(t_in, 64)
raster.shape, raster.sum(axis=1).max()  # one spike per input, at most

# %%
# five IF neurons with random positive weights
w = rng.uniform(0, 12, size=(5, 64))
times, trace = simulate_layer(t_in, w, SimParams(t_max=64, threshold=100), with_trace=True)
times

# %%
# the trace is V(t); the first crossing of 100 is the firing time
for j in range(5):
    above = np.flatnonzero(trace[j] >= 100)
    print(j, times[j], above[:1], trace[j, [0, 8, 16, 32, 64]].round(1))

# %%
# raising one weight can only make a neuron fire sooner
w2 = w.copy()
w2[0] += 5
simulate_layer(t_in, w2, SimParams(64, 100))[0][0] <= times[0]
