# %% [markdown]
# # One sample, step by step
#
# Clamp the output layer to its dynamic targets, let the hidden firing times
# relax, then take one weight step. The objective F should rise toward 0
# (it is a negative sum of squares).

# %%
import numpy as np

from pcsnn import PCConfig, SimParams, Topology, forward, init_weights
from pcsnn.pc import compute_errors, dynamic_targets, init_state, inference_step, refresh_predictions, weight_gradient

rng = np.random.default_rng(1)
sim = SimParams(t_max=64, threshold=100)
net = init_weights(Topology((30, 12, 3)), ((0, 15), (0, 40)), seed=1)
x = rng.integers(0, 65, 30)
label = 2

# %%
acts = forward(net, x, sim)
spec = dynamic_targets(acts.output, label, gamma=8, t_max=sim.t_max)
acts.output, spec.targets

# %%
cfg = PCConfig(sigma=10, gamma=8, inference_step=0.5)
state = init_state(acts.times, spec.targets, sim.t_max)
history = []
for it in range(10):
    refresh_predictions(state, net, sim)
    compute_errors(state, cfg.sigma)
    history.append(state.F)
    if inference_step(state, net, cfg) < cfg.inference_tol:
        break
np.round(history, 2)

# %%
# only the top layer carried error at the start; inference spreads it down
refresh_predictions(state, net, sim)
compute_errors(state, cfg.sigma)
[np.abs(e).sum().round(3) for e in state.eps[1:]]

# %%
grads = weight_gradient(state, net, cfg)
[g.shape for g in grads], [float(np.abs(g).max()) for g in grads]

# %%
for w, g in zip(net.weights, grads):
    w += 0.05 * g
forward(net, x, sim).output, spec.targets
