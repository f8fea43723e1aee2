"""Temporal backpropagation baseline on the same IF simulator.

Errors are measured in firing time at the output and routed backwards
through the synapses whose presynaptic spike arrived no later than the
postsynaptic spike. It shares targets, sample order, dropout and the learning
rate schedule with the predictive-coding learner so the two curves compare
like for like.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LayerActivations, NetworkParams, SimParams, check_times, decide, forward
from .errors import InputError
from .pc import (
    EpochStats,
    PCConfig,
    SampleDiagnostics,
    dynamic_targets,
    epoch_rngs,
    sample_dropout,
    summarize,
)


@dataclass
class BPState:
    times: list[np.ndarray]
    deltas: list[np.ndarray]
    loss: float


def bp_loss(output_times, targets) -> float:
    """Half the summed squared timing error."""
    t = np.asarray(output_times, dtype=np.float64)
    T = np.asarray(targets, dtype=np.float64)
    if t.shape != T.shape:
        raise InputError(f"output times {t.shape} and targets {T.shape} differ in shape")
    d = t - T
    return 0.5 * float(d @ d)


def bp_deltas(acts: LayerActivations, targets, net: NetworkParams, masks=None) -> list[np.ndarray]:
    """Per-layer error signals; index l holds layer l and index 0 is unused (zeros)."""
    times = acts.times
    L = len(times) - 1
    deltas = [np.zeros(t.shape[0]) for t in times]
    deltas[L] = times[L].astype(np.float64) - np.asarray(targets, dtype=np.float64)
    for l in range(L - 1, 0, -1):
        gate = times[l][None, :] <= times[l + 1][:, None]
        d = deltas[l + 1] @ (net.weights[l] * gate)
        if masks is not None and masks[l] is not None:
            d = np.where(masks[l], d, 0.0)
        deltas[l] = d
    return deltas


def bp_gradients(acts: LayerActivations, deltas, masks=None) -> list[np.ndarray]:
    """Descent direction per layer: delta_post * [t_pre <= t_post]."""
    grads = []
    for l in range(1, len(acts.times)):
        gate = acts.times[l - 1][None, :] <= acts.times[l][:, None]
        g = deltas[l][:, None] * gate
        if masks is not None:
            if masks[l - 1] is not None:
                g[:, ~masks[l - 1]] = 0.0
            if masks[l] is not None:
                g[~masks[l], :] = 0.0
        grads.append(g)
    return grads


def bp_weight_update(net: NetworkParams, acts: LayerActivations, deltas, eta, masks=None) -> NetworkParams:
    """w += eta * delta_post * [t_pre <= t_post], in place.

    A late neuron (delta > 0) gains weight on the inputs that reached it in
    time, which moves its spike earlier and lowers ``bp_loss``.
    """
    for w, g in zip(net.weights, bp_gradients(acts, deltas, masks)):
        w += eta * g
    return net


def reset_dead(net: NetworkParams, acts: LayerActivations, init_ranges, rng, t_max, masks=None):
    """Redraw the incoming weights of every active neuron that stayed silent."""
    for l, (lo, hi) in enumerate(init_ranges, start=1):
        dead = acts.times[l] >= t_max
        if masks is not None and masks[l] is not None:
            dead &= masks[l]
        if dead.any():
            w = net.weights[l - 1]
            w[dead] = rng.uniform(lo, hi, size=(int(dead.sum()), w.shape[1]))


def bp_train_sample(net, sample, cfg: PCConfig, sim: SimParams, eta=None, rng=None, reset_dead_neurons=False):
    """One backprop step on one sample, in place. Returns ``(net, diagnostics)``.

    The step size is ``eta / sigma`` so that one config drives both learners
    with matching update magnitudes.
    """
    x, label = sample
    x = check_times(x, net.topology.n_inputs, sim.t_max, "input times")
    eta = cfg.eta_start if eta is None else eta
    masks = sample_dropout(net.topology, cfg.dropout_rate, rng)
    acts = forward(net, x, sim, masks=masks)
    tgt = dynamic_targets(acts.output, label, cfg.gamma, sim.t_max)
    deltas = bp_deltas(acts, tgt.targets, net, masks)
    loss = bp_loss(acts.output, tgt.targets)
    bp_weight_update(net, acts, deltas, eta / cfg.sigma, masks)
    if reset_dead_neurons and rng is not None:
        reset_dead(net, acts, cfg.init_ranges, rng, sim.t_max, masks)
    # F has no meaning here; report the loss in the same units instead
    diag = SampleDiagnostics(
        predicted=decide(acts.output),
        label=int(label),
        F_before=-loss / cfg.sigma,
        F_after=-loss / cfg.sigma,
        output_sq_error=2.0 * loss,
        iterations=0,
        output_times=acts.output,
        targets=tgt.targets,
    )
    return net, diag


def bp_train_epoch(net, dataset, cfg: PCConfig, sim: SimParams, epoch=0, n_epochs=1, seed=None,
                   reset_dead_neurons=False) -> tuple[NetworkParams, EpochStats]:
    """Online pass with the same shuffle and dropout streams as ``pc.train_epoch``."""
    seed = cfg.seed if seed is None else seed
    eta = cfg.eta(epoch, n_epochs)
    order_rng, drop_rng = epoch_rngs(seed, epoch)
    diags = []
    for i in order_rng.permutation(len(dataset)):
        _, d = bp_train_sample(net, dataset[i], cfg, sim, eta, drop_rng, reset_dead_neurons)
        diags.append(d)
    return net, summarize(diags, eta)
