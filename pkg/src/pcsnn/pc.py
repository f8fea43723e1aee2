"""Predictive-coding training for first-spike IF networks.

Firing times of hidden neurons are treated as latent variables. For every
sample the output layer is clamped to dynamic targets, hidden times relax by
gradient ascent on the objective

    F = -1/2 * sum_l sum_j (t_j^l - that_j^l)^2 / sigma

where ``that`` is the firing time predicted from the layer below, and then
each weight moves by a product of its postsynaptic error node and a 0/1
presynaptic spike count. Every update reads only adjacent-layer quantities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import NetworkParams, SimParams, Topology, _first_crossing, check_times, decide, forward
from .errors import InputError


@dataclass(frozen=True)
class PCConfig:
    sigma: float = 10.0
    alpha: float = 1.0
    eta_start: float = 0.06
    eta_end: float = 0.02
    gamma: int = 20
    inference_iters: int = 20
    inference_step: float = 1.0
    inference_tol: float = 1e-3
    dropout_rate: float = 0.0
    init_ranges: tuple[tuple[float, float], ...] = ((0.0, 5.0), (0.0, 10.0))
    batch_size: int = 1
    seed: int = 0

    def __post_init__(self):
        for name in ("sigma", "alpha", "inference_step"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if self.eta_start < 0 or self.eta_end < 0:
            raise InputError("learning rates must be non-negative")
        if int(self.gamma) != self.gamma or self.gamma <= 0:
            raise InputError("gamma must be a positive integer")
        if int(self.inference_iters) != self.inference_iters or self.inference_iters < 0:
            raise InputError("inference_iters must be a non-negative integer")
        if self.inference_tol < 0:
            raise InputError("inference_tol must be >= 0")
        if not 0 <= self.dropout_rate < 1:
            raise InputError("dropout_rate must lie in [0, 1)")
        if self.batch_size < 1:
            raise InputError("batch_size must be >= 1")
        ranges = tuple((float(lo), float(hi)) for lo, hi in self.init_ranges)
        if any(lo > hi for lo, hi in ranges):
            raise InputError("init ranges need lo <= hi")
        object.__setattr__(self, "init_ranges", ranges)

    def eta(self, epoch: int, n_epochs: int) -> float:
        """Learning rate for ``epoch``, decaying linearly from start to end."""
        if n_epochs <= 1:
            return self.eta_start
        frac = epoch / (n_epochs - 1)
        return self.eta_start + (self.eta_end - self.eta_start) * frac


class TargetSpec(NamedTuple):
    targets: np.ndarray
    tau: int


def dynamic_targets(output_times, label, gamma, t_max) -> TargetSpec:
    """Pull the true class to the earliest output time and push the rest at least gamma later."""
    t = np.asarray(output_times, dtype=np.int64)
    if not 0 <= label < t.shape[0]:
        raise InputError(f"label {label} outside [0, {t.shape[0]})")
    tau = int(t.min())
    targets = np.maximum(tau + gamma, t)
    targets[label] = tau
    return TargetSpec(np.clip(targets, 0, t_max), tau)


def init_weights(topology: Topology, init_ranges, seed) -> NetworkParams:
    """Uniform random weights, one ``(lo, hi)`` range per weighted layer."""
    shapes = topology.weight_shapes()
    if len(init_ranges) != len(shapes):
        raise InputError(f"need {len(shapes)} init ranges, got {len(init_ranges)}")
    rng = np.random.default_rng(seed)
    weights = [rng.uniform(lo, hi, size=shape) for (lo, hi), shape in zip(init_ranges, shapes)]
    return NetworkParams(topology, weights)


@dataclass
class InferenceState:
    """Relaxed firing times ``t``, predictions ``t_hat`` and error nodes ``eps`` per layer.

    Index 0 is the clamped input; its ``t_hat``/``eps`` entries are unused.
    ``masks[l]`` marks active neurons of a hidden layer (``None`` = all active).
    """

    t: list[np.ndarray]
    t_hat: list[np.ndarray]
    eps: list[np.ndarray]
    masks: list
    t_max: int
    F: float = 0.0
    _pred_from: list = field(default_factory=list, repr=False)

    @property
    def n_layers(self) -> int:
        return len(self.t)


def round_times(t) -> np.ndarray:
    """Round half away from zero without clamping."""
    t = np.asarray(t, dtype=np.float64)
    return (np.sign(t) * np.floor(np.abs(t) + 0.5)).astype(np.int64)


def init_state(acts_times, targets, t_max, masks=None) -> InferenceState:
    """Start every layer at its forward-pass times, then clamp the output to ``targets``."""
    t = [np.asarray(x, dtype=np.float64).copy() for x in acts_times]
    t[-1] = np.asarray(targets, dtype=np.float64).copy()
    L = len(t) - 1
    if masks is None:
        masks = [None] * (L + 1)
    t_hat = [x.copy() for x in t]
    eps = [np.zeros_like(x) for x in t]
    return InferenceState(t, t_hat, eps, list(masks), t_max, 0.0, [None] * (L + 1))


def refresh_predictions(state: InferenceState, net: NetworkParams, sim: SimParams) -> None:
    """Recompute ``t_hat`` from the rounded, clamped activity of the layer below."""
    t_max = sim.t_max
    for l in range(1, state.n_layers):
        pre = np.clip(round_times(state.t[l - 1]), 0, t_max)
        if state._pred_from[l] is not None and np.array_equal(pre, state._pred_from[l]):
            continue
        t_hat = _first_crossing(pre, net.weights[l - 1], sim.threshold, t_max).astype(np.float64)
        mask = state.masks[l]
        if mask is not None:
            t_hat[~mask] = t_max
            state.t[l][~mask] = t_max
        state.t_hat[l] = t_hat
        state._pred_from[l] = pre


def compute_errors(state: InferenceState, sigma) -> None:
    for l in range(1, state.n_layers):
        state.eps[l] = (state.t[l] - state.t_hat[l]) / sigma
    state.F = free_energy(state, sigma)


def free_energy(state: InferenceState, sigma) -> float:
    total = 0.0
    for l in range(1, state.n_layers):
        d = state.t[l] - state.t_hat[l]
        total += float(d @ d)
    return -0.5 * total / sigma


def time_derivatives(state: InferenceState, net: NetworkParams, alpha) -> list:
    """dF/dt for each hidden layer (index l-1 holds layer l), from the current snapshot."""
    out = []
    for l in range(1, state.n_layers - 1):
        w = net.weights[l]  # layer l -> l+1, shape (n^{l+1}, n^l)
        gate = state.t[l][None, :] <= state.t_hat[l + 1][:, None]
        bottom_up = (state.eps[l + 1] @ (w * gate)) / alpha
        dt = -state.eps[l] + bottom_up
        if state.masks[l] is not None:
            dt = np.where(state.masks[l], dt, 0.0)
        out.append(dt)
    return out


def inference_step(state: InferenceState, net: NetworkParams, cfg: PCConfig) -> float:
    """One Jacobi update of all hidden firing times; returns max |dt/dstep|."""
    dts = time_derivatives(state, net, cfg.alpha)
    biggest = 0.0
    for l, dt in enumerate(dts, start=1):
        state.t[l] = state.t[l] + cfg.inference_step * dt
        if dt.size:
            biggest = max(biggest, float(np.abs(dt).max()))
    return biggest


def weight_gradient(state: InferenceState, net: NetworkParams, cfg: PCConfig) -> list[np.ndarray]:
    """dF/dw for every layer: eps_post * (-1/alpha) * [round(t_pre) <= that_post]."""
    grads = []
    for l in range(1, state.n_layers):
        pre = round_times(state.t[l - 1])
        gate = pre[None, :] <= state.t_hat[l][:, None]
        g = (state.eps[l] * (-1.0 / cfg.alpha))[:, None] * gate
        if state.masks[l - 1] is not None:
            g[:, ~state.masks[l - 1]] = 0.0
        if state.masks[l] is not None:
            g[~state.masks[l], :] = 0.0
        grads.append(g)
    return grads


def sample_dropout(topology: Topology, rate, rng) -> list:
    """Per-layer activity masks; only hidden layers are ever dropped."""
    masks = [None] * len(topology.layer_sizes)
    if rate <= 0 or rng is None:
        return masks
    for l in range(1, topology.n_weighted):
        masks[l] = rng.random(topology.layer_sizes[l]) >= rate
    return masks


def eval_network(net: NetworkParams, dropout_rate) -> NetworkParams:
    """Copy of ``net`` for dropout-free evaluation.

    Weights leaving each hidden layer are scaled by the keep probability so a
    postsynaptic neuron sees the same expected input as during training.
    """
    if dropout_rate <= 0:
        return net
    out = net.copy()
    for w in out.weights[1:]:
        w *= 1.0 - dropout_rate
    return out


class SampleDiagnostics(NamedTuple):
    predicted: int
    label: int
    F_before: float
    F_after: float
    output_sq_error: float
    iterations: int
    output_times: np.ndarray
    targets: np.ndarray


def relax(net: NetworkParams, input_times, label, cfg: PCConfig, sim: SimParams, rng=None):
    """Forward pass, dynamic targets and inference. Returns ``(state, diagnostics)``."""
    masks = sample_dropout(net.topology, cfg.dropout_rate, rng)
    acts = forward(net, input_times, sim, masks=masks)
    tgt = dynamic_targets(acts.output, label, cfg.gamma, sim.t_max)
    state = init_state(acts.times, tgt.targets, sim.t_max, masks)
    refresh_predictions(state, net, sim)
    compute_errors(state, cfg.sigma)
    F_before = state.F
    iters = 0
    for iters in range(1, cfg.inference_iters + 1):
        if iters > 1:
            refresh_predictions(state, net, sim)
            compute_errors(state, cfg.sigma)
        if inference_step(state, net, cfg) < cfg.inference_tol:
            break
    # errors and predictions must describe the final activities
    refresh_predictions(state, net, sim)
    compute_errors(state, cfg.sigma)
    out_err = state.t[-1] - state.t_hat[-1]
    diag = SampleDiagnostics(
        predicted=decide(acts.output),
        label=int(label),
        F_before=F_before,
        F_after=state.F,
        output_sq_error=float(out_err @ out_err),
        iterations=iters,
        output_times=acts.output,
        targets=tgt.targets,
    )
    return state, diag


def apply_update(net: NetworkParams, grads, eta) -> None:
    for w, g in zip(net.weights, grads):
        w += eta * g


def train_sample(net: NetworkParams, sample, cfg: PCConfig, sim: SimParams, eta=None, rng=None):
    """Learn from one sample in place: relax, then step weights along dF/dw.

    ``eta`` defaults to the first-epoch rate. Returns ``(net, diagnostics)``.
    """
    input_times, label = sample
    input_times = check_times(input_times, net.topology.n_inputs, sim.t_max, "input times")
    state, diag = relax(net, input_times, label, cfg, sim, rng)
    apply_update(net, weight_gradient(state, net, cfg), cfg.eta_start if eta is None else eta)
    return net, diag


@dataclass
class EpochStats:
    n_samples: int
    train_acc: float
    msse: float
    mean_F: float
    eta: float


def epoch_rngs(seed, epoch):
    """Independent generators for sample order and dropout, keyed by (seed, epoch)."""
    return np.random.default_rng([seed, epoch, 0]), np.random.default_rng([seed, epoch, 1])


def summarize(diags, eta) -> EpochStats:
    if not diags:
        return EpochStats(0, 0.0, float("nan"), float("nan"), eta)
    correct = sum(d.predicted == d.label for d in diags)
    return EpochStats(
        n_samples=len(diags),
        train_acc=correct / len(diags),
        msse=float(np.mean([d.output_sq_error for d in diags])),
        mean_F=float(np.mean([d.F_after for d in diags])),
        eta=eta,
    )


def train_epoch(net, dataset, cfg: PCConfig, sim: SimParams, epoch=0, n_epochs=1, seed=None):
    """One online pass over a seeded shuffle of ``dataset``. Returns ``(net, EpochStats)``.

    With ``cfg.batch_size > 1`` the weight gradients of each mini-batch are
    computed against the same weights and averaged before one update.
    """
    seed = cfg.seed if seed is None else seed
    eta = cfg.eta(epoch, n_epochs)
    order_rng, drop_rng = epoch_rngs(seed, epoch)
    order = order_rng.permutation(len(dataset))
    diags = []
    for start in range(0, len(order), cfg.batch_size):
        batch = order[start:start + cfg.batch_size]
        if cfg.batch_size == 1:
            _, d = train_sample(net, dataset[batch[0]], cfg, sim, eta, drop_rng)
            diags.append(d)
            continue
        acc = [np.zeros_like(w) for w in net.weights]
        for i in batch:
            x, y = dataset[i]
            state, d = relax(net, x, y, cfg, sim, drop_rng)
            for a, g in zip(acc, weight_gradient(state, net, cfg)):
                a += g
            diags.append(d)
        apply_update(net, [a / len(batch) for a in acc], eta)
    return net, summarize(diags, eta)
