"""Discrete-time non-leaky integrate-and-fire network with first-spike coding.

Every neuron fires at most once. Firing times are integers in ``[0, t_max]``;
the value ``t_max`` doubles as "fired in the last slot" and "never fired".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class Topology:
    layer_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise InputError("topology needs an input layer and at least one weighted layer")
        if any(n < 1 for n in sizes):
            raise InputError(f"layer sizes must be positive, got {sizes}")

    @property
    def n_weighted(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]

    def weight_shapes(self) -> list[tuple[int, int]]:
        s = self.layer_sizes
        return [(s[l + 1], s[l]) for l in range(len(s) - 1)]


@dataclass(frozen=True)
class SimParams:
    t_max: int = 256
    threshold: float = 100.0

    def __post_init__(self):
        if int(self.t_max) != self.t_max or self.t_max < 1:
            raise InputError(f"t_max must be an integer >= 1, got {self.t_max}")
        if not np.isfinite(self.threshold) or self.threshold <= 0:
            raise InputError(f"threshold must be finite and positive, got {self.threshold}")
        object.__setattr__(self, "t_max", int(self.t_max))
        object.__setattr__(self, "threshold", float(self.threshold))


@dataclass
class NetworkParams:
    """Topology plus one ``(post, pre)`` float64 weight matrix per weighted layer."""

    topology: Topology
    weights: list[np.ndarray]

    def __post_init__(self):
        shapes = self.topology.weight_shapes()
        if len(self.weights) != len(shapes):
            raise InputError(f"expected {len(shapes)} weight matrices, got {len(self.weights)}")
        ws = []
        for l, (w, shape) in enumerate(zip(self.weights, shapes), start=1):
            w = np.asarray(w, dtype=np.float64)
            if w.shape != shape:
                raise InputError(f"layer {l} weights have shape {w.shape}, expected {shape}")
            if not np.all(np.isfinite(w)):
                raise InputError(f"layer {l} weights contain non-finite values")
            ws.append(w)
        self.weights = ws

    def copy(self) -> NetworkParams:
        return NetworkParams(self.topology, [w.copy() for w in self.weights])


@dataclass
class LayerActivations:
    """Firing times for layers ``0..l_max``; ``traces[l-1]`` belongs to weighted layer ``l``."""

    times: list[np.ndarray]
    traces: list[np.ndarray] | None = field(default=None)

    @property
    def output(self) -> np.ndarray:
        return self.times[-1]


def check_times(times, size, t_max, what="firing times") -> np.ndarray:
    times = np.asarray(times)
    if times.ndim != 1 or times.shape[0] != size:
        raise InputError(f"{what}: expected a vector of length {size}, got shape {times.shape}")
    if times.size and (times.min() < 0 or times.max() > t_max):
        raise InputError(f"{what}: values must lie in [0, {t_max}]")
    if not np.issubdtype(times.dtype, np.integer):
        if not np.all(times == np.round(times)):
            raise InputError(f"{what}: values must be integers")
        times = times.astype(np.int64)
    return times


def quantize_times(t, t_max) -> np.ndarray:
    """Round half away from zero and clamp into ``[0, t_max]``."""
    t = np.asarray(t, dtype=np.float64)
    r = np.sign(t) * np.floor(np.abs(t) + 0.5)
    return np.clip(r, 0, t_max).astype(np.int64)


def membrane_trace(pre_times, weights, t_max) -> np.ndarray:
    """V_j(t) for t = 0..t_max, shape ``(post, t_max + 1)``."""
    raster = np.zeros((pre_times.shape[0], t_max + 1))
    raster[np.arange(pre_times.shape[0]), pre_times] = 1.0
    return np.cumsum(weights @ raster, axis=1)


def simulate_layer(pre_times, weights, sim: SimParams, with_trace=False):
    """Firing times of one layer driven by presynaptic first spikes.

    V_j(t) = sum_i w_ji [pre_i <= t]; the neuron fires at the first integer t
    with V_j(t) >= threshold, or reports ``t_max`` when that never happens.

    Returns ``(times, trace)``; ``trace`` is ``None`` unless requested.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2:
        raise InputError(f"weights must be 2-D, got shape {weights.shape}")
    pre_times = check_times(pre_times, weights.shape[1], sim.t_max, "presynaptic times")
    times = _first_crossing(pre_times, weights, sim.threshold, sim.t_max)
    trace = membrane_trace(pre_times, weights, sim.t_max) if with_trace else None
    return times, trace


def _first_crossing(pre_times, weights, threshold, t_max):
    n_post = weights.shape[0]
    if pre_times.size == 0:
        return np.full(n_post, t_max, dtype=np.int64)
    order = np.argsort(pre_times, kind="stable")
    ts = pre_times[order]
    # potential only needs checking at the last input of each distinct spike time
    ends = np.flatnonzero(np.append(ts[1:] != ts[:-1], True))
    v = np.cumsum(weights[:, order], axis=1)[:, ends]
    hit = v >= threshold
    fired = hit.any(axis=1)
    first = hit.argmax(axis=1)
    return np.where(fired, ts[ends][first], t_max).astype(np.int64)


def forward(net: NetworkParams, input_times, sim: SimParams, with_trace=False, masks=None):
    """Propagate input spike times through every weighted layer.

    ``masks`` optionally silences neurons: ``masks[l]`` is a boolean vector for
    layer ``l`` (``None`` entries mean all active); silenced neurons report
    ``t_max``. Used for dropout during training only.
    """
    x = check_times(input_times, net.topology.n_inputs, sim.t_max, "input times")
    times = [x]
    traces = [] if with_trace else None
    for l, w in enumerate(net.weights, start=1):
        t, v = simulate_layer(times[-1], w, sim, with_trace)
        if masks is not None and masks[l] is not None:
            t = np.where(masks[l], t, sim.t_max)
        times.append(t)
        if with_trace:
            traces.append(v)
    return LayerActivations(times, traces)


def decide(output_times) -> int:
    """Earliest output neuron wins; ties go to the lowest index."""
    return int(np.argmin(output_times))


def predict(net: NetworkParams, input_times, sim: SimParams) -> int:
    return decide(forward(net, input_times, sim).output)
