"""Random small networks for oracle comparisons."""

import numpy as np

from pcsnn.core import NetworkParams, SimParams, Topology


def random_case(rng, max_layers=3, max_width=5, max_tmax=16):
    """A small net whose neurons fire at scattered times rather than all at once or never."""
    n_weighted = int(rng.integers(1, max_layers + 1))
    sizes = tuple(int(s) for s in rng.integers(1, max_width + 1, size=n_weighted + 1))
    t_max = int(rng.integers(1, max_tmax + 1))
    threshold = float(rng.uniform(0.5, 6.0))
    weights = [rng.uniform(-1.5, 4.0, size=(sizes[l + 1], sizes[l])) for l in range(n_weighted)]
    if rng.random() < 0.2:
        # integer weights make exact threshold hits likely
        weights = [np.round(w) for w in weights]
    net = NetworkParams(Topology(sizes), weights)
    x = rng.integers(0, t_max + 1, size=sizes[0])
    return net, SimParams(t_max, threshold), x


def as_lists(net):
    return [w.tolist() for w in net.weights]
