"""Slow reference implementations written straight from the neuron and learning rules.

Nothing here imports the vectorized code paths. Everything loops over
explicit 0/1 spike rasters and scalar indicators, so agreement with the
library is evidence, not a tautology.
"""

import math


def raster(times, t_max):
    """List of 0/1 rows, one per neuron, with a single 1 at the firing step."""
    rows = []
    for t in times:
        row = [0] * (t_max + 1)
        row[int(t)] = 1
        rows.append(row)
    return rows


def simulate(pre_times, weights, threshold, t_max):
    """Step through time accumulating w * S(t); first crossing wins, else t_max."""
    S = raster(pre_times, t_max)
    out = []
    for row in weights:
        v = 0.0
        fired = t_max
        for t in range(t_max + 1):
            for i, w in enumerate(row):
                v += w * S[i][t]
            if v >= threshold:
                fired = t
                break
        out.append(fired)
    return out


def forward(weights, x, threshold, t_max):
    layers = [list(x)]
    for w in weights:
        layers.append(simulate(layers[-1], w, threshold, t_max))
    return layers


def half_away(v):
    return int(math.copysign(math.floor(abs(v) + 0.5), v))


def predictions(t, weights, threshold, t_max, masks):
    """t_hat for layers 1..L from rounded, clamped activities below; masked units pinned to t_max."""
    t_hat = [None]
    for l, w in enumerate(weights, start=1):
        pre = [min(max(half_away(v), 0), t_max) for v in t[l - 1]]
        th = simulate(pre, w, threshold, t_max)
        if masks[l] is not None:
            th = [t_max if not m else v for v, m in zip(th, masks[l])]
        t_hat.append([float(v) for v in th])
    return t_hat


def pc_step(weights, t, threshold, t_max, sigma, alpha, beta, masks):
    """One refresh + error + Jacobi update. Returns (new t, eps, t_hat, max |dt|)."""
    t = [list(map(float, layer)) for layer in t]
    for l in range(1, len(t)):
        if masks[l] is not None:
            t[l] = [t_max if not m else v for v, m in zip(t[l], masks[l])]
    t_hat = predictions(t, weights, threshold, t_max, masks)
    eps = [None] + [[(a - b) / sigma for a, b in zip(t[l], t_hat[l])] for l in range(1, len(t))]
    new = [layer[:] for layer in t]
    biggest = 0.0
    for l in range(1, len(t) - 1):
        w_up = weights[l]
        for j in range(len(t[l])):
            if masks[l] is not None and not masks[l][j]:
                continue
            d = -eps[l][j]
            for k in range(len(t[l + 1])):
                if t[l][j] <= t_hat[l + 1][k]:
                    d += eps[l + 1][k] * w_up[k][j] / alpha
            new[l][j] = t[l][j] + beta * d
            biggest = max(biggest, abs(d))
    return new, eps, t_hat, biggest


def pc_weight_grad(weights, t, eps, t_hat, alpha, masks):
    """eps_k * (-1/alpha) * (spike count of round(t_j) up to t_hat_k), by explicit scan."""
    grads = []
    for l, w in enumerate(weights, start=1):
        g = []
        for k in range(len(w)):
            row = []
            for j in range(len(w[k])):
                r = half_away(t[l - 1][j])
                count = sum(1 for tau in range(min(r, 0), int(t_hat[l][k]) + 1) if tau == r)
                dropped = (masks[l - 1] is not None and not masks[l - 1][j]) or \
                          (masks[l] is not None and not masks[l][k])
                row.append(0.0 if dropped else eps[l][k] * (-1.0 / alpha) * count)
            g.append(row)
        grads.append(g)
    return grads


def bp_deltas(weights, layers, targets):
    """Output error t - T, pushed down through synapses whose pre spike came no later than the post spike."""
    L = len(layers) - 1
    deltas = [None] * (L + 1)
    deltas[L] = [float(a - b) for a, b in zip(layers[L], targets)]
    for l in range(L - 1, 0, -1):
        S = raster(layers[l], max(max(layers[l]), max(layers[l + 1])))
        d = []
        for j in range(len(layers[l])):
            s = 0.0
            for k in range(len(layers[l + 1])):
                arrived = sum(S[j][tau] for tau in range(int(layers[l + 1][k]) + 1))
                s += deltas[l + 1][k] * weights[l][k][j] * arrived
            d.append(s)
        deltas[l] = d
    return deltas


def targets(out, label, gamma, t_max):
    tau = min(out)
    T = [min(max(max(tau + gamma, v), 0), t_max) for v in out]
    T[label] = tau
    return T
