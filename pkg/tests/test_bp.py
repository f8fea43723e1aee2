import numpy as np
import pytest

import oracles
from helpers import as_lists, random_case
from pcsnn.bp import bp_deltas, bp_loss, bp_train_epoch, bp_train_sample, bp_weight_update, reset_dead
from pcsnn.core import NetworkParams, SimParams, Topology, forward
from pcsnn.datasets import Dataset
from pcsnn.errors import InputError
from pcsnn.pc import PCConfig, init_weights, train_epoch


def test_loss_examples():
    assert bp_loss([100], [80]) == 200.0
    assert bp_loss([5, 7], [5, 7]) == 0.0
    assert bp_loss([100, 3], [80, 1]) == bp_loss([100], [80]) + bp_loss([3], [1])
    with pytest.raises(InputError):
        bp_loss([1, 2], [1])


def chain(w_out):
    return NetworkParams(Topology((1, 1, 1)), [np.array([[1.0]]), np.array([[w_out]])])


def acts_of(times):
    from pcsnn.core import LayerActivations
    return LayerActivations([np.array(t) for t in times])


def test_delta_examples():
    d = bp_deltas(acts_of([[0], [10], [100]]), [80], chain(0.5))
    assert d[2].tolist() == [20.0] and d[1].tolist() == [10.0]
    d = bp_deltas(acts_of([[0], [120], [100]]), [80], chain(0.5))
    assert d[1].tolist() == [0.0]


def test_update_examples():
    net = NetworkParams(Topology((1, 1)), [np.array([[1.0]])])
    bp_weight_update(net, acts_of([[5], [100]]), [np.zeros(1), np.array([20.0])], 0.1)
    assert net.weights[0].tolist() == [[3.0]]
    net = NetworkParams(Topology((1, 1)), [np.array([[1.0]])])
    bp_weight_update(net, acts_of([[150], [100]]), [np.zeros(1), np.array([20.0])], 0.1)
    assert net.weights[0].tolist() == [[1.0]]
    bp_weight_update(net, acts_of([[5], [100]]), [np.zeros(1), np.array([20.0])], 0.0)
    assert net.weights[0].tolist() == [[1.0]]


def test_update_moves_late_neuron_earlier():
    sim = SimParams(256, 100.0)
    net = NetworkParams(Topology((2, 1)), [np.array([[40.0, 40.0]])])
    x = np.array([10, 60])
    acts = forward(net, x, sim)
    assert acts.output.tolist() == [256]
    T = [30]
    before = bp_loss(acts.output, T)
    bp_weight_update(net, acts, bp_deltas(acts, T, net), 0.05)
    assert bp_loss(forward(net, x, sim).output, T) < before


def test_deltas_match_oracle():
    rng = np.random.default_rng(31)
    for _ in range(300):
        net, sim, x = random_case(rng)
        acts = forward(net, x, sim)
        T = np.clip(acts.output + rng.integers(-5, 6, acts.output.size), 0, sim.t_max)
        got = bp_deltas(acts, T, net)
        want = oracles.bp_deltas(as_lists(net), [a.tolist() for a in acts.times], T.tolist())
        for l in range(1, len(got)):
            np.testing.assert_allclose(got[l], want[l], rtol=0, atol=1e-12)


def test_two_two_two_chain_rule_by_hand():
    rng = np.random.default_rng(4)
    sim = SimParams(16, 3.0)
    for _ in range(50):
        w1 = rng.uniform(0, 4, (2, 2))
        w2 = rng.uniform(0, 4, (2, 2))
        net = NetworkParams(Topology((2, 2, 2)), [w1.copy(), w2.copy()])
        x = rng.integers(0, 17, 2)
        acts = forward(net, x, sim)
        h, o = acts.times[1], acts.output
        T = np.clip(o + rng.integers(-4, 5, 2), 0, 16)
        eta = 0.05
        do = [o[0] - T[0], o[1] - T[1]]
        dh = [do[0] * w2[0, 0] * (h[0] <= o[0]) + do[1] * w2[1, 0] * (h[0] <= o[1]),
              do[0] * w2[0, 1] * (h[1] <= o[0]) + do[1] * w2[1, 1] * (h[1] <= o[1])]
        e2 = np.array([[w2[k, j] + eta * do[k] * (h[j] <= o[k]) for j in range(2)] for k in range(2)])
        e1 = np.array([[w1[j, i] + eta * dh[j] * (x[i] <= h[j]) for i in range(2)] for j in range(2)])
        bp_weight_update(net, acts, bp_deltas(acts, T, net), eta)
        np.testing.assert_allclose(net.weights[1], e2, rtol=0, atol=1e-12)
        np.testing.assert_allclose(net.weights[0], e1, rtol=0, atol=1e-12)


def test_fixed_point_no_movement():
    w = np.array([[100.0, 0.0], [0.0, 100.0]])
    net = NetworkParams(Topology((2, 2, 2)), [w.copy(), w.copy()])
    _, d = bp_train_sample(net, (np.array([10, 50]), 0), PCConfig(gamma=20), SimParams())
    assert d.output_sq_error == 0.0
    assert np.array_equal(net.weights[0], w) and np.array_equal(net.weights[1], w)


def _ds(n=16):
    rng = np.random.default_rng(2)
    return Dataset(rng.integers(0, 33, (n, 6)), rng.integers(0, 3, n), 3)


def test_bp_epochs_reproducible():
    cfg, sim = PCConfig(dropout_rate=0.5), SimParams(32, 10.0)
    nets = []
    for _ in range(2):
        net = init_weights(Topology((6, 4, 3)), ((0, 10), (0, 10)), 0)
        bp_train_epoch(net, _ds(), cfg, sim, 0, 2)
        bp_train_epoch(net, _ds(), cfg, sim, 1, 2)
        nets.append(net)
    assert all(np.array_equal(a, b) for a, b in zip(nets[0].weights, nets[1].weights))


def test_shares_sample_order_and_dropout_with_pc():
    # with eta = 0 nothing learns, so equal per-epoch stats mean equal orders and masks
    cfg = PCConfig(dropout_rate=0.5, eta_start=0.0, eta_end=0.0, inference_iters=0)
    sim = SimParams(32, 10.0)
    net = init_weights(Topology((6, 4, 3)), ((0, 10), (0, 10)), 0)
    _, a = train_epoch(net.copy(), _ds(40), cfg, sim, 3, 5)
    _, b = bp_train_epoch(net.copy(), _ds(40), cfg, sim, 3, 5)
    assert a.train_acc == b.train_acc and a.msse == b.msse


def test_reset_dead_redraws_silent_rows_only():
    net = NetworkParams(Topology((2, 2)), [np.array([[0.0, 0.0], [100.0, 0.0]])])
    acts = forward(net, np.array([1, 2]), SimParams(16, 50.0))
    reset_dead(net, acts, ((5.0, 6.0),), np.random.default_rng(0), 16)
    assert (net.weights[0][0] >= 5).all() and net.weights[0][1].tolist() == [100.0, 0.0]
