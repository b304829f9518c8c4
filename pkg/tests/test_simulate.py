import csv

import numpy as np
import pytest

from noiseprop.activations import Identity, ShiftedSigmoid, StandardSigmoid
from noiseprop.network import LayerSpec, Network, NoiseConfig, make_symmetric
from noiseprop.simulate import (NoiseStream, NumericalError, estimate, forward_noisy, snr_curve,
                                write_layer_csv)


def identity_net(width=1):
    return Network((LayerSpec(width, Identity()), LayerSpec(width, Identity(), np.eye(width))))


def test_zero_noise_equals_clean_pass():
    net = make_symmetric([1, 20, 20, 1], ShiftedSigmoid(4))
    outs = forward_noisy(net, [0.3], NoiseConfig(), NoiseStream(1), reps=4)
    _, post = net.forward([[0.3]])
    for y, p in zip(outs, post):
        assert np.array_equal(y, np.broadcast_to(p, y.shape))


def test_zero_noise_estimate_has_undefined_snr():
    net = make_symmetric([1, 5, 1], ShiftedSigmoid(4))
    est = estimate(net, np.linspace(0, 1, 7).reshape(-1, 1), NoiseConfig(), K=10, master_seed=3)
    for n in range(1, net.depth + 1):
        assert np.all(est.variance[n - 1] == 0)
        assert np.all(np.isnan(est.snr(n)))
    points, omitted = snr_curve(est, net.depth)
    assert points.shape == (0, 2) and omitted == 7


def test_additive_draw_at_zero_input():
    noise = NoiseConfig(d_add_uncorr=1e-4)
    outs = forward_noisy(identity_net(), [0.0], noise, NoiseStream(5), reps=50000)
    y = outs[0][:, 0]
    assert abs(y.mean()) < 4 * np.sqrt(2e-4 / y.size)
    assert y.var() == pytest.approx(2e-4, rel=0.03)


def test_correlated_multiplicative_at_unit_input():
    outs = forward_noisy(identity_net(), [1.0], NoiseConfig(d_mult_corr=1e-3), NoiseStream(6), reps=100000)
    assert outs[0][:, 0].var(ddof=1) == pytest.approx(2e-3, rel=0.03)


def test_single_neuron_estimate():
    est = estimate(identity_net(), [[0.5]], NoiseConfig(d_add_uncorr=1e-4), K=100000, master_seed=11)
    assert est.variance[0][0, 0] == pytest.approx(2e-4, rel=0.03)
    assert est.snr(1)[0, 0] == pytest.approx(0.5 / np.sqrt(2e-4), rel=0.03)


def test_k_below_two_rejected():
    with pytest.raises(ValueError):
        estimate(identity_net(), [[0.5]], NoiseConfig(d_add_uncorr=1e-4), K=1, master_seed=0)


def test_input_length_checked():
    with pytest.raises(ValueError):
        forward_noisy(identity_net(2), [0.5], NoiseConfig(), NoiseStream(0))


def test_correlation_structure():
    net = identity_net(4)
    corr = forward_noisy(net, [0.5] * 4, NoiseConfig(d_add_corr=1e-4), NoiseStream(1), reps=10000)[0]
    c = np.corrcoef(corr.T)
    assert c[np.triu_indices(4, 1)].min() > 0.99
    unc = forward_noisy(net, [0.5] * 4, NoiseConfig(d_add_uncorr=1e-4), NoiseStream(1), reps=10000)[0]
    c = np.corrcoef(unc.T)
    assert np.abs(c[np.triu_indices(4, 1)]).max() < 0.05


def test_correlated_draws_fresh_across_layers():
    net = identity_net(3)
    outs = forward_noisy(net, [0.0] * 3, NoiseConfig(d_add_corr=1e-4), NoiseStream(2), reps=10000)
    # layer 2 output = layer 1 noise (passed through) + its own draw: correlation 1/sqrt(2)
    r = np.corrcoef(outs[0][:, 0], outs[1][:, 0] - outs[0][:, 0])[0, 1]
    assert abs(r) < 0.05


def test_determinism_across_workers():
    net = make_symmetric([1, 30, 30, 1], ShiftedSigmoid(4))
    X = np.linspace(0, 1, 9).reshape(-1, 1)
    noise = NoiseConfig(1e-4, 1e-4, 1e-3, 1e-3)
    a = estimate(net, X, noise, K=64, master_seed=2**63 + 17, workers=1)
    b = estimate(net, X, noise, K=64, master_seed=2**63 + 17, workers=4)
    for n in range(net.depth):
        assert np.array_equal(a.mean[n], b.mean[n])
        assert np.array_equal(a.variance[n], b.variance[n])
    # chunking changes only the summation order
    d = estimate(net, X, noise, K=64, master_seed=2**63 + 17, chunk=5)
    np.testing.assert_allclose(d.variance[-1], a.variance[-1], rtol=1e-10)
    c = estimate(net, X, noise, K=64, master_seed=18)
    assert not np.array_equal(a.mean[-1], c.mean[-1])


def test_chi_square_band_for_k300():
    # per-neuron variance estimates at K=300 fall within the sampling band for ~95% of neurons
    net = identity_net(200)
    est = estimate(net, [[0.4] * 200], NoiseConfig(d_add_uncorr=1e-4), K=300, master_seed=4)
    rel = np.abs(est.variance[0][0] / 2e-4 - 1)
    assert np.mean(rel <= 1.96 * np.sqrt(2 / 299)) >= 0.9


def test_non_finite_reports_layer_and_neuron():
    w = np.array([[1e308, 1e308], [1.0, 1.0]])
    net = Network((LayerSpec(2, Identity()), LayerSpec(2, Identity(), w)))
    with pytest.raises(NumericalError, match="layer 2, neuron 1"):
        forward_noisy(net, [1e308, 1e308], NoiseConfig(), NoiseStream(0))


def test_snr_curve_and_csv(tmp_path):
    net = make_symmetric([1, 4, 1], StandardSigmoid())
    est = estimate(net, [[0.2]], NoiseConfig(d_add_uncorr=1e-4), K=50, master_seed=1)
    points, omitted = snr_curve(est, 3)
    assert points.shape == (1, 2) and omitted == 0
    with pytest.raises(IndexError):
        snr_curve(est, 4)
    path = tmp_path / "l2.csv"
    write_layer_csv(est, 2, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "neuron", "mean", "variance", "snr"]
    assert len(rows) == 1 + 4
    assert float(rows[1][4]) == pytest.approx(float(rows[1][2]) / np.sqrt(float(rows[1][3])))
    zero = estimate(net, [[0.2]], NoiseConfig(), K=5, master_seed=1)
    write_layer_csv(zero, 3, path)
    assert list(csv.reader(open(path)))[1][4] == ""


@pytest.mark.parametrize("m", [0.2, 0.5, 0.8])
def test_additive_snr_law(m):
    est = estimate(identity_net(), [[m]], NoiseConfig(d_add_uncorr=2e-4), K=10000, master_seed=21)
    assert est.snr(1)[0, 0] == pytest.approx(m / np.sqrt(4e-4), rel=0.05)
