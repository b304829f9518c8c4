import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noiseprop.activations import Identity, ShiftedSigmoid, StandardSigmoid
from noiseprop.density import (Empirical, Normal, QuadratureError, QuarticExp, Uniform, collect_preactivations,
                               default_bins, density_from_dict, density_integrals, fit_density, fit_empirical,
                               fit_normal, fit_quartic_exp, fit_uniform, load_density, predict_trained,
                               save_density, write_histogram_csv)
from noiseprop.network import make_symmetric
from noiseprop.train import init_network


def test_collect_preactivations_counts_and_constant():
    net = make_symmetric([1, 7, 7, 1], ShiftedSigmoid(4))
    s = collect_preactivations(net, np.full((5, 1), 0.3))
    assert [len(x) for x in s] == [35, 35, 5]
    assert all(np.ptp(x) == 0 for x in s)


def test_quartic_fit_of_standard_normal(rng):
    m = fit_quartic_exp(rng.normal(size=100_000))
    c0, c1, c2, c3, c4 = m.coeffs
    assert abs(c2 + 0.5) < 0.05
    assert abs(c3) < 0.02 and abs(c4) < 0.02
    assert m.total_mass() == pytest.approx(1.0, abs=1e-6)


def test_quartic_fit_is_bimodal(rng):
    x = np.concatenate([rng.normal(-2, 0.5, 50_000), rng.normal(2, 0.5, 50_000)])
    m = fit_quartic_exp(x)
    grid = np.linspace(m.lo, m.hi, 4001)
    p = m.pdf(grid)
    peaks = np.sum((p[1:-1] > p[:-2]) & (p[1:-1] > p[2:]))
    assert peaks == 2


def test_quartic_fit_errors(rng):
    with pytest.raises(ValueError):
        fit_quartic_exp(np.full(500, 0.3))
    with pytest.raises(ValueError):
        fit_quartic_exp(rng.normal(size=50))
    with pytest.raises(ValueError):
        fit_quartic_exp(rng.normal(size=500), bins=5)
    with pytest.raises(ValueError):
        # two clusters only ever fill a couple of bins
        fit_quartic_exp(np.repeat([0.0, 1.0], 100), bins=10)


def test_simple_fits():
    n = fit_normal([0.0, 1.0])
    assert (n.mean, n.variance) == (0.5, 0.5)
    u = fit_uniform([0.0, 1.0])
    assert (u.lo, u.hi) == (0.0, 1.0)


def test_normal_fit_recovers_parameters(rng):
    x = rng.normal(1.5, 0.7, 20_000)
    n = fit_normal(x)
    assert abs(n.mean - 1.5) < 3 * 0.7 / np.sqrt(x.size)
    assert abs(n.variance - 0.49) < 3 * 0.49 * np.sqrt(2 / x.size)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-5, 5), w=st.floats(0.1, 5), seed=st.integers(0, 2**32 - 1))
def test_uniform_fit_inside_true_range(a, w, seed):
    x = np.random.default_rng(seed).uniform(a, a + w, 50)
    u = fit_uniform(x)
    assert a <= u.lo and u.hi <= a + w


def test_every_model_normalises(rng):
    x = rng.gamma(2.0, 1.0, 5000)
    models = [fit_empirical(x), fit_normal(x), fit_uniform(x), fit_quartic_exp(x), Normal(0.2, 1e-12)]
    for m in models:
        assert m.total_mass() == pytest.approx(1.0, abs=1e-6)


def test_uniform_identity_closed_form():
    mu, eta, fp = density_integrals(Uniform(0.0, 1.0), Identity()).__dict__.values()
    assert mu == pytest.approx(0.5, abs=1e-8)
    assert eta == pytest.approx(1 / 3, abs=1e-8)
    assert fp == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(lo=st.floats(-3, 3), w=st.floats(0.01, 4))
def test_uniform_polynomial_integrands_exact(lo, w):
    hi = lo + w
    g = density_integrals(Uniform(lo, hi), Identity())
    assert g.mu == pytest.approx((lo + hi) / 2, rel=1e-8, abs=1e-10)
    assert g.eta == pytest.approx((hi**3 - lo**3) / (3 * w), rel=1e-8, abs=1e-10)


def test_point_mass_limit():
    f = StandardSigmoid()
    g = density_integrals(Normal(0.7, 1e-12), f)
    assert g.mu == pytest.approx(f(0.7), abs=1e-6)
    assert g.eta == pytest.approx(f(0.7) ** 2, abs=1e-6)
    assert g.eta_fprime == pytest.approx(f.grad(0.7) ** 2, abs=1e-6)


def test_empirical_matches_sample_averages(rng):
    x = rng.normal(0.3, 1.2, 10_000)
    f = StandardSigmoid()
    g = density_integrals(fit_empirical(x), f)
    assert g.mu == pytest.approx(np.mean(f(x)), rel=0.02)
    assert g.eta == pytest.approx(np.mean(f(x) ** 2), rel=0.02)
    assert g.eta_fprime == pytest.approx(np.mean(f.grad(x) ** 2), rel=0.02)


def test_quadrature_failure_raises():
    with pytest.raises(QuadratureError):
        Uniform(0.0, 1.0).expect(lambda z: 1.0 / z)


def test_default_bins_clamped(rng):
    assert default_bins(rng.normal(size=20)) == 10
    assert default_bins(rng.normal(size=10**6)) == 200
    assert default_bins(np.zeros(50)) == 10


def test_json_and_histogram_io(tmp_path, rng):
    x = rng.normal(size=2000)
    for m in (fit_empirical(x), fit_normal(x), fit_uniform(x), fit_quartic_exp(x)):
        path = tmp_path / f"{m.kind}.json"
        save_density(m, path)
        doc = json.loads(path.read_text())
        assert set(doc) == {"kind", "params", "support"}
        back = load_density(path)
        assert back.total_mass() == pytest.approx(1.0, abs=1e-6)
        np.testing.assert_allclose(back.pdf(np.array([-0.5, 0.0, 0.5])), m.pdf(np.array([-0.5, 0.0, 0.5])))
    with pytest.raises(ValueError):
        density_from_dict({"kind": "cauchy", "params": {}, "support": [0, 1]})
    write_histogram_csv(x, tmp_path / "h.csv", bins=12)
    rows = list(csv.reader(open(tmp_path / "h.csv")))
    assert rows[0] == ["bin_lo", "bin_hi", "mass"] and len(rows) == 13
    assert sum(float(r[2]) for r in rows[1:]) == pytest.approx(1.0)


def test_fit_density_dispatch(rng):
    x = rng.normal(size=500)
    assert isinstance(fit_density(x, "quartic_exp"), QuarticExp)
    assert isinstance(fit_density(x, "empirical"), Empirical)
    with pytest.raises(ValueError):
        fit_density(x, "kde")


def test_predict_trained_shapes(rng):
    net = init_network([6, 20, 20, 3], seed=1)
    X = rng.uniform(size=(40, 6))
    from noiseprop.network import NoiseConfig
    m, v, snr, S = predict_trained(net, X, NoiseConfig(1e-4, 1e-4, 1e-3, 1e-3), "normal")
    assert m.shape == v.shape == snr.shape == (40, 3)
    assert len(S) == 3 and all(s > 0 for s in S)
    np.testing.assert_allclose(snr, m / np.sqrt(v))
