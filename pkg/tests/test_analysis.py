import numpy as np
import pytest

from ghzloops.analysis import (
    SpanEstimate,
    chi2_gof,
    estimate_p_span,
    estimate_threshold,
    integrated_autocorr,
    loop_size_stats,
    spans,
)
from ghzloops.errors import MissingBoundaryMarks, NoCrossing
from ghzloops.lattice import Boundary, LatticeKind, LatticeSpec, build_lattice
from ghzloops.oracle import exact_span_prob
from ghzloops.sampler import SamplerParams, Start
from ghzloops.weights import OutcomeConfig, Regime, WeightModel, decompose


def test_spans_examples(hc3, hc3_open):
    for cx in (hc3, hc3_open):
        dec = decompose(cx, OutcomeConfig.all_keep(cx))
        assert not spans(dec, cx)
        dec = decompose(cx, OutcomeConfig.all_merge(cx))
        assert spans(dec, cx)
    # single bulk merge on an open L=3 lattice cannot reach opposite sides
    bulk = next(v for v in range(hc3_open.n_V) if hc3_open.degree(v) == 3)
    dec = decompose(hc3_open, OutcomeConfig.all_keep(hc3_open).flipped(bulk))
    assert not spans(dec, hc3_open)


def test_spans_needs_winding_or_marks():
    from ghzloops.lattice import generate_mixed_planar

    cx = generate_mixed_planar(3, 12)  # torus-like, no winding offsets
    dec = decompose(cx, OutcomeConfig.all_merge(cx))
    with pytest.raises(MissingBoundaryMarks):
        spans(dec, cx)


def test_autocorr_iid_series():
    rng = np.random.default_rng(0)
    x = rng.normal(size=20_000)
    tau = integrated_autocorr(x)
    assert 0.4 < tau < 0.65


def test_autocorr_correlated_series():
    rng = np.random.default_rng(1)
    # AR(1) with rho = 0.8 has tau_int = 0.5*(1+rho)/(1-rho) = 4.5
    n = 60_000
    x = np.empty(n)
    x[0] = 0.0
    eps = rng.normal(size=n)
    for i in range(1, n):
        x[i] = 0.8 * x[i - 1] + eps[i]
    tau = integrated_autocorr(x)
    assert 3.3 < tau < 5.8


def test_estimate_p_span_matches_enumeration(hc2):
    model = WeightModel.for_g(0.5)
    params = SamplerParams(n_samples=8000, burn_in_sweeps=500, thinning_sweeps=3, seed=21)
    est = estimate_p_span(hc2, model, params)
    exact = exact_span_prob(hc2, 0.5, Regime.SUB)
    assert abs(est.p_span - exact) < 3 * max(est.stderr, 1e-4)
    assert 0 <= est.p_span <= 1
    assert est.stderr > 0


def test_p_span_zero_at_fixed_point(hc2):
    model = WeightModel.for_g(1.0)
    params = SamplerParams(n_samples=50, burn_in_sweeps=10, thinning_sweeps=1,
                           start=Start.COLD_KEEP, seed=2)
    est = estimate_p_span(hc2, model, params)
    assert est.p_span == 0.0


def _curves(f, gs, sizes, err=0.01):
    out = []
    for L in sizes:
        for g in gs:
            out.append(SpanEstimate(g=float(g), L=L, n_samples=1000,
                                    p_span=float(f(g, L)), stderr=err,
                                    autocorr_time=0.5))
    return out


def test_threshold_from_synthetic_crossing():
    # logistic curves steepening with L all cross at exactly g = 0.76
    gs = np.linspace(0.70, 0.82, 13)
    f = lambda g, L: 1.0 / (1.0 + np.exp((g - 0.76) * L))
    est = estimate_threshold(_curves(f, gs, (8, 16, 32)), seed=3)
    assert est.g_c == pytest.approx(0.76, abs=2e-3)
    assert est.sigma > 0
    assert [pair for pair, _ in est.crossings] == [(8, 16), (16, 32)]


def test_threshold_no_crossing():
    gs = np.linspace(0.7, 0.8, 6)
    up = _curves(lambda g, L: 0.2 + L * 0.01, gs, (8, 16))
    with pytest.raises(NoCrossing):
        estimate_threshold(up)


def test_threshold_identical_curves_rejected():
    gs = np.linspace(0.7, 0.8, 6)
    same = _curves(lambda g, L: 0.5, gs, (8, 16))
    with pytest.raises(NoCrossing):
        estimate_threshold(same)


def test_threshold_needs_two_sizes_and_four_points():
    gs = np.linspace(0.7, 0.8, 6)
    f = lambda g, L: 1.0 / (1.0 + np.exp((g - 0.76) * L))
    with pytest.raises(NoCrossing):
        estimate_threshold(_curves(f, gs, (8,)))
    with pytest.raises(NoCrossing):
        estimate_threshold(_curves(f, gs[:3], (8, 16)))


def test_loop_size_stats(hc3):
    dec = decompose(hc3, OutcomeConfig.all_keep(hc3))
    hist, frac = loop_size_stats(dec)
    assert hist == {1: hc3.n_F}
    assert frac == pytest.approx(1 / hc3.n_F)
    dec = decompose(hc3, OutcomeConfig.all_keep(hc3).flipped(0))
    hist, frac = loop_size_stats(dec)
    assert hist == {1: hc3.n_F - 3, 3: 1}
    dec = decompose(hc3, OutcomeConfig.all_merge(hc3))
    _, frac = loop_size_stats(dec)
    assert frac == 1.0


def test_sub_monotone_p_span_probe():
    # averaged p_span is non-increasing in g within noise (sub regime)
    cx = build_lattice(LatticeSpec(LatticeKind.HONEYCOMB, L=8))
    outs = []
    for i, g in enumerate((0.70, 0.76, 0.82)):
        params = SamplerParams(n_samples=600, burn_in_sweeps=400, thinning_sweeps=3, seed=40 + i)
        outs.append(estimate_p_span(cx, WeightModel.for_g(g), params))
    for a, b in zip(outs, outs[1:]):
        assert a.p_span >= b.p_span - 3 * (a.stderr + b.stderr)


def test_chi2_gof_uniform():
    rng = np.random.default_rng(5)
    probs = np.full(32, 1 / 32)
    counts = np.bincount(rng.integers(0, 32, 20_000), minlength=32)
    stat, pval, dof = chi2_gof(counts, probs)
    assert pval > 0.001
    assert dof == 31


def test_p_span_saturates_below_threshold():
    # well below the transition a spanning loop is all but certain
    cx = build_lattice(LatticeSpec(LatticeKind.HONEYCOMB, L=16))
    params = SamplerParams(n_samples=300, burn_in_sweeps=600, thinning_sweeps=3, seed=31)
    est = estimate_p_span(cx, WeightModel.for_g(0.6), params)
    assert est.p_span > 0.9


def test_multichain_pooling():
    cx = build_lattice(LatticeSpec(LatticeKind.HONEYCOMB, L=6))
    params = SamplerParams(n_samples=200, burn_in_sweeps=200, thinning_sweeps=2, seed=4)
    single = estimate_p_span(cx, WeightModel.for_g(0.74), params)
    pooled = estimate_p_span(cx, WeightModel.for_g(0.74), params, n_chains=3)
    assert pooled.n_samples == 3 * single.n_samples
    assert abs(pooled.p_span - single.p_span) < 0.15
    assert pooled.stderr > 0


def test_torus_and_open_thresholds_agree():
    # the winding and side-contact spanning criteria locate the same
    # transition; at moderate sizes they agree to ~0.01 on the honeycomb
    def threshold(boundary, seed):
        curves = []
        gs = np.linspace(0.74, 0.78, 5)
        for L in (10, 14):
            cx = build_lattice(LatticeSpec(LatticeKind.HONEYCOMB, L=L, boundary=boundary))
            for i, g in enumerate(gs):
                params = SamplerParams(
                    n_samples=500, burn_in_sweeps=500, thinning_sweeps=3,
                    seed=seed + 17 * L + i,
                )
                curves.append(estimate_p_span(cx, WeightModel.for_g(float(g)), params))
        return estimate_threshold(curves, n_bootstrap=200)

    t_torus = threshold(Boundary.TORUS, seed=900)
    t_open = threshold(Boundary.OPEN, seed=901)
    assert abs(t_torus.g_c - t_open.g_c) < 0.012
