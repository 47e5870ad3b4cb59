import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghzloops.errors import ClusterTooLarge, RegimeMismatch
from ghzloops.lattice import LatticeKind, LatticeSpec, build_lattice
from ghzloops.weights import (
    LN2,
    OutcomeConfig,
    QcMode,
    Regime,
    WeightModel,
    count_components,
    decompose,
    energy_view,
    log_weight,
    log_weight_ratio,
    regime_for,
)


def test_regime_autoderivation():
    assert regime_for(0.5) is Regime.SUB
    assert regime_for(-1.0) is Regime.SUB
    assert regime_for(1.0001) is Regime.SUPER
    with pytest.raises(RegimeMismatch):
        WeightModel(1.5, Regime.SUB)
    with pytest.raises(RegimeMismatch):
        WeightModel(0.5, Regime.SUPER)
    with pytest.raises(RegimeMismatch):
        WeightModel.for_g(0.0)


def test_decompose_all_keep(hc3):
    dec = decompose(hc3, OutcomeConfig.all_keep(hc3))
    assert dec.n_clusters == 9
    assert all(c.size == 1 for c in dec.clusters)
    assert sum(1 - c.size for c in dec.clusters) == 0


def test_decompose_single_merge(hc3):
    dec = decompose(hc3, OutcomeConfig.all_keep(hc3).flipped(0))
    sizes = sorted(c.size for c in dec.clusters)
    assert sizes == [1] * 6 + [3]


def test_decompose_all_merge(hc3, sq3):
    for cx in (hc3, sq3):
        dec = decompose(cx, OutcomeConfig.all_merge(cx))
        assert dec.n_clusters == 1
        assert dec.clusters[0].size == cx.n_F


def test_partition_property(hc3, sq3):
    rng = np.random.default_rng(3)
    for cx in (hc3, sq3):
        for _ in range(25):
            dec = decompose(cx, OutcomeConfig.random(cx, rng))
            assert sum(c.size for c in dec.clusters) == cx.n_F


def test_log_weight_fixed_point(hc3):
    model = WeightModel.for_g(1.0)
    dec = decompose(hc3, OutcomeConfig.all_keep(hc3))
    assert log_weight(model, dec, hc3) == 0.0
    dec1 = decompose(hc3, OutcomeConfig.all_keep(hc3).flipped(0))
    assert log_weight(model, dec1, hc3) == float("-inf")


def test_single_flip_weight_change(hc3):
    g = 0.6
    model = WeightModel.for_g(g)
    d0 = decompose(hc3, OutcomeConfig.all_keep(hc3))
    d1 = decompose(hc3, OutcomeConfig.all_keep(hc3).flipped(2))
    delta = log_weight(model, d1, hc3) - log_weight(model, d0, hc3)
    assert delta == pytest.approx(math.log((1 - g * g) / g**2) - 2 * LN2, abs=1e-12)


def test_super_single_merge_cluster_factor(hc3):
    # one merge site: cluster factor q * 2^{-|c|} = 6/8
    model = WeightModel.for_g(1.3, QcMode.exact())
    d0 = decompose(hc3, OutcomeConfig.all_keep(hc3))
    d1 = decompose(hc3, OutcomeConfig.all_keep(hc3).flipped(0))
    g2 = 1.3**2
    base = math.log(g2 - 1.0)
    delta = log_weight(model, d1, hc3) - log_weight(model, d0, hc3)
    assert delta == pytest.approx(base + math.log(6 / 8), abs=1e-12)


def test_count_components_examples(hc3, sq3):
    d = decompose(hc3, OutcomeConfig.all_keep(hc3).flipped(0))
    c3 = next(c for c in d.clusters if c.size == 3)
    assert count_components(c3, hc3, Regime.SUPER) == 6
    assert count_components(c3, hc3, Regime.SUB) == 2
    # the three-face cluster saturates the upper bound b^{|c|/3}
    assert 6 == pytest.approx(6.0 ** (c3.size / 3))
    dsq = decompose(sq3, OutcomeConfig.all_keep(sq3).flipped(0))
    c4 = next(c for c in dsq.clusters if c.size == 4)
    assert count_components(c4, sq3, Regime.SUPER) == 14


def test_count_components_cap(hc3):
    d = decompose(hc3, OutcomeConfig.all_merge(hc3))
    with pytest.raises(ClusterTooLarge):
        count_components(d.clusters[0], hc3, Regime.SUPER, cap=4)


def test_qc_bounds_random_clusters():
    # b <= q_c <= b^{|c|/k} over random clusters on both lattices
    rng = np.random.default_rng(8)
    checked = 0
    for kind, L, b, k in ((LatticeKind.HONEYCOMB, 4, 6, 3), (LatticeKind.SQUARE, 4, 14, 4)):
        cx = build_lattice(LatticeSpec(kind, L=L))
        while checked < 500:
            labels = (rng.random(cx.n_V) < 0.25).astype(np.uint8)
            dec = decompose(cx, OutcomeConfig(labels))
            todo = [c for c in dec.clusters if 1 < c.size <= 12]
            if not todo:
                continue
            for c in todo:
                q = count_components(c, cx, Regime.SUPER)
                assert b <= q <= b ** (c.size / k) + 1e-9, (kind, c.size, q)
                checked += 1
        checked = 0


def test_sub_equals_super_machinery_with_q2(hc3):
    # evaluating the cluster factor with q_hat = 2 reproduces the sub form
    rng = np.random.default_rng(1)
    for _ in range(20):
        dec = decompose(hc3, OutcomeConfig.random(hc3, rng))
        sub_factor = LN2 * sum(1 - c.size for c in dec.clusters)
        q2_factor = sum(
            0.0 if c.size == 1 else (math.log(2) - c.size * LN2) for c in dec.clusters
        )
        assert sub_factor == pytest.approx(q2_factor, abs=1e-12)


def test_gauge_invariance_of_weights(hc3):
    rng = np.random.default_rng(2)
    for _ in range(10):
        cfg = OutcomeConfig.random(hc3, rng)
        dec = decompose(hc3, cfg)
        for g in (0.7, 1.4):
            qc = QcMode.exact()
            wp = log_weight(WeightModel.for_g(g, qc), dec, hc3)
            wm = log_weight(WeightModel.for_g(-g, qc), dec, hc3)
            assert wp == pytest.approx(wm, abs=1e-12)


@pytest.mark.parametrize(
    "gmode",
    [
        (0.5, "lower"),
        (0.9, "lower"),
        (1.3, "lower"),
        (1.3, "upper"),
        (1.3, "exact"),
    ],
)
def test_ratio_incremental_equals_global(hc3, sq2, gmode):
    g, mode = gmode
    qc = {"lower": QcMode.lower_bound(), "upper": QcMode.upper_bound(), "exact": QcMode.exact()}[mode]
    model = WeightModel.for_g(g, qc)
    rng = np.random.default_rng(17)
    for cx in (hc3, sq2):
        for _ in range(60):
            cfg = OutcomeConfig.random(cx, rng)
            v = int(rng.integers(cx.n_V))
            dec = decompose(cx, cfg)
            inc = log_weight_ratio(model, cx, cfg, dec, v)
            glob = log_weight(model, decompose(cx, cfg.flipped(v)), cx) - log_weight(
                model, dec, cx
            )
            assert inc == pytest.approx(glob, abs=1e-10)


@given(st.integers(min_value=0, max_value=2**16 - 1), st.integers(min_value=0, max_value=7))
@settings(max_examples=40, deadline=None)
def test_ratio_antisymmetry(bits, v):
    cx = build_lattice(LatticeSpec(LatticeKind.HONEYCOMB, L=2))
    model = WeightModel.for_g(0.6)
    cfg = OutcomeConfig.from_bits(bits % 256, cx.n_V)
    fwd = log_weight_ratio(model, cx, cfg, decompose(cx, cfg), v)
    back = log_weight_ratio(
        model, cx, cfg.flipped(v), decompose(cx, cfg.flipped(v)), v
    )
    assert fwd == pytest.approx(-back, abs=1e-10)


def test_energy_view(hc3):
    model = WeightModel.for_g(1 / math.sqrt(2))
    dec = decompose(hc3, OutcomeConfig.all_keep(hc3))
    ev = energy_view(model, dec)
    assert ev["epsilon1"] == pytest.approx(math.log(2), abs=1e-12)
    assert ev["epsilon2"] == pytest.approx(math.log(2), abs=1e-12)
    assert ev["U2"] == 0.0
    rng = np.random.default_rng(4)
    for _ in range(10):
        dec = decompose(hc3, OutcomeConfig.random(hc3, rng))
        ev = energy_view(model, dec)
        lhs = -dec.n_keep * ev["epsilon1"] - dec.n_merge * ev["epsilon2"] - ev["U2"]
        assert lhs == pytest.approx(log_weight(model, dec, hc3), abs=1e-12)
    with pytest.raises(RegimeMismatch):
        energy_view(WeightModel.for_g(1.5), dec)


def test_open_lattice_degree1_merge_is_impossible_in_super(sq3_open):
    # a merge at a 1-face corner site kills every coloring
    model = WeightModel.for_g(1.4, QcMode.lower_bound())
    corner = next(v for v in range(sq3_open.n_V) if sq3_open.degree(v) == 1)
    cfg = OutcomeConfig.all_keep(sq3_open).flipped(corner)
    dec = decompose(sq3_open, cfg)
    assert log_weight(model, dec, sq3_open) == float("-inf")
