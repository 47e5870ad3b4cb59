"""Spanning detection, spanning-probability estimation, threshold extraction.

A configuration "spans" when some merged cluster either winds a fundamental
cycle of the torus or touches both members of an opposite boundary pair
(left/right or top/bottom) on open lattices. The percolation threshold in g
is located from pairwise crossings of the P_span(g) curves of consecutive
sizes, with a bootstrap error over the per-point statistical uncertainty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import MissingBoundaryMarks, NoCrossing
from .lattice import Boundary, CellComplex
from .sampler import ObservationSeries, SamplerParams, run
from .weights import ClusterDecomposition, WeightModel


def spans(dec: ClusterDecomposition, cx: CellComplex) -> bool:
    """Whether some cluster spans the complex.

    Open boundaries: a cluster contains both a left- and a right-marked
    face, or both a top- and a bottom-marked one. Torus: a cluster winds
    either fundamental cycle (winding data is recorded during decomposition).
    """
    if cx.boundary is Boundary.TORUS:
        if dec.winds_x is None:
            raise MissingBoundaryMarks(
                "torus spanning needs winding data (built-in lattices only)"
            )
        return bool(np.any(dec.winds_x | dec.winds_y))
    if dec.boundary_contact is None or not any(
        cx.boundary_marks[s] for s in ("left", "right", "top", "bottom")
    ):
        raise MissingBoundaryMarks("open-boundary spanning needs boundary marks")
    c = dec.boundary_contact
    lr = ((c & 1) > 0) & ((c & 2) > 0)
    tb = ((c & 4) > 0) & ((c & 8) > 0)
    return bool(np.any(lr | tb))


def integrated_autocorr(x: np.ndarray, c_window: float = 6.0) -> float:
    """Integrated autocorrelation time (0.5 for an uncorrelated series).

    Self-consistent windowing: sum rho(t) while the window is below
    c_window times the running estimate.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 4:
        return 0.5
    x = x - x.mean()
    var = float(np.dot(x, x) / n)
    if var == 0.0:
        return 0.5
    tau = 0.5
    for t in range(1, n // 2):
        rho = float(np.dot(x[:-t], x[t:]) / n) / var
        tau += rho
        if t >= c_window * tau:
            break
    return max(tau, 0.5)


@dataclass
class SpanEstimate:
    g: float
    L: int
    n_samples: int
    p_span: float
    stderr: float
    autocorr_time: float

    def to_dict(self) -> dict:
        return {
            "g": self.g,
            "L": self.L,
            "n_samples": self.n_samples,
            "p_span": self.p_span,
            "stderr": self.stderr,
            "autocorr_time": self.autocorr_time,
        }


def span_estimate_from_series(series: ObservationSeries, L: int) -> SpanEstimate:
    """Binomial estimate with the error bar inflated by autocorrelation."""
    n = series.n_samples
    p = series.p_span
    tau = integrated_autocorr(series.spans.astype(np.float64))
    n_eff = max(1.0, n / (2.0 * tau))
    stderr = math.sqrt(max(p * (1.0 - p), 0.0) / n_eff)
    return SpanEstimate(
        g=series.g, L=L, n_samples=n, p_span=p, stderr=stderr, autocorr_time=tau
    )


def estimate_p_span(
    cx: CellComplex,
    model: WeightModel,
    params: SamplerParams,
    engine: str = "auto",
    n_chains: int = 1,
) -> SpanEstimate:
    """Monte Carlo estimate of the spanning probability at one (g, L).

    With ``n_chains`` > 1, samples from independent chains (seeds derived
    from params.seed) are pooled and the error bar includes the
    between-chain scatter, which matters near the abrupt transitions of the
    bound-mode weights, where a single chain can stay in one phase.
    """
    if n_chains <= 1:
        series = run(cx, model, params, engine=engine)
        return span_estimate_from_series(series, cx.L)
    from .sampler import spawn_seeds
    from dataclasses import replace as _replace

    seeds = spawn_seeds(params.seed, n_chains)
    all_spans = []
    taus = []
    means = []
    for s in seeds:
        series = run(cx, model, _replace(params, seed=s), engine=engine)
        all_spans.append(series.spans.astype(np.float64))
        taus.append(integrated_autocorr(all_spans[-1]))
        means.append(float(all_spans[-1].mean()))
    pooled = np.concatenate(all_spans)
    p = float(pooled.mean())
    tau = float(np.mean(taus))
    n_eff = max(1.0, pooled.shape[0] / (2.0 * tau))
    within = math.sqrt(max(p * (1.0 - p), 0.0) / n_eff)
    between = float(np.std(means) / math.sqrt(n_chains))
    return SpanEstimate(
        g=model.g,
        L=cx.L,
        n_samples=int(pooled.shape[0]),
        p_span=p,
        stderr=max(within, between),
        autocorr_time=tau,
    )


@dataclass
class ThresholdEstimate:
    g_c: float
    sigma: float
    crossings: List[Tuple[Tuple[int, int], float]]
    method: str
    qc_mode: str
    bound_on_threshold: Optional[str] = None  # super regime: which side this mode bounds

    def to_dict(self) -> dict:
        return {
            "g_c": self.g_c,
            "sigma": self.sigma,
            "crossings": [
                {"L_pair": list(pair), "g_cross": g} for pair, g in self.crossings
            ],
            "method": self.method,
            "qc_mode": self.qc_mode,
            "bound_on_threshold": self.bound_on_threshold,
        }


def _pair_crossing(g: np.ndarray, da: np.ndarray) -> Optional[float]:
    """Zero crossing of a piecewise-linear difference curve.

    Multiple sign changes can appear where both curves saturate and the
    difference is pure noise; the transversal crossing is the one where the
    difference changes fastest, so pick the candidate with the steepest
    local slope.
    """
    if np.all(np.abs(da) < 1e-12):
        return None
    best = None
    best_slope = 0.0
    for i in range(len(g) - 1):
        y0, y1 = da[i], da[i + 1]
        if y0 == 0.0 or y0 * y1 < 0.0:
            x = float(g[i]) if y0 == 0.0 else float(
                g[i] + (g[i + 1] - g[i]) * y0 / (y0 - y1)
            )
            slope = abs(y1 - y0) / (g[i + 1] - g[i])
            if best is None or slope > best_slope:
                best = x
                best_slope = slope
    if da[-1] == 0.0 and best is None:
        best = float(g[-1])
    return best


def estimate_threshold(
    curves: Sequence[SpanEstimate],
    n_bootstrap: int = 1000,
    seed: int = 0,
    qc_mode: str = "",
    bound_on_threshold: Optional[str] = None,
) -> ThresholdEstimate:
    """Crossing-based threshold from P_span(g) curves of several sizes.

    Curves of consecutive sizes are linearly interpolated; the threshold is
    the mean of the pairwise crossing points and sigma comes from a
    parametric bootstrap over the per-point errors.
    """
    by_L: Dict[int, List[SpanEstimate]] = {}
    for e in curves:
        by_L.setdefault(e.L, []).append(e)
    sizes = sorted(by_L)
    if len(sizes) < 2:
        raise NoCrossing("need at least two sizes to locate a crossing")
    grids = {}
    for L in sizes:
        pts = sorted(by_L[L], key=lambda e: e.g)
        if len(pts) < 4:
            raise NoCrossing(f"need >= 4 g points per size, got {len(pts)} for L={L}")
        grids[L] = (
            np.array([e.g for e in pts]),
            np.array([e.p_span for e in pts]),
            np.array([e.stderr for e in pts]),
        )
    g0 = grids[sizes[0]][0]
    for L in sizes[1:]:
        if not np.allclose(grids[L][0], g0):
            raise NoCrossing("curves must share one g grid")

    crossings = []
    for La, Lb in zip(sizes, sizes[1:]):
        x = _pair_crossing(g0, grids[La][1] - grids[Lb][1])
        if x is None:
            raise NoCrossing(f"curves for L={La} and L={Lb} do not cross in range")
        crossings.append(((La, Lb), x))
    g_c = float(np.mean([x for _, x in crossings]))

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    boots = []
    for _ in range(n_bootstrap):
        xs = []
        ok = True
        for La, Lb in zip(sizes, sizes[1:]):
            pa = np.clip(grids[La][1] + rng.normal(0, 1, g0.shape) * grids[La][2], 0, 1)
            pb = np.clip(grids[Lb][1] + rng.normal(0, 1, g0.shape) * grids[Lb][2], 0, 1)
            x = _pair_crossing(g0, pa - pb)
            if x is None:
                ok = False
                break
            xs.append(x)
        if ok:
            boots.append(np.mean(xs))
    sigma = float(np.std(boots)) if len(boots) >= 10 else float("nan")
    if not (sigma > 0):
        sigma = max(float(np.diff(g0).mean()) * 0.1, 1e-6)
    return ThresholdEstimate(
        g_c=g_c,
        sigma=sigma,
        crossings=crossings,
        method=f"pairwise linear-interpolation crossings, {n_bootstrap} bootstrap resamples",
        qc_mode=qc_mode,
        bound_on_threshold=bound_on_threshold,
    )


def loop_size_stats(dec: ClusterDecomposition) -> Tuple[Dict[int, int], float]:
    """Histogram of cluster sizes and the largest-cluster face fraction."""
    sizes = dec.sizes()
    hist: Dict[int, int] = {}
    for s in sizes:
        hist[int(s)] = hist.get(int(s), 0) + 1
    return hist, float(sizes.max() / dec.n_F)


def chi2_gof(counts: np.ndarray, probs: np.ndarray, min_expected: float = 10.0):
    """Goodness-of-fit p-value with small-expectation bins pooled."""
    from scipy.stats import chi2 as chi2_dist

    n = counts.sum()
    expected = probs * n
    keep = expected >= min_expected
    obs = list(counts[keep].astype(np.float64))
    exp = list(expected[keep])
    rest_o = counts[~keep].sum()
    rest_e = expected[~keep].sum()
    if rest_e > 0:
        obs.append(float(rest_o))
        exp.append(float(rest_e))
    obs = np.array(obs)
    exp = np.array(exp)
    exp *= obs.sum() / exp.sum()
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = len(obs) - 1
    return stat, float(chi2_dist.sf(stat, dof)), dof
