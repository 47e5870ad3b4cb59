"""Structure of the post-measurement resource: merged loops and follow-ups.

Every cluster of merged faces carries a generalized GHZ state whose
components are the face colorings surviving the merge constraints. In the
|g|<=1 regime each cluster keeps exactly the two uniform colorings. In the
|g|>1 regime a cluster can hold more components; a follow-up projective
measurement at each merge site (projectors onto complement pattern pairs)
splits them until every block is a plain 2-component GHZ state related by
the global flip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ComponentsUnavailable
from .lattice import CellComplex
from .sampler import ObservationSeries
from .weights import Cluster, ClusterDecomposition, Regime, count_components


@dataclass
class LoopState:
    """One merged GHZ loop: its faces, qubit count, and component content."""

    faces: np.ndarray
    merge_vertices: np.ndarray
    qubit_count: int
    regime: Regime
    q: Optional[int]  # exact component count; None above the enumeration cap
    q_bounds: Tuple[float, float]
    components: Optional[np.ndarray] = None  # (q, |faces|) colorings, or None

    @property
    def size(self) -> int:
        return int(self.faces.shape[0])


def _enumerate_components(cluster: Cluster, cx: CellComplex) -> np.ndarray:
    """All face colorings of the cluster that are non-constant at every
    merge vertex (the super-regime survivors)."""
    k = cluster.size
    local = {int(f): i for i, f in enumerate(cluster.faces)}
    xs = np.arange(1 << k, dtype=np.int64)
    ok = np.ones(xs.shape[0], dtype=bool)
    for v in cluster.merge_vertices:
        m = 0
        for f in cx.vertex_faces[int(v)]:
            m |= 1 << local[f]
        b = xs & m
        ok &= (b != 0) & (b != m)
    survivors = xs[ok]
    out = np.zeros((survivors.shape[0], k), dtype=np.uint8)
    for i in range(k):
        out[:, i] = (survivors >> i) & 1
    return out


def _q_bounds(cluster: Cluster, cx: CellComplex) -> Tuple[float, float]:
    arr = cx.arrays()
    if cluster.size == 1:
        return (2.0, 2.0)
    lo = float(arr.b_v[cluster.merge_vertices].min())
    hi = float(np.exp(arr.sigma_f[cluster.faces].sum()))
    return (lo, hi)


def merged_loops(
    dec: ClusterDecomposition,
    cx: CellComplex,
    regime: Regime,
    cap: int = 24,
) -> List[LoopState]:
    """One LoopState per cluster; explicit components where enumerable."""
    out = []
    for cl in dec.clusters:
        qubits = int(sum(len(cx.face_vertices[int(f)]) for f in cl.faces))
        if regime is Regime.SUB:
            comps = np.zeros((2, cl.size), dtype=np.uint8)
            comps[1, :] = 1
            out.append(
                LoopState(
                    faces=cl.faces,
                    merge_vertices=cl.merge_vertices,
                    qubit_count=qubits,
                    regime=regime,
                    q=2,
                    q_bounds=(2.0, 2.0),
                    components=comps,
                )
            )
            continue
        bounds = _q_bounds(cl, cx)
        if cl.size > cap:
            out.append(
                LoopState(
                    faces=cl.faces,
                    merge_vertices=cl.merge_vertices,
                    qubit_count=qubits,
                    regime=regime,
                    q=None,
                    q_bounds=bounds,
                    components=None,
                )
            )
            continue
        comps = _enumerate_components(cl, cx)
        q = count_components(cl, cx, regime, cap)
        assert q == comps.shape[0]
        out.append(
            LoopState(
                faces=cl.faces,
                merge_vertices=cl.merge_vertices,
                qubit_count=qubits,
                regime=regime,
                q=q,
                q_bounds=bounds,
                components=comps,
            )
        )
    return out


# ---------------------------------------------------------------------------
# follow-up projections


def _pair_rep(code: int, degree: int) -> int:
    """Canonical representative of a complement pattern pair: fewer raised
    faces wins, ties break toward the smaller code."""
    full = (1 << degree) - 1
    other = full ^ code
    a, b = bin(code).count("1"), bin(other).count("1")
    if a != b:
        return code if a < b else other
    return min(code, other)


def _pattern_pair_label(code: int, degree: int) -> str:
    """Outcome label of the complement pattern pair containing ``code``.

    P0 is the uniform pair; P1..Pd are the single-raised-face pairs counted
    from the last slot (so on degree 3: P1 ~ (0,0,1), P2 ~ (0,1,0),
    P3 ~ (1,0,0)); remaining pairs continue in ascending representative order.
    """
    rep = _pair_rep(code, degree)
    if rep == 0:
        return "P0"
    if bin(rep).count("1") == 1:
        slot = rep.bit_length() - 1
        return f"P{degree - slot}"
    extra = sorted(
        r
        for r in range(1, 1 << degree)
        if r == _pair_rep(r, degree) and bin(r).count("1") > 1
    )
    return f"P{degree + 1 + extra.index(rep)}"


@dataclass
class FollowupOutcome:
    choices: Dict[int, str]  # merge vertex -> projector label
    probability: float
    components: np.ndarray  # surviving colorings, (n, |faces|)


@dataclass
class FollowupReport:
    loop: LoopState
    outcomes: List[FollowupOutcome]
    first_vertex: Optional[int]
    first_step: Dict[str, float]  # includes P0 with probability 0

    def step_marginal(self, v: int) -> Dict[str, float]:
        """Marginal outcome distribution of the projection at vertex v."""
        out: Dict[str, float] = {}
        for o in self.outcomes:
            lbl = o.choices.get(v)
            if lbl is not None:
                out[lbl] = out.get(lbl, 0.0) + o.probability
        return out


def followup_projection(loop: LoopState, cx: CellComplex) -> FollowupReport:
    """Project each merge vertex onto complement pattern pairs, in ascending
    vertex order, branching over outcomes.

    Outcome probabilities at each step are proportional to the surviving
    component counts in each class (the components carry equal amplitude).
    The uniform pair P0 never occurs. After all merge vertices are
    processed every surviving block holds exactly 2 flip-related components.
    """
    if loop.components is None:
        raise ComponentsUnavailable(
            "follow-up projections need the explicit component list (exact mode)"
        )
    comps = loop.components
    local = {int(f): i for i, f in enumerate(loop.faces)}
    merge_vs = sorted(int(v) for v in loop.merge_vertices)
    if loop.regime is Regime.SUB or not merge_vs:
        return FollowupReport(
            loop=loop,
            outcomes=[FollowupOutcome(choices={}, probability=1.0, components=comps)],
            first_vertex=None,
            first_step={},
        )

    def classify(v: int, block: np.ndarray) -> Dict[str, np.ndarray]:
        d = len(cx.vertex_faces[v])
        slots = [local[f] for f in cx.vertex_faces[v]]
        codes = np.zeros(block.shape[0], dtype=np.int64)
        for s, i in enumerate(slots):
            codes |= block[:, i].astype(np.int64) << s
        reps = np.array([_pair_rep(int(c), d) for c in codes], dtype=np.int64)
        out: Dict[str, np.ndarray] = {}
        for rep in np.unique(reps):
            out[_pattern_pair_label(int(rep), d)] = block[reps == rep]
        return out

    d0 = len(cx.vertex_faces[merge_vs[0]])
    first_step: Dict[str, float] = {
        _pattern_pair_label(rep, d0): 0.0
        for rep in range(1 << d0)
        if rep == _pair_rep(rep, d0)
    }
    branches = [FollowupOutcome(choices={}, probability=1.0, components=comps)]
    for idx, v in enumerate(merge_vs):
        nxt: List[FollowupOutcome] = []
        for br in branches:
            classes = classify(v, br.components)
            total = sum(c.shape[0] for c in classes.values())
            for lbl, block in sorted(classes.items()):
                p = br.probability * block.shape[0] / total
                if idx == 0:
                    first_step[lbl] += p
                choices = dict(br.choices)
                choices[v] = lbl
                nxt.append(FollowupOutcome(choices=choices, probability=p, components=block))
        branches = nxt
    return FollowupReport(
        loop=loop,
        outcomes=branches,
        first_vertex=merge_vs[0],
        first_step=first_step,
    )


# ---------------------------------------------------------------------------
# loop census over sample streams


@dataclass
class CensusReport:
    g: float
    L: int
    regime: str
    n_samples: int
    mean_loop_density: float  # clusters per face
    loop_density_err: float
    mean_largest_fraction: float
    largest_fraction_err: float
    size_histogram: Dict[int, float]  # mean count per sample

    def to_dict(self) -> dict:
        return {
            "g": self.g,
            "L": self.L,
            "regime": self.regime,
            "n_samples": self.n_samples,
            "mean_loop_density": self.mean_loop_density,
            "loop_density_err": self.loop_density_err,
            "largest_fraction": self.mean_largest_fraction,
            "largest_fraction_err": self.largest_fraction_err,
            "histogram": {str(k): v for k, v in sorted(self.size_histogram.items())},
        }


def loop_census(series: ObservationSeries, L: int = 0) -> CensusReport:
    """Aggregate loop statistics of a sample stream."""
    from .analysis import integrated_autocorr

    n_F = series.n_F
    dens = series.n_clusters / n_F
    frac = series.largest / n_F

    def err(x):
        tau = integrated_autocorr(np.asarray(x, dtype=np.float64))
        n_eff = max(1.0, len(x) / (2 * tau))
        return float(np.std(x) / math.sqrt(n_eff))

    hist = {
        int(s): float(c) / series.n_samples
        for s, c in enumerate(series.size_histogram)
        if c > 0
    }
    return CensusReport(
        g=series.g,
        L=L,
        regime=series.regime,
        n_samples=series.n_samples,
        mean_loop_density=float(dens.mean()),
        loop_density_err=err(dens),
        mean_largest_fraction=float(frac.mean()),
        largest_fraction_err=err(frac),
        size_histogram=hist,
    )
