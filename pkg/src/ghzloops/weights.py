"""Outcome configurations, merged-face clusters, and outcome-probability weights.

Each site carries a two-outcome generalized measurement. The *Keep* outcome
restores the site to fixed-point form; the *Merge* outcome fuses the faces
around the site into one cluster. Up to a configuration-independent constant
the outcome probability is, in log form,

    |g| <= 1:   2 n_keep ln|g| + n_merge ln(1-g^2) + ln2 * sum_c (1 - |c|)
    |g| >  1:  -2 n_keep ln|g| + n_merge ln((g^2-1)/g^2)
                 + sum_c [ln q_c - |c| ln 2]

where |c| is the face count of cluster c and q_c its number of surviving
components: exactly 2 in the first regime, and in the second the number of
binary face colorings that are non-constant around every merge site of the
cluster. q_c has no closed form; it can be enumerated for small clusters or
replaced by its lower/upper bounds b and b^{|c|/k} (b = 6, k = 3 on
degree-3 lattices; b = 14, k = 4 on degree-4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from . import _kernel
from .errors import ClusterTooLarge, RegimeMismatch
from .lattice import CellComplex

LN2 = math.log(2.0)

KEEP = 0
MERGE = 1


class Regime(str, Enum):
    SUB = "sub"  # |g| <= 1: merge forces the surrounding faces equal
    SUPER = "super"  # |g| > 1: merge forbids them from being all equal


def regime_for(g: float) -> Regime:
    return Regime.SUB if abs(g) <= 1.0 else Regime.SUPER


@dataclass(frozen=True)
class QcMode:
    """How the cluster component count enters the weight in the |g|>1 regime."""

    kind: str  # "lower" | "upper" | "exact"
    cap: int = 24

    @classmethod
    def lower_bound(cls) -> "QcMode":
        return cls("lower")

    @classmethod
    def upper_bound(cls) -> "QcMode":
        return cls("upper")

    @classmethod
    def exact(cls, cap: int = 24) -> "QcMode":
        return cls("exact", cap)

    @property
    def kernel_mode(self) -> int:
        return {"lower": 1, "upper": 2, "exact": 3}[self.kind]


@dataclass(frozen=True)
class WeightModel:
    g: float
    regime: Regime
    qc_mode: QcMode = field(default_factory=QcMode.lower_bound)

    def __post_init__(self):
        if self.g == 0.0:
            raise RegimeMismatch("g = 0 is outside both regimes")
        if self.regime is Regime.SUB and abs(self.g) > 1.0:
            raise RegimeMismatch(f"|g| = {abs(self.g)} > 1 is not in the sub regime")
        if self.regime is Regime.SUPER and abs(self.g) <= 1.0:
            raise RegimeMismatch(f"|g| = {abs(self.g)} <= 1 is not in the super regime")
        if self.qc_mode.kind not in ("lower", "upper", "exact"):
            raise ValueError(f"unknown qc mode {self.qc_mode.kind!r}")

    @classmethod
    def for_g(cls, g: float, qc_mode: Optional[QcMode] = None) -> "WeightModel":
        """Model with the regime derived from |g|."""
        return cls(g, regime_for(g), qc_mode or QcMode.lower_bound())

    @property
    def kernel_mode(self) -> int:
        return 0 if self.regime is Regime.SUB else self.qc_mode.kernel_mode

    @property
    def ln_merge_over_keep(self) -> float:
        """Log weight change of the n-counting terms for one Keep -> Merge flip."""
        g2 = self.g * self.g
        if self.regime is Regime.SUB:
            return math.log((1.0 - g2) / g2) if g2 < 1.0 else float("-inf")
        return math.log(g2 - 1.0)


@dataclass
class OutcomeConfig:
    """Per-vertex measurement outcomes: 0 = Keep, 1 = Merge."""

    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8)

    @classmethod
    def all_keep(cls, cx: CellComplex) -> "OutcomeConfig":
        return cls(np.zeros(cx.n_V, dtype=np.uint8))

    @classmethod
    def all_merge(cls, cx: CellComplex) -> "OutcomeConfig":
        return cls(np.ones(cx.n_V, dtype=np.uint8))

    @classmethod
    def random(cls, cx: CellComplex, rng: np.random.Generator) -> "OutcomeConfig":
        return cls(rng.integers(0, 2, size=cx.n_V, dtype=np.uint8).astype(np.uint8))

    @classmethod
    def from_bits(cls, bits: int, n_V: int) -> "OutcomeConfig":
        return cls(np.array([(bits >> v) & 1 for v in range(n_V)], dtype=np.uint8))

    def to_bits(self) -> int:
        out = 0
        for v, b in enumerate(self.labels):
            out |= int(b) << v
        return out

    def validate_for(self, cx: CellComplex) -> None:
        if self.labels.shape != (cx.n_V,):
            raise ValueError(
                f"config defined on {self.labels.shape[0]} vertices, complex has {cx.n_V}"
            )
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise ValueError("labels must be 0 (Keep) or 1 (Merge)")

    @property
    def n_merge(self) -> int:
        return int(self.labels.sum())

    def flipped(self, v: int) -> "OutcomeConfig":
        out = self.labels.copy()
        out[v] ^= 1
        return OutcomeConfig(out)


@dataclass
class Cluster:
    faces: np.ndarray
    merge_vertices: np.ndarray

    @property
    def size(self) -> int:
        return int(self.faces.shape[0])


@dataclass
class ClusterDecomposition:
    """Partition of the faces into merged clusters for one outcome config."""

    cluster_of: np.ndarray
    clusters: List[Cluster]
    n_keep: int
    n_merge: int
    winds_x: Optional[np.ndarray] = None  # per cluster, torus built-ins only
    winds_y: Optional[np.ndarray] = None
    boundary_contact: Optional[np.ndarray] = None  # per cluster bit mask LRTB

    @property
    def n_F(self) -> int:
        return int(self.cluster_of.shape[0])

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def sizes(self) -> np.ndarray:
        return np.array([c.size for c in self.clusters], dtype=np.int64)


def decompose(cx: CellComplex, config: OutcomeConfig) -> ClusterDecomposition:
    """Union all faces around each Merge vertex into clusters."""
    config.validate_for(cx)
    arr = cx.arrays()
    root, wx, wy = _kernel.uf_decompose(
        config.labels,
        arr.vf_indptr,
        arr.vf_data,
        arr.vf_offx,
        arr.vf_offy,
        arr.n_F,
        arr.has_winding,
    )
    uniq, inv = np.unique(root, return_inverse=True)
    n_c = uniq.shape[0]
    order = np.argsort(inv, kind="stable")
    counts = np.bincount(inv, minlength=n_c)
    splits = np.cumsum(counts)[:-1]
    faces_per = np.split(order.astype(np.int64), splits)
    merge_vs = [[] for _ in range(n_c)]
    first_face = arr.vf_data[arr.vf_indptr[:-1]]
    cid_of_vertex = inv[first_face]
    for v in np.nonzero(config.labels)[0]:
        merge_vs[cid_of_vertex[v]].append(int(v))
    clusters = [
        Cluster(faces=np.sort(fs), merge_vertices=np.array(ms, dtype=np.int64))
        for fs, ms in zip(faces_per, merge_vs)
    ]
    contact = np.zeros(n_c, dtype=np.uint8)
    np.bitwise_or.at(contact, inv, arr.boundary_mask)
    return ClusterDecomposition(
        cluster_of=inv.astype(np.int64),
        clusters=clusters,
        n_keep=int(cx.n_V - config.labels.sum()),
        n_merge=int(config.labels.sum()),
        winds_x=wx[uniq] if arr.has_winding else None,
        winds_y=wy[uniq] if arr.has_winding else None,
        boundary_contact=contact,
    )


# ---------------------------------------------------------------------------
# component counting and cluster factors


def count_components(
    cluster: Cluster, cx: CellComplex, regime: Regime, cap: int = 24
) -> int:
    """Exact number of surviving components of one merged cluster.

    In the |g|<=1 regime every cluster is forced uniform, so the count is 2.
    In the |g|>1 regime it is the number of binary colorings of the cluster's
    faces that are non-constant around every merge vertex.
    """
    if regime is Regime.SUB:
        return 2
    k = cluster.size
    if k > cap:
        raise ClusterTooLarge(f"cluster has {k} faces, exact cap is {cap}")
    memo = cx._cache.setdefault("qc_memo", {})
    key = (cluster.faces.tobytes(), cluster.merge_vertices.tobytes())
    if key in memo:
        return memo[key]
    local = {int(f): i for i, f in enumerate(cluster.faces)}
    masks = np.zeros(len(cluster.merge_vertices), dtype=np.int64)
    for i, v in enumerate(cluster.merge_vertices):
        m = 0
        for f in cx.vertex_faces[int(v)]:
            m |= 1 << local[f]
        masks[i] = m
    q = int(_kernel.count_valid_colorings(masks, k))
    memo[key] = q
    return q


def _cluster_phi(model: WeightModel, cluster: Cluster, cx: CellComplex) -> float:
    """Log cluster factor ln q_hat - |c| ln2 (0 for singletons, q_hat = 2)."""
    size = cluster.size
    if model.regime is Regime.SUB:
        return (1 - size) * LN2
    arr = cx.arrays()
    if cluster.merge_vertices.shape[0]:
        min_b = float(arr.b_v[cluster.merge_vertices].min())
        if min_b <= 0.0:
            return float("-inf")  # a merge at a 1-face site kills every coloring
    if size == 1:
        return 0.0
    kind = model.qc_mode.kind
    if kind == "lower":
        return math.log(min_b) - size * LN2
    if kind == "upper":
        return float(arr.sigma_f[cluster.faces].sum()) - size * LN2
    q = count_components(cluster, cx, model.regime, model.qc_mode.cap)
    if q == 0:
        return float("-inf")
    return math.log(q) - size * LN2


def log_weight(
    model: WeightModel, dec: ClusterDecomposition, cx: CellComplex
) -> float:
    """Unnormalized log outcome probability of the decomposition's config."""
    g2 = model.g * model.g
    n1, n2 = dec.n_keep, dec.n_merge
    if model.regime is Regime.SUB:
        if g2 >= 1.0:
            if n2 > 0:
                return float("-inf")  # merge outcomes are impossible at |g| = 1
            return 0.0
        base = n1 * math.log(g2) + n2 * math.log(1.0 - g2)
        return base + LN2 * (dec.n_clusters - dec.n_F)
    base = -n1 * math.log(g2) + n2 * math.log((g2 - 1.0) / g2)
    return base + sum(_cluster_phi(model, c, cx) for c in dec.clusters)


def log_weight_ratio(
    model: WeightModel,
    cx: CellComplex,
    config: OutcomeConfig,
    dec: ClusterDecomposition,
    v: int,
) -> float:
    """log_weight(config flipped at v) - log_weight(config), computed from
    the clusters touching v's faces only; exactly equals the global
    difference."""
    if not (0 <= v < cx.n_V):
        raise ValueError(f"vertex {v} out of range")
    to_merge = config.labels[v] == KEEP
    base = model.ln_merge_over_keep
    delta_base = base if to_merge else -base
    affected = sorted({int(dec.cluster_of[f]) for f in cx.vertex_faces[v]})
    phi_before = sum(_cluster_phi(model, dec.clusters[c], cx) for c in affected)

    # re-derive the local decomposition on the affected faces after the flip
    local_faces = np.concatenate([dec.clusters[c].faces for c in affected])
    face_set = set(int(f) for f in local_faces)
    merge_after = set()
    for c in affected:
        merge_after.update(int(u) for u in dec.clusters[c].merge_vertices)
    if to_merge:
        merge_after.add(v)
    else:
        merge_after.discard(v)
    parent = {f: f for f in face_set}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u in merge_after:
        fs = cx.vertex_faces[u]
        r0 = find(fs[0])
        for f in fs[1:]:
            r = find(f)
            if r != r0:
                parent[r] = r0
    groups = {}
    for f in face_set:
        groups.setdefault(find(f), []).append(f)
    members = {}
    for u in merge_after:
        members.setdefault(find(cx.vertex_faces[u][0]), []).append(u)
    phi_after = 0.0
    for r, fs in groups.items():
        cl = Cluster(
            faces=np.array(sorted(fs), dtype=np.int64),
            merge_vertices=np.array(sorted(members.get(r, [])), dtype=np.int64),
        )
        phi_after += _cluster_phi(model, cl, cx)
    return delta_base + phi_after - phi_before


def energy_view(model: WeightModel, dec: ClusterDecomposition) -> dict:
    """Two-particle-species reading of the |g|<=1 weight.

    Returns epsilon1 = ln(1/g^2), epsilon2 = ln(1/(1-g^2)) and the merge
    interaction U2 = -ln2 * sum_c (1-|c|); the identity
    log_weight = -n1*eps1 - n2*eps2 - U2 holds exactly.
    """
    if model.regime is not Regime.SUB:
        raise RegimeMismatch("the particle-energy view exists in the |g|<=1 regime")
    g2 = model.g * model.g
    return {
        "epsilon1": math.log(1.0 / g2),
        "epsilon2": math.log(1.0 / (1.0 - g2)) if g2 < 1.0 else float("inf"),
        "U2": -LN2 * (dec.n_clusters - dec.n_F),
    }
