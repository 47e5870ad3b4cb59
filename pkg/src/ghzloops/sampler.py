"""Metropolis sampling over outcome configurations.

Single-site proposals at uniformly random vertices, accepted with
min{1, exp(log-weight ratio)}. Two engines share one proposal stream
(per sweep: n_V vertex draws, then n_V uniforms), so given the same seed
they produce identical trajectories:

* ``reference``: plain Python via the weights module; supports every
  qc mode including exact component counts; used for small systems and as
  the correctness baseline.
* ``fast``: the numba kernel with incremental cluster bookkeeping; used
  for production runs in the sub regime and the super bound modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional

import numpy as np

from . import _kernel
from .errors import ZeroWeightStart
from .lattice import CellComplex
from .weights import (
    ClusterDecomposition,
    OutcomeConfig,
    Regime,
    WeightModel,
    decompose,
    log_weight,
    log_weight_ratio,
)


class Start(str, Enum):
    HOT = "hot"  # uniformly random labels
    COLD_KEEP = "cold-keep"
    COLD_MERGE = "cold-merge"


@dataclass(frozen=True)
class SamplerParams:
    n_samples: int
    burn_in_sweeps: int = 1000
    thinning_sweeps: int = 10
    start: Start = Start.HOT
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.start, Start):
            object.__setattr__(self, "start", Start(self.start))
        if self.n_samples < 1 or self.burn_in_sweeps < 0 or self.thinning_sweeps < 1:
            raise ValueError("n_samples >= 1, burn_in >= 0, thinning >= 1 required")


@dataclass
class ChainState:
    config: OutcomeConfig
    dec: ClusterDecomposition
    rng: np.random.Generator
    sweeps_done: int = 0
    accept_count: int = 0
    propose_count: int = 0


def _start_config(cx: CellComplex, params: SamplerParams, rng) -> OutcomeConfig:
    if params.start is Start.COLD_KEEP:
        return OutcomeConfig.all_keep(cx)
    if params.start is Start.COLD_MERGE:
        return OutcomeConfig.all_merge(cx)
    return OutcomeConfig.random(cx, rng)


def init_chain(cx: CellComplex, model: WeightModel, params: SamplerParams) -> ChainState:
    """Fresh chain; rejects starting configurations of exactly zero weight."""
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    config = _start_config(cx, params, rng)
    dec = decompose(cx, config)
    if log_weight(model, dec, cx) == float("-inf"):
        raise ZeroWeightStart(
            f"start {params.start.value} has zero probability at g={model.g}"
        )
    return ChainState(config=config, dec=dec, rng=rng)


def metropolis_step(
    state: ChainState,
    model: WeightModel,
    cx: CellComplex,
    v: int,
    u: Optional[float] = None,
) -> bool:
    """Propose toggling the label at v; returns True if accepted."""
    if u is None:
        u = float(state.rng.random())
    delta = log_weight_ratio(model, cx, state.config, state.dec, v)
    state.propose_count += 1
    accept = delta >= 0.0 or u < math.exp(delta)
    if accept:
        state.accept_count += 1
        state.config.labels[v] ^= 1
        state.dec = decompose(cx, state.config)
    return accept


def sweep(state: ChainState, model: WeightModel, cx: CellComplex) -> ChainState:
    """n_V single-site attempts at uniformly random vertices."""
    vs = state.rng.integers(0, cx.n_V, size=cx.n_V)
    us = state.rng.random(cx.n_V)
    for v, u in zip(vs, us):
        metropolis_step(state, model, cx, int(v), float(u))
    state.sweeps_done += 1
    return state


@dataclass
class ObservationSeries:
    """Per-observation summaries of a run, plus aggregates."""

    g: float
    regime: str
    qc_mode: str
    n_samples: int
    spans: np.ndarray
    n_merge: np.ndarray
    n_clusters: np.ndarray
    largest: np.ndarray
    size_histogram: np.ndarray  # accumulated cluster-size counts
    accept_rate: float
    sweeps_done: int
    engine: str
    seed: int
    configs: Optional[np.ndarray] = None  # packed label bits, if collected
    observer_values: Dict[str, list] = field(default_factory=dict)
    n_F: int = 0
    final_labels: Optional[np.ndarray] = None

    @property
    def p_span(self) -> float:
        return float(self.spans.mean())


Observer = Callable[[ClusterDecomposition, CellComplex], object]


def _observe_arrays(cx: CellComplex, labels: np.ndarray):
    """(spans, n_clusters, largest, sizes) of the current configuration."""
    arr = cx.arrays()
    root, wx, wy = _kernel.uf_decompose(
        labels, arr.vf_indptr, arr.vf_data, arr.vf_offx, arr.vf_offy,
        arr.n_F, arr.has_winding,
    )
    roots = root == np.arange(arr.n_F)
    sizes = np.bincount(root, minlength=arr.n_F)[roots]
    if arr.has_winding:
        spans = bool(np.any(wx[roots] | wy[roots]))
    else:
        contact = np.zeros(arr.n_F, dtype=np.uint8)
        np.bitwise_or.at(contact, root, arr.boundary_mask)
        c = contact[roots]
        spans = bool(np.any(((c & 1) > 0) & ((c & 2) > 0) | ((c & 4) > 0) & ((c & 8) > 0)))
    return spans, sizes


class _FastChain:
    """Incremental-kernel chain; state lives in flat numpy arrays."""

    def __init__(self, cx: CellComplex, model: WeightModel, config: OutcomeConfig, rng):
        self.cx = cx
        self.model = model
        self.rng = rng
        arr = cx.arrays()
        self.arr = arr
        levels = np.unique(arr.b_v)
        self.levels = levels.astype(np.float64)
        self.blevel_v = np.searchsorted(levels, arr.b_v).astype(np.int64)
        self.labels = config.labels.copy()
        cap = arr.n_F + 4
        self.cluster_of = np.zeros(arr.n_F, dtype=np.int64)
        self.cl_next = np.zeros(arr.n_F, dtype=np.int64)
        self.cl_prev = np.zeros(arr.n_F, dtype=np.int64)
        self.chead = np.full(cap, -1, dtype=np.int64)
        self.csize = np.zeros(cap, dtype=np.int64)
        self.csigma = np.zeros(cap, dtype=np.float64)
        self.cbcnt = np.zeros((cap, len(levels)), dtype=np.int64)
        self.free_stack = np.zeros(cap, dtype=np.int64)
        self.regs = np.zeros(6, dtype=np.int64)
        self.vertex_epoch = np.zeros(arr.n_V, dtype=np.int64)
        self.face_epoch = np.zeros(arr.n_F, dtype=np.int64)
        self.face_group = np.zeros(arr.n_F, dtype=np.int64)
        self.qbuf = np.zeros((4, arr.n_F), dtype=np.int64)
        self.explored = np.zeros(arr.n_F, dtype=np.int64)
        self._init_clusters()
        self.sweeps_done = 0

    def _init_clusters(self):
        dec = decompose(self.cx, OutcomeConfig(self.labels))
        arr = self.arr
        self.cluster_of[:] = dec.cluster_of
        n_c = dec.n_clusters
        for cid, cl in enumerate(dec.clusters):
            fs = cl.faces
            self.chead[cid] = fs[0]
            for i, f in enumerate(fs):
                self.cl_next[f] = fs[(i + 1) % len(fs)]
                self.cl_prev[f] = fs[i - 1]
            self.csize[cid] = cl.size
            self.csigma[cid] = float(arr.sigma_f[fs].sum())
            for u in cl.merge_vertices:
                self.cbcnt[cid, self.blevel_v[u]] += 1
        cap = self.chead.shape[0]
        n_free = cap - n_c
        self.free_stack[:n_free] = np.arange(n_c, cap)[::-1]
        self.regs[0] = n_free
        self.regs[1] = int(self.labels.sum())
        self.regs[2] = n_c

    def run_sweeps(self, n_sweeps: int):
        n_V = self.arr.n_V
        mode = self.model.kernel_mode
        lnR = self.model.ln_merge_over_keep
        for _ in range(n_sweeps):
            rand_v = self.rng.integers(0, n_V, size=n_V).astype(np.int64)
            rand_u = self.rng.random(n_V)
            _kernel.run_sweeps(
                self.labels, self.cluster_of, self.cl_next, self.cl_prev,
                self.chead, self.csize, self.csigma, self.cbcnt,
                self.free_stack, self.regs,
                self.arr.vf_indptr, self.arr.vf_data,
                self.arr.fv_indptr, self.arr.fv_data,
                self.arr.b_v, self.blevel_v, self.arr.sigma_f, self.levels,
                mode, lnR, rand_v, rand_u,
                self.vertex_epoch, self.face_epoch, self.face_group,
                self.qbuf, self.explored,
            )
        self.sweeps_done += n_sweeps

    def check_consistency(self):
        """Debug: incremental state must equal a fresh decomposition."""
        dec = decompose(self.cx, OutcomeConfig(self.labels))
        assert int(self.regs[1]) == dec.n_merge
        assert int(self.regs[2]) == dec.n_clusters
        mapping = {}
        for f in range(self.arr.n_F):
            key = int(self.cluster_of[f])
            ref = int(dec.cluster_of[f])
            if key in mapping:
                assert mapping[key] == ref, "cluster partitions differ"
            mapping[key] = ref
        assert len(set(mapping.values())) == len(mapping)
        for cid, ref in mapping.items():
            assert int(self.csize[cid]) == dec.clusters[ref].size
            want = np.zeros(len(self.levels), dtype=np.int64)
            for u in dec.clusters[ref].merge_vertices:
                want[self.blevel_v[u]] += 1
            assert np.array_equal(self.cbcnt[cid], want)
            assert abs(self.csigma[cid] - self.arr.sigma_f[dec.clusters[ref].faces].sum()) < 1e-9


def pick_engine(model: WeightModel, engine: str = "auto") -> str:
    if engine != "auto":
        return engine
    if model.regime is Regime.SUPER and model.qc_mode.kind == "exact":
        return "reference"
    return "fast"


def run(
    cx: CellComplex,
    model: WeightModel,
    params: SamplerParams,
    observers: Optional[Dict[str, Observer]] = None,
    engine: str = "auto",
    collect_configs: bool = False,
    check_every: int = 0,
) -> ObservationSeries:
    """Burn in, then record n_samples observations every thinning_sweeps.

    Observations are summaries of the current decomposition (spanning flag,
    merge count, cluster count, largest cluster, size histogram); custom
    observers get the full decomposition. Deterministic for a fixed seed.
    """
    engine = pick_engine(model, engine)
    if engine not in ("fast", "reference"):
        raise ValueError(f"unknown engine {engine!r}")
    n = params.n_samples
    spans = np.zeros(n, dtype=np.bool_)
    n_merge = np.zeros(n, dtype=np.int64)
    n_clusters = np.zeros(n, dtype=np.int64)
    largest = np.zeros(n, dtype=np.int64)
    size_hist = np.zeros(cx.n_F + 1, dtype=np.int64)
    configs = np.zeros(n, dtype=np.uint64) if collect_configs and cx.n_V <= 64 else None
    observer_values: Dict[str, list] = {name: [] for name in (observers or {})}
    bitw = np.arange(cx.n_V, dtype=np.uint64) if configs is not None else None

    if engine == "reference":
        state = init_chain(cx, model, params)
        for _ in range(params.burn_in_sweeps):
            sweep(state, model, cx)
        for i in range(n):
            for _ in range(params.thinning_sweeps):
                sweep(state, model, cx)
            labels = state.config.labels
            sp, sizes = _observe_arrays(cx, labels)
            spans[i] = sp
            n_merge[i] = labels.sum()
            n_clusters[i] = sizes.shape[0]
            largest[i] = sizes.max()
            np.add.at(size_hist, sizes, 1)
            if configs is not None:
                configs[i] = np.sum(labels.astype(np.uint64) << bitw, dtype=np.uint64)
            if observers:
                dec = state.dec
                for name, fn in observers.items():
                    observer_values[name].append(fn(dec, cx))
        accept_rate = state.accept_count / max(1, state.propose_count)
        sweeps_done = state.sweeps_done
        final_labels = state.config.labels.copy()
    else:
        rng = np.random.default_rng(np.random.SeedSequence(params.seed))
        config = _start_config(cx, params, rng)
        dec0 = decompose(cx, config)
        if log_weight(model, dec0, cx) == float("-inf"):
            raise ZeroWeightStart(
                f"start {params.start.value} has zero probability at g={model.g}"
            )
        chain = _FastChain(cx, model, config, rng)
        chain.run_sweeps(params.burn_in_sweeps)
        for i in range(n):
            chain.run_sweeps(params.thinning_sweeps)
            if check_every and (i + 1) % check_every == 0:
                chain.check_consistency()
            sp, sizes = _observe_arrays(cx, chain.labels)
            spans[i] = sp
            n_merge[i] = chain.regs[1]
            n_clusters[i] = chain.regs[2]
            largest[i] = sizes.max()
            np.add.at(size_hist, sizes, 1)
            if configs is not None:
                configs[i] = np.sum(chain.labels.astype(np.uint64) << bitw, dtype=np.uint64)
            if observers:
                dec = decompose(cx, OutcomeConfig(chain.labels))
                for name, fn in observers.items():
                    observer_values[name].append(fn(dec, cx))
        accept_rate = float(chain.regs[3]) / max(1, float(chain.regs[4]))
        sweeps_done = chain.sweeps_done
        final_labels = chain.labels.copy()

    return ObservationSeries(
        g=model.g,
        regime=model.regime.value,
        qc_mode=model.qc_mode.kind,
        n_samples=n,
        spans=spans,
        n_merge=n_merge,
        n_clusters=n_clusters,
        largest=largest,
        size_histogram=size_hist,
        accept_rate=accept_rate,
        sweeps_done=sweeps_done,
        engine=engine,
        seed=params.seed,
        configs=configs,
        observer_values=observer_values,
        n_F=cx.n_F,
        final_labels=final_labels,
    )


def spawn_seeds(master_seed: int, n: int) -> List[int]:
    """Deterministic child seeds for independent chains/cells."""
    ss = np.random.SeedSequence(master_seed)
    return [int(child.generate_state(1)[0]) for child in ss.spawn(n)]
