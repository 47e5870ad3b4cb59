"""Exact brute-force reference on small lattices.

The wave functions are supported exactly on the binary face colorings: each
face's qubits are locked together, so a state on a complex with n_F faces
lives in a 2^n_F-dimensional subspace. The amplitude of a coloring is the
product over sites of the local deformation weight evaluated on the colors
of the site's incident faces; measurement outcomes multiply in one diagonal
factor per site. Everything here enumerates those sums literally; it is the
ground truth the weight formulas and the sampler are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernel
from .errors import RegimeMismatch, TooLarge
from .lattice import CellComplex, LatticeKind
from .weights import Regime

MAX_ENUM_FACES = 22  # amplitude vectors: 2^n_F doubles
MAX_ENUM_CONFIGS = 20  # outcome sums: 2^n_V doubles

# degree-4 sign classes: pattern codes (bit s = color of the s-th face
# around the site, in cyclic order) that pick up the sign of g
_DEG4_SIGNED = (0b1100, 0b1001)


def local_amplitudes(degree: int, g: float) -> np.ndarray:
    """Site weight table indexed by the local face-coloring pattern code.

    Degree 3: uniform patterns weigh 1, one raised face |g|, two raised g.
    Degree 4: uniform 1, two designated opposite-pair patterns g, rest |g|.
    Degrees 1 and 2 occur on truncated rims: uniform 1, mixed |g| (no sign).
    """
    n = 1 << degree
    table = np.empty(n, dtype=np.float64)
    for code in range(n):
        ones = bin(code).count("1")
        if ones == 0 or ones == degree:
            table[code] = 1.0
        elif degree == 3:
            table[code] = abs(g) if ones == 1 else g
        elif degree == 4:
            table[code] = g if code in _DEG4_SIGNED else abs(g)
        else:
            table[code] = abs(g)
    return table


@dataclass(frozen=True)
class PovmSet:
    """Diagonal measurement factors f(outcome, local pattern class).

    ``keep_eq/keep_mix`` apply to the outcome that restores the fixed point,
    ``merge_eq/merge_mix`` to the one that fuses the surrounding faces.
    """

    regime: Regime
    keep_eq: float
    keep_mix: float
    merge_eq: float
    merge_mix: float

    @classmethod
    def for_g(cls, g: float, regime: Optional[Regime] = None) -> "PovmSet":
        regime = regime or (Regime.SUB if abs(g) <= 1 else Regime.SUPER)
        a = abs(g)
        if regime is Regime.SUB:
            if a > 1.0:
                raise RegimeMismatch(f"|g| = {a} > 1 has no sub-regime measurement")
            return cls(Regime.SUB, a, 1.0, math.sqrt(1.0 - g * g), 0.0)
        if a < 1.0:
            raise RegimeMismatch(f"|g| = {a} < 1 has no super-regime measurement")
        return cls(Regime.SUPER, 1.0, 1.0 / a, 0.0, math.sqrt(g * g - 1.0) / a)

    def completeness_defect(self, degree: int) -> float:
        """max over local patterns of |f_keep^2 + f_merge^2 - 1|."""
        eq = self.keep_eq**2 + self.merge_eq**2
        mix = self.keep_mix**2 + self.merge_mix**2
        return max(abs(eq - 1.0), abs(mix - 1.0))


def povm_completeness(regime: Regime, degree: int, g: float, tol: float = 1e-12) -> bool:
    """Whether the two-outcome measurement resolves the identity."""
    if degree not in (1, 2, 3, 4):
        raise ValueError(f"degree {degree} unsupported")
    return PovmSet.for_g(g, regime).completeness_defect(degree) < tol


# ---------------------------------------------------------------------------
# amplitudes


def _check_enum_faces(cx: CellComplex) -> None:
    if cx.n_F > MAX_ENUM_FACES:
        raise TooLarge(f"{cx.n_F} faces exceeds the enumeration bound {MAX_ENUM_FACES}")


def _vertex_codes(cx: CellComplex, sigma: np.ndarray) -> np.ndarray:
    """Pattern codes of every vertex for a batch of colorings.

    ``sigma`` is an integer array of coloring indices; returns an
    (n_V, len(sigma)) array of local codes.
    """
    codes = np.zeros((cx.n_V, sigma.shape[0]), dtype=np.int64)
    for v, faces in enumerate(cx.vertex_faces):
        for s, f in enumerate(faces):
            codes[v] |= ((sigma >> f) & 1) << s
    return codes


def amplitude_vector(cx: CellComplex, g: float) -> np.ndarray:
    """Wave-function amplitudes over all 2^n_F face colorings."""
    _check_enum_faces(cx)
    sigma = np.arange(1 << cx.n_F, dtype=np.int64)
    amp = np.ones(sigma.shape[0], dtype=np.float64)
    tables = {d: local_amplitudes(d, g) for d in set(len(f) for f in cx.vertex_faces)}
    codes = _vertex_codes(cx, sigma)
    for v, faces in enumerate(cx.vertex_faces):
        amp *= tables[len(faces)][codes[v]]
    return amp


def norm_sq(cx: CellComplex, g: float) -> float:
    amp = amplitude_vector(cx, g)
    return float(np.dot(amp, amp))


def z2_symmetry_check(cx: CellComplex, g: float, tol: float = 1e-12) -> bool:
    """amplitude(flip of sigma) == amplitude(sigma) for every coloring.

    The global spin flip is an exact symmetry on closed surfaces for either
    sign of g; open rims are only checked where the sign structure is trivial.
    """
    amp = amplitude_vector(cx, g)
    mask = (1 << cx.n_F) - 1
    flipped = amp[mask ^ np.arange(amp.shape[0])]
    return bool(np.max(np.abs(amp - flipped)) <= tol * max(1.0, np.max(np.abs(amp))))


# ---------------------------------------------------------------------------
# outcome probabilities


def _site_factors(cx: CellComplex, g: float, regime: Regime):
    """Per-vertex squared factors (keep, merge) for every coloring.

    Returns (wk, wm): arrays of shape (n_V, 2^n_F) with
    w = (A * f_outcome)^2 evaluated on each coloring.
    """
    _check_enum_faces(cx)
    povm = PovmSet.for_g(g, regime)
    sigma = np.arange(1 << cx.n_F, dtype=np.int64)
    codes = _vertex_codes(cx, sigma)
    wk = np.empty((cx.n_V, sigma.shape[0]), dtype=np.float64)
    wm = np.empty_like(wk)
    tables = {d: local_amplitudes(d, g) for d in set(len(f) for f in cx.vertex_faces)}
    for v, faces in enumerate(cx.vertex_faces):
        d = len(faces)
        a2 = tables[d][codes[v]] ** 2
        eq = (codes[v] == 0) | (codes[v] == (1 << d) - 1)
        fk2 = np.where(eq, povm.keep_eq**2, povm.keep_mix**2)
        fm2 = np.where(eq, povm.merge_eq**2, povm.merge_mix**2)
        wk[v] = a2 * fk2
        wm[v] = a2 * fm2
    return wk, wm


def exact_outcome_prob(cx: CellComplex, g: float, regime: Regime, config) -> float:
    """Probability of one outcome configuration, by full enumeration."""
    config.validate_for(cx)
    wk, wm = _site_factors(cx, g, regime)
    w = np.where(config.labels[:, None] == 1, wm, wk)
    num = np.prod(w, axis=0).sum()
    den = (wk + wm).prod(axis=0).sum()  # completeness makes this the norm^2
    return float(num / den)


def all_outcome_probs(cx: CellComplex, g: float, regime: Regime) -> np.ndarray:
    """Probabilities of all 2^n_V outcome configurations.

    Index bit v holds vertex v's outcome (1 = merge). Sums, per coloring,
    the tensor product over vertices of (keep, merge) factors.
    """
    if cx.n_V > MAX_ENUM_CONFIGS:
        raise TooLarge(
            f"{cx.n_V} vertices exceeds the outcome-enumeration bound {MAX_ENUM_CONFIGS}"
        )
    wk, wm = _site_factors(cx, g, regime)
    n_sigma = wk.shape[1]
    out = np.zeros(1 << cx.n_V, dtype=np.float64)
    for s in range(n_sigma):
        acc = np.array([1.0])
        for v in range(cx.n_V):
            acc = np.concatenate((acc * wk[v, s], acc * wm[v, s]))
        out += acc
    return out / out.sum()


@dataclass
class OracleReport:
    check_name: str
    lattice: str
    g: float
    regime: str
    max_deviation: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "lattice": self.lattice,
            "g": self.g,
            "regime": self.regime,
            "max_deviation": self.max_deviation,
            "pass": self.passed,
            "detail": self.detail,
        }


def _lattice_desc(cx: CellComplex) -> str:
    return f"{cx.kind.value}-L{cx.L}-{cx.boundary.value}" if cx.L else cx.kind.value


def batch_log_weights(
    cx: CellComplex,
    g: float,
    regime: Regime,
    kernel_mode: int,
    cap: int = 24,
    flip_super_sign: bool = False,
):
    """Log weights of every outcome configuration plus spanning flags.

    ``flip_super_sign`` evaluates the |g|>1 counting term with the opposite
    exponent sign on the merge factor (the typo experiment); see
    verify_weight_formula.
    """
    if cx.n_V > MAX_ENUM_CONFIGS:
        raise TooLarge(f"{cx.n_V} vertices exceeds {MAX_ENUM_CONFIGS}")
    arr = cx.arrays()
    n_cfg = 1 << cx.n_V
    n_merge = np.zeros(n_cfg, dtype=np.int64)
    n_clusters = np.zeros(n_cfg, dtype=np.int64)
    sum_phi = np.zeros(n_cfg, dtype=np.float64)
    spans = np.zeros(n_cfg, dtype=np.bool_)
    rc = _kernel.batch_enumerate(
        cx.n_V,
        cx.n_F,
        arr.vf_indptr,
        arr.vf_data,
        arr.vf_offx,
        arr.vf_offy,
        arr.fv_indptr,
        arr.fv_data,
        arr.b_v,
        arr.sigma_f,
        arr.boundary_mask,
        arr.has_winding,
        kernel_mode,
        cap,
        n_merge,
        n_clusters,
        sum_phi,
        spans,
    )
    if rc != 0:
        raise TooLarge(f"a cluster exceeded the exact-count cap {cap}")
    g2 = g * g
    n_keep = cx.n_V - n_merge
    if regime is Regime.SUB:
        if g2 >= 1.0:
            # merge outcomes are impossible exactly at |g| = 1
            base = np.where(n_merge == 0, 0.0, float("-inf"))
        else:
            base = n_keep * math.log(g2) + n_merge * math.log(1.0 - g2)
    else:
        s = -1.0 if flip_super_sign else 1.0
        base = -n_keep * math.log(g2) + s * n_merge * math.log((g2 - 1.0) / g2)
    return base + sum_phi, spans


def verify_weight_formula(
    cx: CellComplex,
    g: float,
    regime: Optional[Regime] = None,
    kernel_mode: Optional[int] = None,
    flip_super_sign: bool = False,
) -> OracleReport:
    """Check that exact probability / closed-form weight is constant.

    Enumerates every outcome configuration, computes the exact probability
    from the wave function, and the claimed weight; the ratio must be one
    overall constant. Reports the max relative deviation from that constant.
    """
    regime = regime or (Regime.SUB if abs(g) <= 1 else Regime.SUPER)
    if kernel_mode is None:
        kernel_mode = 0 if regime is Regime.SUB else 3
    probs = all_outcome_probs(cx, g, regime)
    lw, _ = batch_log_weights(
        cx, g, regime, kernel_mode, flip_super_sign=flip_super_sign
    )
    pos = probs > 1e-300
    dev_zero = 0.0
    if not np.all(pos):
        # zero-probability configs must also have zero weight
        dev_zero = float(np.max(np.where(~pos & np.isfinite(lw), 1.0, 0.0)))
    r = np.log(probs[pos]) - lw[pos]
    r -= np.median(r)
    max_dev = max(float(np.max(np.abs(np.expm1(r)))), dev_zero)
    return OracleReport(
        check_name="weight-formula",
        lattice=_lattice_desc(cx),
        g=g,
        regime=regime.value,
        max_deviation=max_dev,
        passed=max_dev < 1e-9,
        detail=f"kernel_mode={kernel_mode}, flipped_sign={flip_super_sign}",
    )


def exact_span_prob(cx: CellComplex, g: float, regime: Optional[Regime] = None) -> float:
    """Probability that the sampled decomposition contains a spanning cluster."""
    regime = regime or (Regime.SUB if abs(g) <= 1 else Regime.SUPER)
    probs = all_outcome_probs(cx, g, regime)
    _, spans = batch_log_weights(cx, g, regime, kernel_mode=0)
    return float(probs[spans].sum())


def gauge_transform_check(cx: CellComplex, g: float, tol: float = 1e-12) -> bool:
    """Outcome probabilities at +g and -g coincide (the sign is a local
    basis change)."""
    regime = Regime.SUB if abs(g) <= 1 else Regime.SUPER
    p_plus = all_outcome_probs(cx, abs(g), regime)
    p_minus = all_outcome_probs(cx, -abs(g), regime)
    return bool(np.max(np.abs(p_plus - p_minus)) <= tol)
