"""Reference modular data for the three phases and a threshold classifier.

The gauged theory of each phase is summarized by a pair of 4x4 modular
matrices. Tr(T^2) alone separates the phases: 1 in the symmetry-breaking
region, 4 in the trivial symmetric phase (toric-code data after a basis
change), 0 in the nontrivial one (double-semion data). The classifier
places a coupling g on the phase diagram using the transition values
measured by tensor-network simulation: |g_c| = 0.759(1) on the honeycomb
lattice and 0.633(1) on the square lattice, with the nontrivial phase at
g below -|g_c| and the trivial one above +|g_c|.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from .errors import UnknownLattice
from .lattice import LatticeKind


class PhaseLabel(str, Enum):
    SB = "SB"
    SPT0 = "SPT0"
    SPT1 = "SPT1"
    BOUNDARY = "Boundary"


_SB = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]], dtype=complex
)
_S_SPT0 = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)
_T_SPT0 = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_S_SPT1 = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, -1]], dtype=complex
)
_T_SPT1 = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=complex
)

# basis-changed forms: toric code for the trivial phase ...
_T_TORIC = np.diag([1, 1, 1, -1]).astype(complex)
_S_TORIC = 0.5 * np.array(
    [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]], dtype=complex
)
# ... and double semion for the nontrivial one
_T_SEMION = np.diag([1, 1, 1j, -1j]).astype(complex)
_S_SEMION = 0.5 * np.array(
    [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, -1, 1], [1, -1, 1, -1]], dtype=complex
)


@dataclass(frozen=True)
class ModularData:
    phase_label: PhaseLabel
    S: np.ndarray
    T: np.ndarray

    @property
    def trace_T2(self) -> float:
        return float(np.trace(self.T @ self.T).real)


def reference_matrices(label: PhaseLabel) -> ModularData:
    label = PhaseLabel(label)
    if label is PhaseLabel.SB:
        return ModularData(label, _SB.copy(), _SB.copy())
    if label is PhaseLabel.SPT0:
        return ModularData(label, _S_SPT0.copy(), _T_SPT0.copy())
    if label is PhaseLabel.SPT1:
        return ModularData(label, _S_SPT1.copy(), _T_SPT1.copy())
    raise ValueError(f"no reference matrices for {label}")


def basis_change_targets(label: PhaseLabel) -> Tuple[np.ndarray, np.ndarray]:
    """(T', S') in the basis where T is diagonal, first S' row/column 1/2."""
    label = PhaseLabel(label)
    if label is PhaseLabel.SPT0:
        return _T_TORIC.copy(), _S_TORIC.copy()
    if label is PhaseLabel.SPT1:
        return _T_SEMION.copy(), _S_SEMION.copy()
    raise ValueError("basis change is defined for the two symmetric phases only")


@dataclass
class BasisChangeResult:
    ok: bool
    T_prime: np.ndarray
    S_prime: np.ndarray
    intertwiner: np.ndarray
    deviation: float


def verify_basis_change(label: PhaseLabel, tol: float = 1e-10) -> BasisChangeResult:
    """Find a unitary V with V^-1 T V and V^-1 S V equal to the printed
    diagonalized forms, and check it reproduces them exactly.

    The V solving both intertwining equations is obtained from the joint
    nullspace of (T x I - I x T'^t) and (S x I - I x S'^t); a generic
    nullspace combination is unitary up to normalization when the pairs are
    equivalent.
    """
    data = reference_matrices(label)
    T_p, S_p = basis_change_targets(label)
    eye = np.eye(4)
    K = np.vstack(
        [
            np.kron(data.S, eye) - np.kron(eye, S_p.T),
            np.kron(data.T, eye) - np.kron(eye, T_p.T),
        ]
    )
    _, s, vh = np.linalg.svd(K)
    null_mask = np.abs(np.concatenate([s, np.zeros(vh.shape[0] - s.shape[0])])) < 1e-9
    basis = vh[null_mask].conj()  # nullspace vectors are conjugated vh rows
    if basis.shape[0] == 0:
        return BasisChangeResult(False, T_p, S_p, np.zeros((4, 4)), float("inf"))
    rng = np.random.default_rng(12345)
    V = None
    for _ in range(16):
        coeff = rng.normal(size=basis.shape[0]) + 1j * rng.normal(size=basis.shape[0])
        cand = (coeff @ basis).reshape(4, 4)
        if abs(np.linalg.det(cand)) > 1e-6:
            V = cand
            break
    if V is None:
        return BasisChangeResult(False, T_p, S_p, np.zeros((4, 4)), float("inf"))
    # unitarize: the polar factor of an invertible intertwiner between
    # unitary pairs is itself an intertwiner
    w, _, zh = np.linalg.svd(V)
    V = w @ zh
    T_out = np.linalg.solve(V, data.T @ V)
    S_out = np.linalg.solve(V, data.S @ V)
    dev = max(
        float(np.max(np.abs(T_out - T_p))),
        float(np.max(np.abs(S_out - S_p))),
        float(np.max(np.abs(V.conj().T @ V - eye))),
    )
    return BasisChangeResult(dev < tol, T_out, S_out, V, dev)


@dataclass(frozen=True)
class PhaseThresholds:
    """Phase-diagram boundary values |g_c| with quoted uncertainties."""

    honeycomb: Tuple[float, float] = (0.759, 0.001)
    square: Tuple[float, float] = (0.633, 0.001)

    def for_kind(self, kind: LatticeKind) -> Tuple[float, float]:
        if kind is LatticeKind.HONEYCOMB:
            return self.honeycomb
        if kind is LatticeKind.SQUARE:
            return self.square
        raise UnknownLattice(f"no published phase boundaries for {kind.value}")


def classify(
    g: float, lattice: LatticeKind, thresholds: PhaseThresholds = PhaseThresholds()
) -> PhaseLabel:
    """Phase of the wave function at coupling g on a built-in lattice.

    Values within the quoted uncertainty of a boundary return Boundary.
    """
    gc, unc = thresholds.for_kind(LatticeKind(lattice))
    if abs(abs(g) - gc) <= unc:
        return PhaseLabel.BOUNDARY
    if g > gc:
        return PhaseLabel.SPT0
    if g < -gc:
        return PhaseLabel.SPT1
    return PhaseLabel.SB
