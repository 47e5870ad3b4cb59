"""Dependency-free SVG emitters: spanning-probability plots and lattice
snapshots.

Output is deterministic for fixed input (stable element order, fixed float
formatting), so tests can compare structure rather than pixels.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidSpec
from .lattice import CellComplex, LatticeKind

_PALETTE = [
    "#4878a8", "#e49444", "#d1615d", "#85b6b2", "#6a9f58",
    "#e7ca60", "#a87c9f", "#f1a2a9", "#967662", "#b8b0ac",
]


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _ticks(lo: float, hi: float, n: int = 5) -> List[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(1, n - 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw)
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-12:
        out.append(round(t, 12))
        t += step
    return out or [lo]


def line_plot(
    curves: Sequence[Tuple[str, Sequence[float], Sequence[float], Optional[Sequence[float]]]],
    title: str,
    xlabel: str,
    ylabel: str,
    vline: Optional[float] = None,
) -> str:
    """Simple multi-curve line plot with optional error bars.

    ``curves``: (label, xs, ys, yerrs-or-None) per curve.
    """
    W, H = 640, 440
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = W - ml - mr, H - mt - mb
    xs_all = [x for _, xs, _, _ in curves for x in xs]
    ys_all = [y for _, _, ys, _ in curves for y in ys]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(0.0, min(ys_all)), max(1.0, max(ys_all))
    if x1 == x0:
        x1 = x0 + 1.0

    def X(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def Y(y):
        return mt + (1 - (y - y0) / (y1 - y0)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W/2:.0f}" y="24" text-anchor="middle" font-size="16" font-family="sans-serif">{title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for t in _ticks(x0, x1):
        parts.append(
            f'<line x1="{X(t):.1f}" y1="{mt+ph}" x2="{X(t):.1f}" y2="{mt+ph+5}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{X(t):.1f}" y="{mt+ph+20}" text-anchor="middle" font-size="11" font-family="sans-serif">{_fmt(t)}</text>'
        )
    for t in _ticks(y0, y1):
        parts.append(
            f'<line x1="{ml-5}" y1="{Y(t):.1f}" x2="{ml}" y2="{Y(t):.1f}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{ml-9}" y="{Y(t)+4:.1f}" text-anchor="end" font-size="11" font-family="sans-serif">{_fmt(t)}</text>'
        )
    parts.append(
        f'<text x="{ml+pw/2:.0f}" y="{H-12}" text-anchor="middle" font-size="13" font-family="sans-serif">{xlabel}</text>'
    )
    parts.append(
        f'<text x="18" y="{mt+ph/2:.0f}" text-anchor="middle" font-size="13" font-family="sans-serif" transform="rotate(-90 18 {mt+ph/2:.0f})">{ylabel}</text>'
    )
    if vline is not None and x0 <= vline <= x1:
        parts.append(
            f'<line x1="{X(vline):.1f}" y1="{mt}" x2="{X(vline):.1f}" y2="{mt+ph}" stroke="#999" stroke-dasharray="4 3"/>'
        )
    for i, (label, xs, ys, errs) in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{X(x):.1f},{Y(y):.1f}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        if errs is not None:
            for x, y, e in zip(xs, ys, errs):
                parts.append(
                    f'<line x1="{X(x):.1f}" y1="{Y(y-e):.1f}" x2="{X(x):.1f}" y2="{Y(y+e):.1f}" stroke="{color}"/>'
                )
        for x, y in zip(xs, ys):
            parts.append(f'<circle cx="{X(x):.1f}" cy="{Y(y):.1f}" r="2.4" fill="{color}"/>')
        ly = mt + 16 + 16 * i
        parts.append(f'<line x1="{ml+pw-110}" y1="{ly}" x2="{ml+pw-86}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="{ml+pw-80}" y="{ly+4}" font-size="12" font-family="sans-serif">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def snapshot(cx: CellComplex, labels: np.ndarray, dec, spanning_cluster_ids=None) -> str:
    """Render one outcome configuration.

    Faces are shaded by cluster (multi-face clusters only), vertices drawn
    as red (Keep) or green (Merge) dots, spanning clusters outlined.
    """
    if cx.face_centers is None or cx.vertex_positions is None:
        raise InvalidSpec("snapshot rendering needs a built-in lattice with coordinates")
    centers = cx.face_centers
    scale = 36.0 if cx.kind is LatticeKind.SQUARE else 40.0
    pad = 30.0
    xs = centers[:, 0] * scale
    ys = centers[:, 1] * scale
    W = xs.max() - xs.min() + 2 * pad
    H = ys.max() - ys.min() + 2 * pad
    ox, oy = pad - xs.min(), pad - ys.min()
    if spanning_cluster_ids is None:
        spanning_cluster_ids = set()

    def face_poly(f: int) -> str:
        cxx, cyy = xs[f] + ox, ys[f] + oy
        if cx.kind is LatticeKind.SQUARE:
            r = scale / 2
            corners = [(cxx - r, cyy - r), (cxx + r, cyy - r), (cxx + r, cyy + r), (cxx - r, cyy + r)]
        else:
            r = scale / math.sqrt(3.0)
            corners = [
                (cxx + r * math.cos(math.pi / 6 + k * math.pi / 3),
                 cyy + r * math.sin(math.pi / 6 + k * math.pi / 3))
                for k in range(6)
            ]
        return " ".join(f"{a:.1f},{b:.1f}" for a, b in corners)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" viewBox="0 0 {W:.0f} {H:.0f}">',
        f'<rect width="{W:.0f}" height="{H:.0f}" fill="white"/>',
    ]
    sizes = {i: c.size for i, c in enumerate(dec.clusters)}
    for f in range(cx.n_F):
        cid = int(dec.cluster_of[f])
        if sizes[cid] > 1:
            fill = _PALETTE[cid % len(_PALETTE)]
            extra = ' stroke="#c22" stroke-width="2.5"' if cid in spanning_cluster_ids else ' stroke="#777" stroke-width="0.5"'
            opacity = 0.55
        else:
            fill = "#f4f4f4"
            extra = ' stroke="#bbb" stroke-width="0.5"'
            opacity = 1.0
        parts.append(
            f'<polygon points="{face_poly(f)}" fill="{fill}" fill-opacity="{opacity}"{extra}/>'
        )
    vpos = cx.vertex_positions
    for v in range(cx.n_V):
        px = vpos[v, 0] * scale + ox
        py = vpos[v, 1] * scale + oy
        color = "#2a9d2a" if labels[v] else "#cc2222"
        parts.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="3" fill="{color}"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def spanning_ids(dec) -> set:
    """Cluster ids that wind the torus or touch opposite boundary sides."""
    out = set()
    n = len(dec.clusters)
    for i in range(n):
        if dec.winds_x is not None and (dec.winds_x[i] or dec.winds_y[i]):
            out.add(i)
        elif dec.boundary_contact is not None:
            c = int(dec.boundary_contact[i])
            if ((c & 1) and (c & 2)) or ((c & 4) and (c & 8)):
                out.add(i)
    return out
