"""Tiny deterministic SVG scatter plots.

Samples are shown in distance coordinates |x - mu_i| (one axis per component,
first three components), as 2-D pairwise panels.  Output is plain text built
with fixed float formats, so identical inputs give identical bytes.
"""

from __future__ import annotations

import os

import numpy as np

from ..analysis import mode_labels
from ..mixture import MixtureModel

__all__ = ["distance_axes", "render_scatter", "write_distance_panels"]

_SIZE = 420
_MARGIN = 48
_COLORS = ("#999999", "#d62728", "#1f77b4", "#2ca02c", "#9467bd")


def distance_axes(states: np.ndarray, model: MixtureModel, max_axes: int = 3):
    """Euclidean distances from each state to the first `max_axes` means."""
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    m = min(max_axes, model.n_components)
    out = np.empty((states.shape[0], m))
    for i in range(m):
        diff = states - model.means[i]
        out[:, i] = np.sqrt(np.sum(diff * diff, axis=1))
    return out


def _scale(values: np.ndarray):
    lo = float(values.min())
    hi = float(values.max())
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    span = hi - lo
    inner = _SIZE - 2 * _MARGIN

    def to_px(v: float) -> float:
        return _MARGIN + (v - lo) / span * inner

    return lo, hi, to_px


def render_scatter(
    xs: np.ndarray,
    ys: np.ndarray,
    labels: np.ndarray,
    x_label: str,
    y_label: str,
    title: str,
) -> str:
    x_lo, x_hi, px = _scale(xs)
    y_lo, y_hi, py_raw = _scale(ys)

    def py(v: float) -> float:  # svg y grows downward
        return _SIZE - py_raw(v)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" '
        f'viewBox="0 0 {_SIZE} {_SIZE}">',
        f'<rect width="{_SIZE}" height="{_SIZE}" fill="white"/>',
        f'<text x="{_SIZE // 2}" y="20" text-anchor="middle" font-size="13">{title}</text>',
    ]
    ax = _MARGIN
    ay = _SIZE - _MARGIN
    parts.append(
        f'<line x1="{ax}" y1="{ay}" x2="{_SIZE - _MARGIN}" y2="{ay}" stroke="black"/>'
    )
    parts.append(f'<line x1="{ax}" y1="{ay}" x2="{ax}" y2="{_MARGIN}" stroke="black"/>')
    for frac in (0.0, 0.5, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        parts.append(
            f'<text x="{px(xv):.1f}" y="{ay + 16}" text-anchor="middle" '
            f'font-size="10">{xv:.3g}</text>'
        )
        parts.append(
            f'<text x="{ax - 6}" y="{py(yv):.1f}" text-anchor="end" '
            f'font-size="10">{yv:.3g}</text>'
        )
    parts.append(
        f'<text x="{_SIZE // 2}" y="{_SIZE - 8}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>'
    )
    parts.append(
        f'<text x="14" y="{_SIZE // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {_SIZE // 2})">{y_label}</text>'
    )
    for i in range(xs.shape[0]):
        color = _COLORS[int(labels[i]) % len(_COLORS)]
        parts.append(
            f'<circle cx="{px(float(xs[i])):.2f}" cy="{py(float(ys[i])):.2f}" '
            f'r="2" fill="{color}" fill-opacity="0.6"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_distance_panels(
    out_dir: str,
    states: np.ndarray,
    model: MixtureModel,
    radius_coef: float = 5.0,
    prefix: str = "panel",
) -> dict[str, str]:
    """Write one scatter per pair of distance axes; returns {name: path}.

    Rows containing NaN (coordinates never produced) are dropped.  Points are
    colored by their mode label under the given clustering radius.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    keep = ~np.isnan(states).any(axis=1)
    states = states[keep]
    if states.shape[0] == 0:
        return {}
    axes = distance_axes(states, model)
    labels = (
        mode_labels(states, model, radius_coef)
        if model.n_components >= 2
        else np.zeros(states.shape[0], dtype=np.int64)
    )
    written: dict[str, str] = {}
    m = axes.shape[1]
    for i in range(m):
        for j in range(i + 1, m):
            name = f"{prefix}_d{i}_d{j}.svg"
            path = os.path.join(out_dir, name)
            text = render_scatter(
                axes[:, i],
                axes[:, j],
                labels,
                f"|x - mu_{i}|",
                f"|x - mu_{j}|",
                f"|x - mu_{i}| vs |x - mu_{j}|",
            )
            with open(path, "w", newline="") as fh:
                fh.write(text)
            written[name] = path
    return written
