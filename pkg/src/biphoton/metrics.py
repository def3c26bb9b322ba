"""Profile and map statistics: widths, zeros, fringe periods, bounding boxes."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray


def _crossing(x0, x1, y0, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def fwhm(x: NDArray, y: NDArray) -> float:
    """Full width at half maximum by linear interpolation of the half-max crossings."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i = int(np.argmax(y))
    half = 0.5 * y[i]
    lo = i
    while lo > 0 and y[lo] >= half:
        lo -= 1
    hi = i
    while hi < y.size - 1 and y[hi] >= half:
        hi += 1
    if y[lo] >= half or y[hi] >= half:
        raise ValueError("profile does not fall below half maximum inside the grid")
    left = _crossing(x[lo], x[lo + 1], y[lo], y[lo + 1], half)
    right = _crossing(x[hi - 1], x[hi], y[hi - 1], y[hi], half)
    return float(right - left)


def _refine_min(x: NDArray, y: NDArray, i: int) -> float:
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.0 if denom <= 0 else 0.5 * (y0 - y2) / denom
    return float(x[i] + shift * (x[1] - x[0]))


def local_minima(x: NDArray, y: NDArray) -> NDArray:
    """Positions of strict interior local minima, refined by a parabola fit."""
    y = np.asarray(y, dtype=float)
    idx = np.where((y[1:-1] < y[:-2]) & (y[1:-1] <= y[2:]))[0] + 1
    return np.array([_refine_min(x, y, i) for i in idx])


def first_zero(x: NDArray, y: NDArray, side: int = 1, origin: float | None = None) -> float:
    """Distance from ``origin`` (default: the peak sample) to the first local minimum beyond it."""
    x = np.asarray(x, dtype=float)
    x0 = float(x[int(np.argmax(y))]) if origin is None else float(origin)
    mins = local_minima(x, y)
    cand = mins[mins > x0] if side > 0 else mins[mins < x0]
    if cand.size == 0:
        raise ValueError("no minimum found beside the peak")
    pos = cand.min() if side > 0 else cand.max()
    return float(abs(pos - x0))


def fringe_period(x: NDArray, y: NDArray, window: float | None = None) -> float:
    """Mean spacing of consecutive minima, from a straight-line fit of minima positions."""
    mins = local_minima(x, y)
    if window is not None:
        mins = mins[np.abs(mins) <= window]
    if mins.size < 2:
        raise ValueError("need at least two minima to estimate a period")
    slope = np.polyfit(np.arange(mins.size), mins, 1)[0]
    return float(slope)


def extent_at(x: NDArray, profile: NDArray, level: float = 0.5) -> tuple[float, float]:
    """Outermost positions where ``profile`` crosses ``level * max``."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(profile, dtype=float)
    thr = level * p.max()
    above = np.where(p >= thr)[0]
    if above.size == 0:
        raise ValueError("empty profile")
    a, b = above[0], above[-1]
    left = x[a] if a == 0 else _crossing(x[a - 1], x[a], p[a - 1], p[a], thr)
    right = x[b] if b == p.size - 1 else _crossing(x[b], x[b + 1], p[b], p[b + 1], thr)
    return float(left), float(right)


def bounding_box(x: NDArray, y: NDArray, values: NDArray, level: float = 0.5):
    """Half-max bounding box ``((x_lo, x_hi), (y_lo, y_hi))`` of a map indexed ``[iy, ix]``."""
    v = np.asarray(values, dtype=float)
    return extent_at(x, v.max(axis=0), level), extent_at(y, v.max(axis=1), level)


def edge_sharpness(values: NDArray, spacing: float) -> float:
    """Gradient energy normalized by signal energy: sum |grad v|^2 / sum v^2."""
    v = np.asarray(values, dtype=float)
    grads = np.gradient(v, spacing)
    grads = grads if isinstance(grads, (list, tuple)) else [grads]
    energy = sum(np.sum(g**2) for g in grads)
    return float(energy / np.sum(v**2))


def rank1_residual(values: NDArray) -> float:
    """Relative L2 mass left after the best rank-one approximation of a 2D array."""
    s = np.linalg.svd(np.asarray(values, dtype=float), compute_uv=False)
    return float(np.sqrt(max(0.0, 1.0 - s[0] ** 2 / np.sum(s**2))))


def relative_l2(a: NDArray, b: NDArray) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
