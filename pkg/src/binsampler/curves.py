"""Normalized discovery curves and percentile bands across runs.

A trace becomes a curve by scaling iteration numbers with the slowest
*completed* run on the same instance and distinct counts with the oracle
size: completed curves end at (1, 1) and faster runs end earlier, which
is what makes curves of one instance comparable between strategies.
Curves of truncated runs keep the shared denominator and are cut off at
x = 1 where necessary.  Every curve starts with an explicit (0, 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_GRID_POINTS = 101


@dataclass(frozen=True)
class NormalizedCurve:
    """A discovery curve with x in [0, 1] (shared scale) and y in [0, 1]."""

    xs: np.ndarray
    ys: np.ndarray
    completed: bool

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.xs.tolist(), self.ys.tolist()))


@dataclass(frozen=True)
class PercentileBand:
    """Pointwise 16th/84th percentiles and mean over a family of curves."""

    grid: np.ndarray
    p16: np.ndarray
    p84: np.ndarray
    mean: np.ndarray


def normalize_curves(traces) -> list[NormalizedCurve]:
    """Normalize the traces of one instance onto a common [0, 1] scale.

    ``traces`` is any sequence of objects exposing ``len()``,
    ``distinct_counts``, ``completed`` and ``oracle_size`` (sample traces
    or the benchmark's per-cell results).  At least one trace must have
    completed, because the slowest completed run sets the x scale.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("no traces to normalize")
    sizes = {t.oracle_size for t in traces}
    if None in sizes or len(sizes) != 1:
        raise ValueError("traces must share one known oracle size")
    oracle_size = traces[0].oracle_size
    denominator = max((len(t) for t in traces if t.completed), default=0)
    if denominator == 0:
        raise ValueError(
            "no trace completed; raise max_iters or the budget to fix the x scale"
        )
    curves = []
    for t in traces:
        keep = min(len(t), denominator)
        xs = np.arange(keep + 1, dtype=np.float64) / denominator
        ys = np.empty(keep + 1, dtype=np.float64)
        ys[0] = 0.0
        ys[1:] = np.asarray(t.distinct_counts[:keep], dtype=np.float64) / oracle_size
        curves.append(NormalizedCurve(xs=xs, ys=ys, completed=t.completed))
    return curves


def _tail_percentile(sorted_values: np.ndarray, q: float) -> float:
    """Percentile with ranks counted from the nearer tail.

    The continuous rank is ``q * n`` from the bottom (or ``(1-q) * n``
    from the top for q > 0.5) and the value is linearly interpolated
    between the adjacent order statistics.
    """
    v = sorted_values
    n = v.shape[0]
    if n == 1:
        return float(v[0])
    if q > 0.5:
        return -_tail_percentile(-v[::-1], 1.0 - q)
    h = q * n
    j = int(np.floor(h))
    if j >= n - 1:
        return float(v[-1])
    g = h - j
    return float(v[j] + g * (v[j + 1] - v[j]))


def percentile_band(curves, grid=None) -> PercentileBand:
    """Evaluate the curves on a grid and summarize them pointwise.

    Curves are linearly interpolated between their points; beyond its
    last point a curve holds its final value (a completed curve has
    reached 1 by then).  The default grid is 101 evenly spaced points.
    """
    curves = list(curves)
    if not curves:
        raise ValueError("no curves to summarize")
    if grid is None:
        grid = np.linspace(0.0, 1.0, DEFAULT_GRID_POINTS)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("grid must not be empty")
    if grid.min() < 0.0 or grid.max() > 1.0:
        raise ValueError("grid values must lie in [0, 1]")
    values = np.stack([np.interp(grid, c.xs, c.ys) for c in curves])
    values.sort(axis=0)
    p16 = np.array([_tail_percentile(values[:, i], 0.16) for i in range(grid.size)])
    p84 = np.array([_tail_percentile(values[:, i], 0.84) for i in range(grid.size)])
    return PercentileBand(grid=grid, p16=p16, p84=p84, mean=values.mean(axis=0))
