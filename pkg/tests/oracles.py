"""Independent reference computations used by the tests."""

import math

import numpy as np


def slice_backward_interval(sizes, durations, j, tau, slices=10_000, resolution=1e-8):
    """Megabits in (T_end - (j+1) tau, T_end - j tau] by cutting every frame
    into equal slices and binning each slice's midpoint.

    Each frame gets at least ``slices`` pieces, and more when it is long
    compared with ``tau`` so a boundary slice stays below ``resolution`` of
    the interval. Midpoints are counted with floor arithmetic rather than
    materialised, which keeps billions of slices cheap.
    """
    sizes = np.asarray(sizes, float)
    durations = np.asarray(durations, float)
    starts = np.concatenate(([0.0], np.cumsum(durations)[:-1]))
    t_end = math.fsum(durations)
    lo, hi = t_end - (j + 1) * tau, t_end - j * tau
    total = 0.0
    for s0, d, s in zip(starts, durations, sizes):
        if s0 + d <= lo or s0 >= hi:
            continue
        n = max(slices, math.ceil(d / (tau * resolution)))
        w = d / n
        # slice k has midpoint s0 + (k + 0.5) w; keep those in (lo, hi]
        k_min = max(0, math.floor((lo - s0) / w - 0.5) + 1)
        k_max = min(n - 1, math.floor((hi - s0) / w - 0.5))
        if k_max >= k_min:
            total += (k_max - k_min + 1) * (s / n)
    return total


def uniform_integral(sizes, durations, a, b):
    """Exact megabits moved in [a, b] on the transmission clock."""
    sizes = np.asarray(sizes, float)
    durations = np.asarray(durations, float)
    starts = np.concatenate(([0.0], np.cumsum(durations)[:-1]))
    ends = starts + durations
    overlap = np.clip(np.minimum(ends, b) - np.maximum(starts, a), 0.0, None)
    return float(np.sum(overlap / durations * sizes))


def reference_quantile(values, gamma):
    """numpy's default ("linear", Hyndman-Fan type 7)."""
    return float(np.quantile(np.asarray(values, float), gamma))


def brute_force_finish(trace, start, size, tol=1e-12):
    """Bisection on the cumulative curve for the earliest finish time."""
    base = trace.cumulative(start)
    lo, hi = start, trace.duration
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if trace.cumulative(mid) - base >= size:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    return hi
