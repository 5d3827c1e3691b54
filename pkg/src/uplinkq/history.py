"""Frame-level transmission history and backward-interval aggregates.

The log records, for every transmitted frame, its size ``s_m`` (Mb) and its
transmission duration ``t_m`` (s). Durations are laid end to end on a
"transmission clock", so the log ends at ``T_end = sum(t)``. Inside a frame
the bytes are assumed to flow at the constant rate ``s_m / t_m``.

``aggregate_backward_interval(log, j, tau)`` returns the megabits moved in
``(T_end - (j+1) tau, T_end - j tau]``. :func:`build_window` evaluates the
same quantity for ``j = 0..J-1`` by differencing the piecewise-linear
cumulative curve, which is what the controllers call per frame.
"""

from __future__ import annotations

import csv

import numpy as np


class InsufficientHistory(ValueError):
    """Not enough logged transmission time for the requested intervals."""


class HistoryLog:
    """Append-only record of frame sizes and durations."""

    def __init__(self, sizes=(), durations=()):
        self._n = 0
        self._cap = 1024
        self._s = np.empty(self._cap)
        self._t = np.empty(self._cap)
        # prefix sums with a leading zero: _ends[m] = t_0 + ... + t_{m-1}
        self._ends = np.zeros(self._cap + 1)
        self._mass = np.zeros(self._cap + 1)
        sizes, durations = list(sizes), list(durations)
        if len(sizes) != len(durations):
            raise ValueError("sizes and durations differ in length")
        for s, t in zip(sizes, durations):
            self.append(s, t)

    def __len__(self):
        return self._n

    def __repr__(self):
        return f"HistoryLog(n={self._n}, span={self.span:.6g}s)"

    @property
    def sizes(self) -> np.ndarray:
        return self._s[: self._n]

    @property
    def durations(self) -> np.ndarray:
        return self._t[: self._n]

    @property
    def ends(self) -> np.ndarray:
        """Frame end times on the transmission clock, with a leading 0."""
        return self._ends[: self._n + 1]

    @property
    def cumulative_sizes(self) -> np.ndarray:
        return self._mass[: self._n + 1]

    @property
    def span(self) -> float:
        return float(self._ends[self._n])

    def _grow(self):
        cap = self._cap * 2
        for name in ("_s", "_t"):
            arr = np.empty(cap)
            arr[: self._n] = getattr(self, name)[: self._n]
            setattr(self, name, arr)
        for name in ("_ends", "_mass"):
            arr = np.zeros(cap + 1)
            arr[: self._n + 1] = getattr(self, name)[: self._n + 1]
            setattr(self, name, arr)
        self._cap = cap

    def append(self, size: float, duration: float) -> "HistoryLog":
        if not size > 0:
            raise ValueError(f"frame size must be positive, got {size}")
        if not duration > 0:
            raise ValueError(f"frame duration must be positive, got {duration}")
        if self._n == self._cap:
            self._grow()
        n = self._n
        self._s[n] = size
        self._t[n] = duration
        self._ends[n + 1] = self._ends[n] + duration
        self._mass[n + 1] = self._mass[n] + size
        self._n = n + 1
        return self

    def copy(self) -> "HistoryLog":
        return HistoryLog(self.sizes.tolist(), self.durations.tolist())

    def recent_rate(self, k: int) -> float:
        """Sum of the last ``k`` sizes over the sum of their durations."""
        n = self._n
        lo = max(0, n - k)
        return float((self._mass[n] - self._mass[lo]) / (self._ends[n] - self._ends[lo]))


def aggregate_backward_interval(log: HistoryLog, j: int, tau: float) -> float:
    """Megabits moved in the ``j``-th backward interval of length ``tau``.

    Boundary frames are split pro rata. ``U`` is the frame holding the upper
    boundary and ``L`` the frame holding the lower one; every frame strictly
    between them counts in full.
    """
    if j < 0:
        raise ValueError("j must be non-negative")
    if not tau > 0:
        raise ValueError("tau must be positive")
    s = log.sizes.tolist()
    t = log.durations.tolist()
    k = len(t) - 1
    # tail[u] = t_u + ... + t_k ; tail[k+1] = 0
    tail = [0.0] * (k + 2)
    for m in range(k, -1, -1):
        tail[m] = tail[m + 1] + t[m]
    hi = j * tau
    lo = (j + 1) * tau
    # availability is judged on the forward-summed span, as in window_values
    if k < 0 or log.span < lo:
        raise InsufficientHistory(f"history spans {log.span:.6g}s, need {lo:.6g}s")

    # U = max{u : tail[u] >= j*tau}; tail is non-increasing in u.
    U = max(u for u in range(k + 1) if tail[u] >= hi)
    res_u = tail[U] - hi
    if res_u >= tau:
        return tau / t[U] * s[U]
    # the two sums can disagree in the last bit; clamp L to the oldest frame then
    L = max((l for l in range(U + 1) if tail[l] >= lo), default=0)
    res_l = lo - tail[L + 1]
    inner = sum(s[L + 1 : U])
    return res_u / t[U] * s[U] + res_l / t[L] * s[L] + inner


_STEPS = np.arange(4097, dtype=float)


def _steps(n: int) -> np.ndarray:
    global _STEPS
    if n > _STEPS.size:
        _STEPS = np.arange(2 * n, dtype=float)
    return _STEPS[:n]


def interval_count(span: float, tau: float) -> int:
    """Largest M with ``M * tau <= span`` (floor of the quotient, corrected for rounding)."""
    m = int(span / tau)
    while m > 0 and m * tau > span:
        m -= 1
    return m


def window_values(log: HistoryLog, tau: float, J: int) -> np.ndarray:
    """Backward interval aggregates, most recent first; may be shorter than J."""
    n = log._n
    t_end = log._ends[n]
    n_int = min(J, interval_count(t_end, tau))
    if n_int <= 0:
        return np.empty(0)
    ends = log._ends[: n + 1]
    first = int(ends.searchsorted(t_end - n_int * tau)) - 1
    if first < 0:
        first = 0
    marks = t_end - tau * _steps(n_int + 1)
    vals = np.interp(marks, ends[first:], log._mass[first : n + 1])
    out = vals[:-1] - vals[1:]
    np.maximum(out, 0.0, out=out)
    return out


class BackwardWindow:
    __slots__ = ("tau", "values", "J")

    def __init__(self, tau: float, values: np.ndarray, J: int):
        self.tau = tau
        self.values = values
        self.J = J

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return f"BackwardWindow(tau={self.tau:.6g}, len={len(self.values)}, J={self.J})"


def build_window(log: HistoryLog, tau: float, J: int) -> BackwardWindow:
    if not tau > 0:
        raise ValueError("tau must be positive")
    if J < 2:
        raise ValueError("J must be at least 2")
    values = window_values(log, tau, J)
    if len(values) < 2:
        raise InsufficientHistory(
            f"only {len(values)} interval(s) of {tau:.6g}s fit in {log.span:.6g}s of history"
        )
    return BackwardWindow(tau, values, J)


def dump_window(window: BackwardWindow, path) -> None:
    """Write ``j,value`` pairs for inspection."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "value"])
        for j, v in enumerate(window.values.tolist()):
            w.writerow([j, repr(v)])
