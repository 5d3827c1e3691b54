"""Packet-level throughput traces.

A trace is an ordered list of ``(timestamp, payload)`` events, timestamps in
seconds and payloads in megabits. The channel model reads it through
:meth:`NetworkTrace.cumulative`, a piecewise-linear curve of megabits
delivered by time ``t``: the payload of each event is spread uniformly over
the gap since the previous event. Events stamped at exactly ``t=0`` have an
empty gap and are folded into the first later timestamp.
"""

from __future__ import annotations

import io
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

BYTES_TO_MEGABITS = 8.0 / 1e6
SORT_JITTER = 1e-6


class TraceError(ValueError):
    """Raised for malformed trace input."""


class TraceExhausted(Exception):
    """The trace does not hold enough capacity to finish a transmission."""


@dataclass(frozen=True)
class PacketEvent:
    timestamp: float
    payload: float

    def __post_init__(self):
        if not self.timestamp >= 0:
            raise TraceError(f"negative timestamp {self.timestamp}")
        if not self.payload > 0:
            raise TraceError(f"non-positive payload {self.payload}")


class NetworkTrace:
    """Immutable packet trace with a fluid cumulative-capacity view."""

    def __init__(self, timestamps, payloads, duration: float | None = None):
        ts = np.asarray(timestamps, dtype=float).copy()
        ps = np.asarray(payloads, dtype=float).copy()
        if ts.ndim != 1 or ts.shape != ps.shape:
            raise TraceError("timestamps and payloads must be 1-d and equal length")
        if ts.size == 0:
            raise TraceError("empty trace")
        if np.any(ts < 0):
            raise TraceError("negative timestamp")
        if np.any(ps <= 0):
            raise TraceError("non-positive payload")
        if np.any(np.diff(ts) < 0):
            raise TraceError("timestamps not sorted")
        last = float(ts[-1])
        if duration is None:
            duration = last
        if duration < last:
            raise TraceError(f"duration {duration} precedes last event {last}")
        ts.flags.writeable = False
        ps.flags.writeable = False
        self.timestamps = ts
        self.payloads = ps
        self.duration = float(duration)

        # Curve knots: (0, 0) then one knot per distinct positive timestamp.
        csum = np.cumsum(ps)
        keep = np.append(ts[1:] != ts[:-1], True) & (ts > 0)
        knot_t = np.concatenate(([0.0], ts[keep]))
        knot_c = np.concatenate(([0.0], csum[keep]))
        if knot_t.size < 2:
            raise TraceError("trace has no capacity after t=0")
        self._knot_t = knot_t
        self._knot_c = knot_c
        # Plain lists: bisect on them is much faster than on ndarrays.
        self._kt = knot_t.tolist()
        self._kc = knot_c.tolist()
        self.total = self._kc[-1]

    @classmethod
    def from_events(cls, events: Iterable[PacketEvent], duration: float | None = None):
        events = list(events)
        return cls([e.timestamp for e in events], [e.payload for e in events], duration)

    @property
    def events(self) -> list[PacketEvent]:
        return [PacketEvent(float(t), float(p)) for t, p in zip(self.timestamps, self.payloads)]

    def __len__(self):
        return self.timestamps.size

    def __eq__(self, other):
        if not isinstance(other, NetworkTrace):
            return NotImplemented
        return (
            self.duration == other.duration
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.payloads, other.payloads)
        )

    def mean_rate(self) -> float:
        """Average capacity in Mbps over the trace duration."""
        return self.total / self.duration

    def cumulative(self, t: float) -> float:
        """Megabits deliverable in ``[0, t]``."""
        if not 0.0 <= t <= self.duration:
            raise ValueError(f"t={t} outside [0, {self.duration}]")
        kt, kc = self._kt, self._kc
        k = bisect_right(kt, t)
        if k >= len(kt):
            return self.total
        t0, t1 = kt[k - 1], kt[k]
        c0, c1 = kc[k - 1], kc[k]
        return c0 + (c1 - c0) * (t - t0) / (t1 - t0)

    def cumulative_many(self, t) -> np.ndarray:
        """Vectorised :meth:`cumulative` (no range check)."""
        return np.interp(t, self._knot_t, self._knot_c)

    def time_to_reach(self, megabits: float) -> float:
        """Earliest time at which ``cumulative`` reaches ``megabits``."""
        if megabits > self.total:
            raise TraceExhausted(f"needs {megabits:.6g} Mb, trace holds {self.total:.6g} Mb")
        if megabits <= 0.0:
            return 0.0
        kt, kc = self._kt, self._kc
        k = bisect_left(kc, megabits)
        c0, c1 = kc[k - 1], kc[k]
        t0, t1 = kt[k - 1], kt[k]
        return t0 + (t1 - t0) * (megabits - c0) / (c1 - c0)


# -- CSV I/O -----------------------------------------------------------------


def load_trace(source: TextIO | str) -> NetworkTrace:
    """Parse ``timestamp_seconds,payload_bytes`` lines; a header line is optional."""
    if isinstance(source, str):
        source = io.StringIO(source)
    times: list[float] = []
    sizes: list[float] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise TraceError(f"malformed line {lineno}: {line!r}")
        try:
            t, b = float(parts[0]), float(parts[1])
        except ValueError:
            if lineno == 1 and not times:
                continue  # header
            raise TraceError(f"malformed line {lineno}: {line!r}") from None
        if not (math.isfinite(t) and math.isfinite(b)):
            raise TraceError(f"malformed line {lineno}: {line!r}")
        if t < 0:
            raise TraceError(f"negative timestamp at line {lineno}")
        if b <= 0:
            raise TraceError(f"non-positive payload at line {lineno}")
        if times and t < times[-1]:
            if times[-1] - t > SORT_JITTER:
                raise TraceError(f"timestamps not sorted at line {lineno}")
            t = times[-1]
        times.append(t)
        sizes.append(b * BYTES_TO_MEGABITS)
    if not times:
        raise TraceError("empty trace")
    return NetworkTrace(times, sizes)


def save_trace(trace: NetworkTrace, sink: TextIO) -> None:
    """Timestamps at nanosecond resolution, payload bytes to 9 significant digits."""
    sink.write("timestamp,payload_bytes\n")
    for t, p in zip(trace.timestamps.tolist(), trace.payloads.tolist()):
        sink.write(f"{t:.9f},{p / BYTES_TO_MEGABITS:.9g}\n")


def read_trace_file(path) -> NetworkTrace:
    with open(path, encoding="utf-8") as fh:
        return load_trace(fh)


def write_trace_file(trace: NetworkTrace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        save_trace(trace, fh)


# -- synthetic traces --------------------------------------------------------


@dataclass(frozen=True)
class TraceGenSpec:
    """Markov-modulated constant-packet process.

    The channel sits in one of ``state_rates`` (Mbps) for an exponentially
    distributed dwell, then jumps to a uniformly chosen *different* state.
    Within a state packets of ``packet_size`` Mb are spaced evenly so the
    instantaneous rate equals the state rate. ``jitter`` > 0 replaces the even
    spacing by gamma-distributed gaps with that coefficient of variation; the
    rate is then matched on average.
    """

    state_rates: tuple[float, ...]
    transition_dwell_mean: float = 0.2
    packet_size: float = 0.012
    seed: int = 0
    duration: float = 480.0
    mean_rate: float | None = None
    jitter: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "state_rates", tuple(float(r) for r in self.state_rates))
        if not self.state_rates:
            raise ValueError("need at least one state")
        if any(r <= 0 for r in self.state_rates):
            raise ValueError("state rates must be positive")
        if self.transition_dwell_mean <= 0:
            raise ValueError("dwell mean must be positive")
        if self.packet_size <= 0:
            raise ValueError("packet size must be positive")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.jitter < 0:
            raise ValueError("jitter must be non-negative")
        if self.mean_rate is None:
            object.__setattr__(self, "mean_rate", float(np.mean(self.state_rates)))

    @property
    def num_states(self) -> int:
        return len(self.state_rates)


# Rate levels relative to the preset mean (average exactly 1). Right-skewed:
# short high bursts on top of a floor that still carries a small frame per slot.
PRESET_LEVELS = (0.6, 0.7, 0.8, 1.0, 1.9)
PRESET_DWELL = 0.05

PRESETS = {
    "network1": 12.0,
    "network2": 8.0,
}


def preset_spec(name: str, seed: int = 0, duration: float = 480.0, **overrides) -> TraceGenSpec:
    try:
        mean = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    kwargs = dict(
        state_rates=tuple(mean * lv for lv in PRESET_LEVELS),
        transition_dwell_mean=PRESET_DWELL,
        packet_size=0.012,
        seed=seed,
        duration=duration,
        mean_rate=mean,
    )
    kwargs.update(overrides)
    return TraceGenSpec(**kwargs)


def _state_path(spec: TraceGenSpec, rng: np.random.Generator):
    """Return (change_times, rates) covering [0, duration]."""
    n = spec.num_states
    times = [0.0]
    states = [int(rng.integers(n))]
    t = 0.0
    while True:
        t += float(rng.exponential(spec.transition_dwell_mean))
        if t >= spec.duration:
            break
        nxt = int(rng.integers(n - 1)) if n > 1 else 0
        if n > 1 and nxt >= states[-1]:
            nxt += 1
        times.append(t)
        states.append(nxt)
    rates = np.asarray(spec.state_rates)[states]
    return np.asarray(times), rates


def generate_trace(spec: TraceGenSpec) -> NetworkTrace:
    rng = np.random.default_rng(spec.seed)
    change_t, rates = _state_path(spec, rng)
    bounds = np.append(change_t, spec.duration)
    cap = np.concatenate(([0.0], np.cumsum(rates * np.diff(bounds))))
    if spec.jitter > 0:
        shape = 1.0 / spec.jitter**2
        est = int(cap[-1] / spec.packet_size * 1.1) + 64
        gaps = rng.gamma(shape, 1.0 / shape, size=est)
        marks = spec.packet_size * np.cumsum(gaps)
        while marks[-1] < cap[-1]:
            more = rng.gamma(shape, 1.0 / shape, size=est)
            marks = np.concatenate((marks, marks[-1] + spec.packet_size * np.cumsum(more)))
        marks = marks[marks <= cap[-1]]
        n_packets = marks.size
    else:
        n_packets = int(math.floor(cap[-1] / spec.packet_size + 1e-9))
        marks = spec.packet_size * np.arange(1, n_packets + 1)
    if n_packets == 0:
        raise ValueError("duration too short for a single packet")
    stamps = np.interp(marks, cap, bounds)
    stamps = np.minimum(stamps, spec.duration)
    return NetworkTrace(stamps, np.full(n_packets, spec.packet_size), spec.duration)


def constant_trace(rate: float, duration: float, packet_size: float = 0.01) -> NetworkTrace:
    """Evenly spaced packets: a fluid channel of constant ``rate`` Mbps."""
    return generate_trace(
        TraceGenSpec(state_rates=(rate,), packet_size=packet_size, duration=duration, seed=0)
    )
