"""Frame transmission over a trace: one frame at a time, never aborted."""

from __future__ import annotations

from dataclasses import dataclass

from .trace import NetworkTrace, TraceExhausted

__all__ = ["TransmissionResult", "TraceExhausted", "transmit"]


@dataclass(frozen=True)
class TransmissionResult:
    start: float
    size: float
    finish_time: float

    @property
    def duration(self) -> float:
        return self.finish_time - self.start

    @property
    def achieved_throughput(self) -> float:
        return self.size / self.duration


def transmit(trace: NetworkTrace, start: float, size: float) -> TransmissionResult:
    """Send ``size`` Mb starting at ``start``; raises :class:`TraceExhausted`
    when the trace cannot carry it."""
    if not size > 0:
        raise ValueError(f"size must be positive, got {size}")
    if not start >= 0:
        raise ValueError(f"start must be non-negative, got {start}")
    if start > trace.duration:
        raise TraceExhausted(f"start {start} is past the end of the trace")
    target = trace.cumulative(start) + size
    finish = trace.time_to_reach(target)
    if finish <= start:
        # Only reachable through float round-off on a vanishing size.
        raise ValueError("transmission has zero duration")
    return TransmissionResult(start, size, finish)
