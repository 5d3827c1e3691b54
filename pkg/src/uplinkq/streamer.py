"""Discrete-event uploader loop.

Frames are generated at ``i / fps``. One frame is in flight at a time; its
size comes from a controller and its transmission time from the trace. A
frame is lost when it is skipped (never sent) or delivered after its
deadline.

Two frame-selection policies are available:

``buffered`` (default)
    Frames are sent in generation order. Frame ``i`` must be delivered by
    ``t_g(i+1) + t_B``; a frame whose deadline has passed by the time the
    uploader is free is skipped. At start time ``t`` the budget splits into
    ``T = max(0, t_g(i+1) - t)`` and ``t_b = clamp(t_B - (t - t_g(i) - 1/fps), 0, t_B)``.

``newest``
    The uploader always picks the newest generated frame and skips every
    older unsent one. ``t_b`` evolves as ``clamp(t_b + 1/fps - t_i, 0, t_B)``
    and is reset by the same clamp formula after a skip.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import TextIO

from .channel import transmit
from .controllers import ControllerConfig, SizingContext, decide
from .history import HistoryLog
from .trace import NetworkTrace, TraceExhausted

ON_TIME = "sent-on-time"
LATE = "sent-late"
SKIPPED = "skipped"

LEDGER_COLUMNS = ("index", "gen_time", "status", "size_mb", "start", "finish", "deadline")


@dataclass(frozen=True)
class SimulationConfig:
    t_B: float = 1 / 60
    fps: float = 60.0
    training_seconds: float = 120.0
    measured_seconds: float = 300.0
    seed: int = 0
    selection: str = "buffered"
    buffer_rule: str = "deadline"
    # finish times within this many seconds past the deadline still count as on time
    late_tolerance: float = 1e-9

    def __post_init__(self):
        if self.t_B < 0:
            raise ValueError("t_B must be non-negative")
        if not self.fps > 0:
            raise ValueError("fps must be positive")
        if self.training_seconds < 0 or not self.measured_seconds > 0:
            raise ValueError("training must be >= 0 and measured period > 0")
        if self.selection not in ("buffered", "newest"):
            raise ValueError("selection must be 'buffered' or 'newest'")
        if self.buffer_rule not in ("deadline", "incremental"):
            raise ValueError("buffer_rule must be 'deadline' or 'incremental'")

    @property
    def total_seconds(self) -> float:
        return self.training_seconds + self.measured_seconds


@dataclass
class FrameOutcome:
    index: int
    gen_time: float
    status: str
    size: float = 0.0
    start: float = math.nan
    finish: float = math.nan
    deadline: float = math.nan
    t_b: float = math.nan
    T: float = math.nan
    fallback: bool = False


@dataclass
class SimulationReport:
    outcomes: list[FrameOutcome]
    loss_rate: float
    avg_bitrate: float
    measured_period: float
    training_period: float
    generated: int
    on_time_count: int
    late_count: int
    skipped_count: int
    in_flight: int = 0
    truncated: bool = False
    buffer_min: float = math.nan
    buffer_max: float = math.nan
    fallback_count: int = 0
    config: SimulationConfig = field(default_factory=SimulationConfig)

    @property
    def sent_count(self) -> int:
        return self.on_time_count + self.late_count

    @property
    def never_sent_rate(self) -> float:
        return self.skipped_count / self.generated if self.generated else 0.0

    @property
    def late_rate(self) -> float:
        return self.late_count / self.generated if self.generated else 0.0


def deadline_check(start: float, size: float, achieved_C: float, gen_next: float, t_b: float,
                   tolerance: float = 0.0) -> str:
    """Late iff ``start + size / C > gen_next + t_b`` (equality is on time)."""
    if start + size / achieved_C > gen_next + t_b + tolerance:
        return LATE
    return ON_TIME


def _clamp(x: float, hi: float) -> float:
    return 0.0 if x < 0.0 else (hi if x > hi else x)


def buffer_after_wait(t_B: float, start: float, gen_time: float, fps: float) -> float:
    """Buffer left for a frame generated at ``gen_time`` whose send starts at ``start``."""
    return _clamp(t_B - (start - gen_time - 1.0 / fps), t_B)


def buffer_after_send(t_b: float, duration: float, t_B: float, fps: float) -> float:
    return _clamp(t_b + (1.0 / fps - duration), t_B)


def _newest_generated(clock: float, fps: float) -> int:
    n = math.floor(clock * fps)
    if (n + 1) / fps <= clock:
        n += 1
    return n


def run(trace: NetworkTrace, cfg: ControllerConfig, sim: SimulationConfig | None = None,
        history: HistoryLog | None = None) -> SimulationReport:
    sim = sim or SimulationConfig()
    fps = sim.fps
    t_B = sim.t_B
    tol = sim.late_tolerance
    newest_mode = sim.selection == "newest"
    incremental = sim.buffer_rule == "incremental"
    skipped_run = False
    history = history if history is not None else HistoryLog()
    score_lo = sim.training_seconds
    score_hi = sim.total_seconds
    n_frames = math.ceil(score_hi * fps - 1e-9)

    scored: list[FrameOutcome] = []
    clock = 0.0
    i = 0
    t_b = t_B
    b_min, b_max = math.inf, -math.inf
    truncated = False
    in_flight = 0
    fallbacks = 0

    def record(out: FrameOutcome):
        if score_lo <= out.gen_time < score_hi:
            scored.append(out)

    while i < n_frames:
        gen_i = i / fps
        if clock < gen_i:
            clock = gen_i

        if newest_mode:
            newest = min(_newest_generated(clock, fps), n_frames - 1)
            if newest > i:
                while i < newest:
                    record(FrameOutcome(i, i / fps, SKIPPED))
                    i += 1
                gen_i = i / fps
                t_b = buffer_after_wait(t_B, clock, gen_i, fps)
            gen_next = (i + 1) / fps
            T = max(0.0, gen_next - clock)
            if T == 0.0 and t_b == 0.0:
                # only reachable on the last frame: nothing newer to switch to
                record(FrameOutcome(i, gen_i, SKIPPED))
                i += 1
                continue
        else:
            gen_next = (i + 1) / fps
            deadline = gen_next + t_B
            if clock >= deadline:
                record(FrameOutcome(i, gen_i, SKIPPED))
                i += 1
                continue
            T = gen_next - clock
            if T < 0.0:
                T = 0.0
            if incremental:
                if T == 0.0 and t_b == 0.0:
                    record(FrameOutcome(i, gen_i, SKIPPED))
                    i += 1
                    skipped_run = True
                    continue
                if skipped_run:
                    t_b = buffer_after_wait(t_B, clock, gen_i, fps)
                    skipped_run = False
            else:
                t_b = buffer_after_wait(t_B, clock, gen_i, fps)
                if T == 0.0 and t_b == 0.0:
                    record(FrameOutcome(i, gen_i, SKIPPED))
                    i += 1
                    continue

        if t_b < b_min:
            b_min = t_b
        if t_b > b_max:
            b_max = t_b

        decision = decide(cfg, SizingContext(t_b, T, history, fps))
        if decision.fallback_used:
            fallbacks += 1
        size = decision.size
        try:
            res = transmit(trace, clock, size)
        except TraceExhausted:
            truncated = True
            in_flight = 1 if score_lo <= gen_i < score_hi else 0
            break
        duration = res.finish_time - clock
        # Budget ends at start + T + t_b; this equals t_g(i+1) + t_b whenever T > 0.
        gen_ref = gen_next if gen_next > clock else clock
        status = deadline_check(clock, size, size / duration, gen_ref, t_b, tol)
        record(FrameOutcome(i, gen_i, status, size, clock, res.finish_time,
                            gen_ref + t_b, t_b, T, decision.fallback_used))
        history.append(size, duration)
        if newest_mode or incremental:
            t_b = buffer_after_send(t_b, duration, t_B, fps)
        clock = res.finish_time
        i += 1

    if truncated:
        covered = max(0.0, min(sim.measured_seconds, i / fps - score_lo))
    else:
        covered = sim.measured_seconds
    return summarize(scored, sim, covered, truncated=truncated, in_flight=in_flight,
                     buffer_range=(b_min, b_max), fallback_count=fallbacks)


def summarize(outcomes: list[FrameOutcome], sim: SimulationConfig, measured_period: float,
              truncated: bool = False, in_flight: int = 0, buffer_range=(math.nan, math.nan),
              fallback_count: int = 0) -> SimulationReport:
    on_time = late = skipped = 0
    sent_mb = 0.0
    for o in outcomes:
        if o.status == ON_TIME:
            on_time += 1
            sent_mb += o.size
        elif o.status == LATE:
            late += 1
            sent_mb += o.size
        else:
            skipped += 1
    generated = len(outcomes) + in_flight
    loss = (late + skipped) / generated if generated else 0.0
    rate = sent_mb / measured_period if measured_period > 0 else 0.0
    return SimulationReport(
        outcomes=outcomes,
        loss_rate=loss,
        avg_bitrate=rate,
        measured_period=measured_period,
        training_period=sim.training_seconds,
        generated=generated,
        on_time_count=on_time,
        late_count=late,
        skipped_count=skipped,
        in_flight=in_flight,
        truncated=truncated,
        buffer_min=buffer_range[0],
        buffer_max=buffer_range[1],
        fallback_count=fallback_count,
        config=sim,
    )


def check_report(report: SimulationReport, rel: float = 1e-12) -> list[str]:
    """Recompute the report's invariants from its ledger; returns violations."""
    problems = []
    sim = report.config
    outs = report.outcomes
    counts = {ON_TIME: 0, LATE: 0, SKIPPED: 0}
    for o in outs:
        counts[o.status] += 1
    if report.generated != counts[ON_TIME] + counts[LATE] + counts[SKIPPED] + report.in_flight:
        problems.append("frame conservation violated")
    if report.in_flight > 1:
        problems.append("more than one frame in flight")
    if not report.truncated:
        expected = math.ceil(sim.total_seconds * sim.fps - 1e-9) - math.ceil(sim.training_seconds * sim.fps - 1e-9)
        if report.generated != expected:
            problems.append(f"generated {report.generated} frames, expected {expected}")
    idx = [o.index for o in outs]
    if idx != sorted(set(idx)) or (idx and idx != list(range(idx[0], idx[0] + len(idx)))):
        problems.append("ledger indices not contiguous")
    sent = [o for o in outs if o.status != SKIPPED]
    for a, b in zip(sent, sent[1:]):
        if not b.start > a.start:
            problems.append(f"start times not increasing at frame {b.index}")
            break
        if b.start < a.finish:
            problems.append(f"transmissions overlap at frame {b.index}")
            break
    for o in sent:
        if not (0.0 <= o.t_b <= sim.t_B):
            problems.append(f"buffer {o.t_b} out of [0, {sim.t_B}] at frame {o.index}")
            break
        if (o.status == LATE) != (o.finish > o.deadline + sim.late_tolerance):
            problems.append(f"status inconsistent with deadline at frame {o.index}")
            break
        if o.size <= 0:
            problems.append(f"non-positive size at frame {o.index}")
            break
    if not math.isnan(report.buffer_min) and not (0.0 <= report.buffer_min <= report.buffer_max <= sim.t_B):
        problems.append("buffer left [0, t_B] at some decision")
    if report.generated:
        loss = (counts[LATE] + counts[SKIPPED]) / report.generated
        if abs(loss - report.loss_rate) > rel:
            problems.append("loss rate does not match ledger")
    total = math.fsum(o.size for o in sent)
    if report.measured_period > 0:
        rate = total / report.measured_period
        if abs(rate - report.avg_bitrate) > rel * max(1.0, rate):
            problems.append("average bitrate does not match ledger")
    return problems


def write_ledger(report: SimulationReport, sink: TextIO) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(LEDGER_COLUMNS)
    for o in report.outcomes:
        w.writerow([o.index, repr(o.gen_time), o.status, repr(o.size),
                    repr(o.start), repr(o.finish), repr(o.deadline)])
