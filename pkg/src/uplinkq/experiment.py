"""Parameter sweeps over t_B or s_min for a set of controllers."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Sequence, TextIO

from .controllers import DEFAULT_CONTROLLERS, ControllerConfig, parse_controller
from .streamer import SimulationConfig, run
from .trace import NetworkTrace, generate_trace, preset_spec, read_trace_file

AXES = ("t_B", "s_min")
TABLE_COLUMNS = ("controller", "axis", "value", "loss_rate", "avg_bitrate", "late_count", "skipped_count")

DEFAULT_T_B_VALUES = tuple(k / 60 for k in range(1, 7))
DEFAULT_S_MIN_VALUES = (0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4)


@dataclass(frozen=True)
class ExperimentSpec:
    network: str = "network1"
    trace_path: str | None = None
    seed: int = 0
    controllers: tuple[str, ...] = DEFAULT_CONTROLLERS
    axis: str = "t_B"
    values: tuple[float, ...] = DEFAULT_T_B_VALUES
    fps: float = 60.0
    epsilon: float = 0.05
    training_seconds: float = 120.0
    measured_seconds: float = 300.0
    s_min: float = 0.05
    t_B: float = 1 / 60
    J: int = 600
    alpha: float = 1.0
    cond_tolerance: float = 0.05
    max_t_B: float = 0.1
    trace_margin: float = 60.0

    def __post_init__(self):
        object.__setattr__(self, "controllers", tuple(self.controllers))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.axis not in AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; choose from {AXES}")
        if not self.values:
            raise ValueError("sweep needs at least one axis value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("axis values must be strictly increasing")
        if self.axis == "t_B":
            if self.values[0] < 0:
                raise ValueError("t_B values must be non-negative")
            if self.values[-1] > self.max_t_B + 1e-12:
                raise ValueError(f"t_B values must not exceed {self.max_t_B} s")
        elif self.values[0] <= 0:
            raise ValueError("s_min values must be positive")
        for name in self.controllers:
            parse_controller(name)

    @property
    def label(self) -> str:
        if self.trace_path:
            return Path(self.trace_path).stem
        return self.network

    def controller_configs(self, axis_value: float) -> list[ControllerConfig]:
        s_min = axis_value if self.axis == "s_min" else self.s_min
        return [
            parse_controller(name, epsilon=self.epsilon, J=self.J, alpha=self.alpha,
                             s_min=s_min, cond_tolerance=self.cond_tolerance)
            for name in self.controllers
        ]

    def sim_config(self, axis_value: float) -> SimulationConfig:
        t_B = axis_value if self.axis == "t_B" else self.t_B
        return SimulationConfig(t_B=t_B, fps=self.fps, training_seconds=self.training_seconds,
                                measured_seconds=self.measured_seconds, seed=self.seed)

    def load_trace(self) -> NetworkTrace:
        if self.trace_path:
            return read_trace_file(self.trace_path)
        duration = self.training_seconds + self.measured_seconds + self.trace_margin
        return generate_trace(preset_spec(self.network, seed=self.seed, duration=duration))


@dataclass(frozen=True)
class SweepRow:
    controller: str
    axis: str
    value: float
    loss_rate: float
    avg_bitrate: float
    late_count: int
    skipped_count: int


_worker_trace: NetworkTrace | None = None


def _init_worker(trace):
    global _worker_trace
    _worker_trace = trace


def _run_cell(args) -> SweepRow:
    cfg, sim, axis, value = args
    rep = run(_worker_trace, cfg, sim)
    return SweepRow(cfg.label, axis, value, rep.loss_rate, rep.avg_bitrate,
                    rep.late_count, rep.skipped_count)


def run_sweep(spec: ExperimentSpec, trace: NetworkTrace | None = None, jobs: int = 1) -> list[SweepRow]:
    """One row per (controller, axis value), ordered controller-major."""
    trace = trace if trace is not None else spec.load_trace()
    cells = []
    for ci in range(len(spec.controllers)):
        for v in spec.values:
            cfg = spec.controller_configs(v)[ci]
            cells.append((cfg, spec.sim_config(v), spec.axis, v))
    if jobs <= 1:
        _init_worker(trace)
        return [_run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(trace,)) as ex:
        return list(ex.map(_run_cell, cells))


def write_table(rows: Sequence[SweepRow], sink: TextIO) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for r in rows:
        w.writerow([r.controller, r.axis, repr(r.value), repr(r.loss_rate), repr(r.avg_bitrate),
                    r.late_count, r.skipped_count])


def table_to_string(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    write_table(rows, buf)
    return buf.getvalue()


def read_table(source: TextIO) -> list[SweepRow]:
    reader = csv.DictReader(source)
    if reader.fieldnames is None or tuple(reader.fieldnames) != TABLE_COLUMNS:
        raise ValueError(f"expected columns {','.join(TABLE_COLUMNS)}")
    return [
        SweepRow(row["controller"], row["axis"], float(row["value"]), float(row["loss_rate"]),
                 float(row["avg_bitrate"]), int(row["late_count"]), int(row["skipped_count"]))
        for row in reader
    ]


# -- flat key = value config files -------------------------------------------

_LIST_KEYS = {"controllers", "values"}


def parse_config_text(text: str) -> dict:
    """``key = value`` per line, ``#`` comments, lists comma-separated."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key in _LIST_KEYS:
            out[key] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            out[key] = value
    return out


def spec_from_mapping(values: dict) -> ExperimentSpec:
    kinds = {f.name: f.type for f in fields(ExperimentSpec)}
    kwargs = {}
    for key, raw in values.items():
        if raw is None:
            continue
        if key not in kinds:
            raise ValueError(f"unknown experiment key {key!r}")
        kind = str(kinds[key])
        if key == "controllers":
            kwargs[key] = tuple(raw)
        elif key == "values":
            kwargs[key] = tuple(parse_number(v) for v in raw)
        elif kind.startswith("int"):
            kwargs[key] = int(raw)
        elif kind.startswith("float"):
            kwargs[key] = parse_number(raw)
        else:
            kwargs[key] = raw
    if "values" not in kwargs and kwargs.get("axis") == "s_min":
        kwargs["values"] = DEFAULT_S_MIN_VALUES
    return ExperimentSpec(**kwargs)


def parse_number(text) -> float:
    """Floats, plus simple fractions such as ``1/60``."""
    if isinstance(text, (int, float)):
        return float(text)
    text = str(text).strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"not a finite number: {text!r}")
    return value


def with_axis(spec: ExperimentSpec, axis: str, values: Sequence[float] | None = None) -> ExperimentSpec:
    if values is None:
        values = DEFAULT_T_B_VALUES if axis == "t_B" else DEFAULT_S_MIN_VALUES
    return replace(spec, axis=axis, values=tuple(values))
