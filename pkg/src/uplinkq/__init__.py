"""Trace-driven simulator of live-video uplink frame sizing."""

from .channel import TransmissionResult, transmit
from .controllers import (
    ControllerConfig,
    SizeDecision,
    SizingContext,
    am_size,
    conditional_quantile_size,
    decide,
    marginal_quantile_size,
    parse_controller,
    quantile,
)
from .history import BackwardWindow, HistoryLog, InsufficientHistory, aggregate_backward_interval, build_window
from .streamer import FrameOutcome, SimulationConfig, SimulationReport, deadline_check, run
from .trace import (
    NetworkTrace,
    PacketEvent,
    TraceError,
    TraceExhausted,
    TraceGenSpec,
    generate_trace,
    load_trace,
    preset_spec,
)

__version__ = "0.1.0"
