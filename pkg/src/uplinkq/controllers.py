"""Frame-size controllers.

Every controller maps a :class:`SizingContext` (buffer time, time left until
the next frame is generated, and the history log) to a frame size in Mb.

* ``min-size``: always ``s_min``.
* ``am``: time-weighted mean throughput of the last ``K`` frames, scaled by
  the deadline budget.
* ``marginal-quantile``: the ``epsilon`` quantile of the backward window.
* ``conditional-quantile``: the ``epsilon`` quantile of the values that
  followed past intervals resembling the most recent one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .history import HistoryLog, window_values

STRATEGIES = ("min-size", "am", "marginal-quantile", "conditional-quantile")


@dataclass(frozen=True)
class ControllerConfig:
    strategy: str = "conditional-quantile"
    epsilon: float = 0.05
    J: int = 600
    K: int = 16
    alpha: float = 1.0
    s_min: float = 0.05
    cond_tolerance: float = 0.05
    # "relative": |s[n] - s[0]| <= tol * s[0]; "absolute": <= tol Mb
    cond_mode: str = "relative"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.s_min > 0:
            raise ValueError("s_min must be positive")
        if self.J < 2:
            raise ValueError("J must be at least 2")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if not self.cond_tolerance > 0:
            raise ValueError("cond_tolerance must be positive")
        if self.cond_mode not in ("relative", "absolute"):
            raise ValueError("cond_mode must be 'relative' or 'absolute'")

    @property
    def label(self) -> str:
        if self.strategy == "am":
            return f"am-{self.K}"
        return {
            "min-size": "min-size",
            "marginal-quantile": "marginal",
            "conditional-quantile": "conditional",
        }[self.strategy]

    def with_(self, **changes) -> "ControllerConfig":
        return replace(self, **changes)


def parse_controller(name: str, **params) -> ControllerConfig:
    """Build a config from a short label: ``min-size``, ``am-16``,
    ``marginal``, ``conditional`` or a full strategy name."""
    key = name.strip().lower()
    aliases = {"marginal": "marginal-quantile", "conditional": "conditional-quantile"}
    if key.startswith("am-") or key.startswith("am:"):
        try:
            k = int(key[3:])
        except ValueError:
            raise ValueError(f"unknown controller {name!r}") from None
        return ControllerConfig(strategy="am", K=k, **params)
    key = aliases.get(key, key)
    if key not in STRATEGIES:
        raise ValueError(f"unknown controller {name!r}")
    return ControllerConfig(strategy=key, **params)


DEFAULT_CONTROLLERS = ("min-size", "am-5", "am-16", "am-128", "marginal", "conditional")


@dataclass
class SizingContext:
    t_b: float
    T: float
    history: HistoryLog
    fps: float = 60.0

    def __post_init__(self):
        if self.t_b < 0 or self.T < 0 or not self.t_b + self.T > 0:
            raise ValueError(f"invalid budget t_b={self.t_b}, T={self.T}")


@dataclass(frozen=True)
class SizeDecision:
    size: float
    fallback_used: bool = False
    window_len: int = 0
    cond_len: int = 0


def quantile(values, gamma: float) -> float:
    """Linear-interpolation quantile (Hyndman-Fan type 7)."""
    v = np.sort(np.asarray(values, dtype=float), axis=None)
    n = v.size
    if n == 0:
        raise ValueError("quantile of empty sequence")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    pos = (n - 1) * gamma
    lo = math.floor(pos)
    if lo >= n - 1:
        return float(v[n - 1])
    frac = pos - lo
    a = float(v[lo])
    b = float(v[lo + 1])
    # same lerp form as numpy so results agree to the last bit
    diff = b - a
    return b - diff * (1.0 - frac) if frac >= 0.5 else a + diff * frac


def budget(ctx: SizingContext, alpha: float) -> float:
    return alpha * ctx.t_b + ctx.T


def am_size(ctx: SizingContext, K: int, s_min: float = 0.0, alpha: float = 1.0) -> float:
    if len(ctx.history) == 0:
        return s_min
    rate = ctx.history.recent_rate(K)
    return max(s_min, rate * budget(ctx, alpha))


def conditioning_set(values: np.ndarray, tolerance: float, mode: str = "relative") -> np.ndarray:
    """Predecessors ``values[n-1]`` of entries ``values[n]`` (n >= 1) close to ``values[0]``."""
    ref = values[0]
    tol = tolerance * ref if (mode == "relative" and ref > 0) else tolerance
    mask = np.abs(values[1:] - ref) <= tol
    return values[:-1][mask]


def marginal_quantile_size(ctx: SizingContext, cfg: ControllerConfig) -> SizeDecision:
    vals = window_values(ctx.history, budget(ctx, cfg.alpha), cfg.J)
    if vals.size < 2:
        return SizeDecision(cfg.s_min, fallback_used=True, window_len=int(vals.size))
    q = quantile(vals, cfg.epsilon)
    return SizeDecision(max(cfg.s_min, q), window_len=int(vals.size), cond_len=int(vals.size))


def conditional_quantile_size(ctx: SizingContext, cfg: ControllerConfig) -> SizeDecision:
    vals = window_values(ctx.history, budget(ctx, cfg.alpha), cfg.J)
    if vals.size < 2:
        return SizeDecision(cfg.s_min, fallback_used=True, window_len=int(vals.size))
    cond = conditioning_set(vals, cfg.cond_tolerance, cfg.cond_mode)
    if cond.size == 0:
        q = quantile(vals[1:], cfg.epsilon)
        return SizeDecision(max(cfg.s_min, q), fallback_used=True, window_len=int(vals.size))
    q = quantile(cond, cfg.epsilon)
    return SizeDecision(max(cfg.s_min, q), window_len=int(vals.size), cond_len=int(cond.size))


def decide(cfg: ControllerConfig, ctx: SizingContext) -> SizeDecision:
    strategy = cfg.strategy
    if strategy == "conditional-quantile":
        return conditional_quantile_size(ctx, cfg)
    if strategy == "marginal-quantile":
        return marginal_quantile_size(ctx, cfg)
    if strategy == "am":
        if len(ctx.history) == 0:
            return SizeDecision(cfg.s_min, fallback_used=True)
        return SizeDecision(am_size(ctx, cfg.K, cfg.s_min, cfg.alpha), window_len=min(cfg.K, len(ctx.history)))
    return SizeDecision(cfg.s_min)
