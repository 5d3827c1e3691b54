import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uplinkq.controllers import (
    DEFAULT_CONTROLLERS,
    ControllerConfig,
    SizingContext,
    am_size,
    conditional_quantile_size,
    conditioning_set,
    decide,
    marginal_quantile_size,
    parse_controller,
    quantile,
)
from uplinkq.history import HistoryLog

from oracles import reference_quantile


def aligned_log(values, tau):
    """A log whose backward window at ``tau`` is exactly ``values`` (most recent first)."""
    return HistoryLog(list(reversed(values)), [tau] * len(values))


@pytest.mark.parametrize("vals, g, expected", [
    ([1, 2, 3, 4, 5], 0.5, 3.0),
    ([0, 10], 0.25, 2.5),
    ([7], 0.0, 7.0),
    ([7], 0.37, 7.0),
    ([7], 1.0, 7.0),
])
def test_quantile_examples(vals, g, expected):
    assert quantile(vals, g) == expected


def test_quantile_errors():
    with pytest.raises(ValueError):
        quantile([], 0.5)
    with pytest.raises(ValueError):
        quantile([1.0], 1.5)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200), st.floats(0.0, 1.0))
def test_quantile_matches_numpy(vals, g):
    assert quantile(vals, g) == pytest.approx(reference_quantile(vals, g), rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50), st.floats(0, 1), st.floats(0, 1))
def test_quantile_monotone_and_bounded(vals, g1, g2):
    g1, g2 = sorted((g1, g2))
    q1, q2 = quantile(vals, g1), quantile(vals, g2)
    assert q1 <= q2
    assert min(vals) <= q1 and q2 <= max(vals)


def test_am_constant_rate():
    log = HistoryLog([0.1] * 20, [0.01] * 20)
    ctx = SizingContext(t_b=0.05, T=0.05, history=log)
    assert am_size(ctx, 16) == pytest.approx(1.0)


def test_am_time_weighted():
    log = HistoryLog([1.0, 2.0], [1.0, 3.0])
    assert log.recent_rate(2) == pytest.approx(0.75)
    ctx = SizingContext(t_b=0.0, T=1.0, history=log)
    assert am_size(ctx, 2) == pytest.approx(0.75)


def test_am_empty_history_returns_floor():
    ctx = SizingContext(t_b=0.01, T=0.01, history=HistoryLog())
    assert am_size(ctx, 5, s_min=0.05) == 0.05
    dec = decide(ControllerConfig(strategy="am", K=5), ctx)
    assert dec.size == 0.05 and dec.fallback_used


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.01, 5.0), min_size=1, max_size=40), st.floats(0.001, 0.1),
       st.integers(1, 50))
def test_am_equal_durations_is_plain_mean(sizes, dur, K):
    log = HistoryLog(sizes, [dur] * len(sizes))
    recent = np.asarray(sizes[-K:]) / dur
    assert log.recent_rate(K) == pytest.approx(float(np.mean(recent)), rel=1e-12)


def test_marginal_uniform_window():
    tau = 0.0625
    log = aligned_log([float(v) for v in range(1, 101)], tau)
    ctx = SizingContext(t_b=0.0, T=tau, history=log)
    cfg = ControllerConfig(strategy="marginal-quantile", J=100, s_min=0.01)
    assert marginal_quantile_size(ctx, cfg).size == pytest.approx(5.95)


def test_marginal_degenerate_and_fallback():
    tau = 0.0625
    ctx = SizingContext(t_b=0.0, T=tau, history=aligned_log([0.7] * 30, tau))
    cfg = ControllerConfig(strategy="marginal-quantile", s_min=0.01)
    assert marginal_quantile_size(ctx, cfg).size == pytest.approx(0.7)
    short = SizingContext(t_b=0.0, T=tau, history=HistoryLog([1.0], [0.07]))
    dec = marginal_quantile_size(short, cfg)
    assert dec.size == cfg.s_min and dec.fallback_used


def test_conditioning_set_example():
    vals = np.array([5, 3, 5, 9, 5, 1], dtype=float)
    assert conditioning_set(vals, 0.05).tolist() == [3.0, 9.0]


def test_conditional_example():
    tau = 0.0625
    ctx = SizingContext(t_b=0.0, T=tau, history=aligned_log([5, 3, 5, 9, 5, 1], tau))
    cfg = ControllerConfig(strategy="conditional-quantile", J=6, s_min=0.1)
    dec = conditional_quantile_size(ctx, cfg)
    assert dec.size == pytest.approx(3.3)
    assert not dec.fallback_used and dec.cond_len == 2
    assert conditional_quantile_size(ctx, cfg.with_(s_min=4.0)).size == 4.0


def test_conditional_constant_channel():
    tau = 0.03125
    ctx = SizingContext(t_b=0.0, T=tau, history=aligned_log([0.2] * 50, tau))
    dec = conditional_quantile_size(ctx, ControllerConfig(s_min=0.05))
    assert dec.size == pytest.approx(0.2) and not dec.fallback_used


def test_conditional_empty_set_falls_back_to_marginal():
    tau = 0.0625
    vals = [100.0, 1.0, 2.0, 3.0, 4.0, 5.0]
    ctx = SizingContext(t_b=0.0, T=tau, history=aligned_log(vals, tau))
    cfg = ControllerConfig(J=6, s_min=0.01)
    dec = conditional_quantile_size(ctx, cfg)
    assert dec.fallback_used
    assert dec.size == pytest.approx(quantile(vals[1:], 0.05))


def test_absolute_tolerance_mode():
    vals = np.array([5.0, 3.0, 5.3, 9.0, 4.6, 1.0])
    assert conditioning_set(vals, 0.5, mode="absolute").tolist() == [3.0, 9.0]
    assert conditioning_set(vals, 0.05, mode="relative").tolist() == []


def test_zero_reference_uses_absolute_tolerance():
    vals = np.array([0.0, 7.0, 0.01, 8.0])
    assert conditioning_set(vals, 0.05).tolist() == [7.0]


def test_decide_dispatch():
    tau = 0.0625
    ctx = SizingContext(t_b=0.0, T=tau, history=aligned_log([5, 3, 5, 9, 5, 1], tau))
    assert decide(ControllerConfig(strategy="min-size", s_min=0.3), ctx).size == 0.3
    assert decide(ControllerConfig(strategy="am", K=5), ctx).size == pytest.approx(am_size(ctx, 5, 0.05))
    cfg = ControllerConfig(J=6, s_min=0.1)
    assert decide(cfg, ctx) == conditional_quantile_size(ctx, cfg)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=3, max_size=60), st.floats(0.1, 10.0))
def test_scaling_equivariance(vals, c):
    tau = 0.0625
    base = ControllerConfig(s_min=1e-9, J=100)
    ctx = SizingContext(t_b=0.0, T=tau, history=aligned_log(vals, tau))
    ctx_c = SizingContext(t_b=0.0, T=tau, history=aligned_log([c * v for v in vals], tau))
    for strat in ("marginal-quantile", "conditional-quantile"):
        cfg = base.with_(strategy=strat)
        assert decide(cfg, ctx_c).size == pytest.approx(c * decide(cfg, ctx).size, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.001, 10.0), min_size=1, max_size=60), st.floats(0.0, 0.1),
       st.floats(0.001, 0.1), st.floats(0.01, 2.0))
def test_size_never_below_floor(sizes, t_b, T, s_min):
    log = HistoryLog(sizes, [0.01] * len(sizes))
    ctx = SizingContext(t_b=t_b, T=T, history=log)
    for name in DEFAULT_CONTROLLERS:
        assert decide(parse_controller(name, s_min=s_min), ctx).size >= s_min


def coverage(strategy, sigma, decisions=5000, eps=0.05, seed=11):
    """Fraction of decisions where the next interval carries less than the chosen size."""
    rng = np.random.default_rng(seed)
    tau = 0.0625
    cfg = ControllerConfig(strategy=strategy, epsilon=eps, J=600, s_min=1e-6)
    misses = 0
    for _ in range(decisions):
        vals = rng.lognormal(0.0, sigma, size=601)
        ctx = SizingContext(t_b=0.0, T=tau, history=aligned_log(vals[1:].tolist(), tau))
        misses += vals[0] < decide(cfg, ctx).size
    return misses / decisions


@pytest.mark.parametrize("strategy", ["marginal-quantile", "conditional-quantile"])
def test_epsilon_coverage_on_iid_channel(strategy):
    assert abs(coverage(strategy, sigma=0.15) - 0.05) <= 0.03


def test_marginal_coverage_ignores_dispersion():
    assert abs(coverage("marginal-quantile", sigma=0.5, decisions=2000) - 0.05) <= 0.03


@pytest.mark.parametrize("kwargs", [
    dict(strategy="bogus"), dict(epsilon=0.0), dict(epsilon=1.0), dict(alpha=0.0),
    dict(alpha=1.5), dict(s_min=0.0), dict(J=1), dict(K=0), dict(cond_tolerance=0.0),
    dict(cond_mode="both"),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ControllerConfig(**kwargs)


def test_context_validation():
    with pytest.raises(ValueError):
        SizingContext(t_b=0.0, T=0.0, history=HistoryLog())
    with pytest.raises(ValueError):
        SizingContext(t_b=-0.1, T=0.1, history=HistoryLog())


def test_parse_controller_names():
    assert parse_controller("am-16").K == 16
    assert parse_controller("AM:5").label == "am-5"
    assert parse_controller("marginal").strategy == "marginal-quantile"
    assert parse_controller("conditional-quantile", epsilon=0.1).epsilon == 0.1
    for bad in ("am-x", "foo"):
        with pytest.raises(ValueError):
            parse_controller(bad)
