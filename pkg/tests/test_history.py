import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uplinkq.history import (
    HistoryLog,
    InsufficientHistory,
    aggregate_backward_interval,
    build_window,
    dump_window,
    interval_count,
    window_values,
)

from oracles import slice_backward_interval, uniform_integral

S = [1.0, 2.0, 1.0]
T = [0.5, 0.5, 0.5]


def test_append_examples():
    log = HistoryLog()
    log.append(1.0, 0.5)
    assert log.sizes.tolist() == [1.0] and log.durations.tolist() == [0.5]
    log.append(2.0, 0.25)
    assert log.sizes.tolist() == [1.0, 2.0] and log.durations.tolist() == [0.5, 0.25]
    with pytest.raises(ValueError):
        log.append(0.0, 0.1)
    with pytest.raises(ValueError):
        log.append(1.0, 0.0)


def test_log_grows_past_initial_capacity():
    log = HistoryLog()
    for m in range(3000):
        log.append(1.0 + m % 3, 0.01)
    assert len(log) == 3000
    assert log.span == pytest.approx(30.0)
    assert log.cumulative_sizes[-1] == pytest.approx(sum(1.0 + m % 3 for m in range(3000)))


@pytest.mark.parametrize("j, tau, expected", [(0, 0.5, 1.0), (0, 0.75, 2.0), (1, 0.5, 2.0)])
def test_worked_examples(j, tau, expected):
    log = HistoryLog(S, T)
    assert aggregate_backward_interval(log, j, tau) == pytest.approx(expected, abs=1e-12)
    assert slice_backward_interval(S, T, j, tau) == pytest.approx(expected, rel=1e-6)


def test_insufficient_history():
    log = HistoryLog(S, T)
    with pytest.raises(InsufficientHistory):
        aggregate_backward_interval(log, 2, 0.6)
    with pytest.raises(InsufficientHistory):
        aggregate_backward_interval(HistoryLog(), 0, 0.1)


def test_build_window_lengths():
    log = HistoryLog([0.1] * 1000, [0.1] * 1000)
    assert len(build_window(log, 0.1, 50)) == 50
    with pytest.raises(InsufficientHistory):
        build_window(HistoryLog([0.1], [0.15]), 0.1, 50)
    with pytest.raises(ValueError):
        build_window(log, 0.0, 50)
    with pytest.raises(ValueError):
        build_window(log, 0.1, 1)


def test_window_caps_at_available_intervals():
    log = HistoryLog([1.0] * 10, [0.1] * 10)
    assert len(build_window(log, 0.3, 100)) == 3


def test_interval_count_respects_rounding():
    assert interval_count(1.9, 0.01) == 189
    assert interval_count(1.5, 0.5) == 3
    assert interval_count(0.05, 0.1) == 0


def test_dump_window(tmp_path):
    win = build_window(HistoryLog(S, T), 0.5, 3)
    path = tmp_path / "w.csv"
    dump_window(win, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "j,value"
    assert len(lines) == 4


histories = st.lists(
    st.tuples(st.floats(1e-3, 2.0), st.floats(1e-3, 2.0)), min_size=1, max_size=50
)


@settings(max_examples=80, deadline=None)
@given(histories, st.floats(0.01, 3.0))
def test_window_matches_literal_procedure(frames, tau):
    sizes, durs = zip(*frames)
    log = HistoryLog(sizes, durs)
    vals = window_values(log, tau, 200)
    assert len(vals) == min(200, interval_count(log.span, tau))
    for j, v in enumerate(vals):
        assert v == pytest.approx(aggregate_backward_interval(log, j, tau), rel=1e-9, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(histories, st.floats(0.01, 3.0))
def test_conservation(frames, tau):
    sizes, durs = zip(*frames)
    log = HistoryLog(sizes, durs)
    M = interval_count(log.span, tau)
    if M == 0:
        return
    total = sum(aggregate_backward_interval(log, j, tau) for j in range(M))
    ref = uniform_integral(sizes, durs, log.span - M * tau, log.span)
    assert total == pytest.approx(ref, rel=1e-9, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.5, 50.0), st.lists(st.floats(0.005, 0.2), min_size=5, max_size=60),
       st.floats(0.01, 0.3))
def test_constant_rate_identity(rate, durs, tau):
    log = HistoryLog([rate * d for d in durs], durs)
    vals = window_values(log, tau, 100)
    np.testing.assert_allclose(vals, rate * tau, rtol=1e-9)


@settings(max_examples=80, deadline=None)
@given(histories, st.floats(0.05, 1.0), st.floats(0.01, 5.0))
def test_window_shift(frames, tau, sigma):
    sizes, durs = zip(*frames)
    log = HistoryLog(sizes, durs)
    before = window_values(log, tau, 30)
    log.append(sigma, tau)
    after = window_values(log, tau, 30)
    assert after[0] == pytest.approx(sigma, rel=1e-9)
    n = min(len(before), len(after) - 1)
    np.testing.assert_allclose(after[1 : 1 + n], before[:n], rtol=1e-7, atol=1e-9)


def test_slice_oracle_counts_like_materialised_slices():
    rng = np.random.default_rng(0)
    sizes, durs = rng.uniform(0.1, 2, 8), rng.uniform(0.1, 2, 8)
    n = 10_000
    starts = np.concatenate(([0.0], np.cumsum(durs)[:-1]))
    mids = np.concatenate([s0 + (np.arange(n) + 0.5) * d / n for s0, d in zip(starts, durs)])
    mass = np.repeat(sizes / n, n)
    t_end = durs.sum()
    for j, tau in [(0, 0.3), (2, 0.7), (1, 1.9)]:
        lo, hi = t_end - (j + 1) * tau, t_end - j * tau
        direct = mass[(mids > lo) & (mids <= hi)].sum()
        assert slice_backward_interval(sizes, durs, j, tau, resolution=1.0) == pytest.approx(direct, rel=1e-12)
