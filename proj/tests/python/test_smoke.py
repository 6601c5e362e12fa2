"""Smoke tests for the _xrtrace extension module."""

import math

import pytest

import _xrtrace as xr


@pytest.fixture
def meta():
    m = xr.TraceMeta()
    m.content_label = "synthetic"
    m.target_rate_bps = 30e6
    m.frame_rate_fps = 60.0
    m.source_id = "synth"
    return m


@pytest.fixture
def trace(meta):
    return xr.synth_trace(meta, 2000, 4000.0, -0.4, 7)


def test_expected_frame_bytes(meta):
    assert meta.expected_frame_bytes() == pytest.approx(62500.0)


def test_synth_trace_is_deterministic(meta):
    a = xr.synth_trace(meta, 100, 3000.0, -0.4, 1)
    b = xr.synth_trace(meta, 100, 3000.0, -0.4, 1)
    assert a.sizes == b.sizes


def test_windowed_mean_and_diff(trace):
    wm = xr.windowed_mean(trace, 6)
    assert len(wm) == len(trace.sizes) - 5
    diff = xr.diff_series(trace)
    assert len(diff) == len(trace.sizes) - 1


def test_autocorr_negative_lag1_on_increments(trace):
    acf = xr.autocorr(xr.diff_series(trace), 3)
    assert acf[0] == 1.0
    assert acf[1] < -0.2


def test_overflow_report(trace):
    rep = xr.overflow_report(trace, 6)
    assert rep.p99 >= rep.p95


def test_fit_and_residuals(trace):
    cfg = xr.PredictorConfig()
    cfg.history_n = 2
    cfg.method = xr.Method.ols
    model = xr.fit_model(trace, cfg)
    assert len(model.theta) == 3
    res = xr.residuals(model, trace)
    mean = sum(res) / len(res)
    assert abs(mean) < 1.0  # in-sample OLS residual mean is ~0 bytes


def test_quantile_coverage(trace):
    cfg = xr.PredictorConfig()
    cfg.history_n = 2
    cfg.method = xr.Method.quantile
    cfg.ps = 0.9
    model = xr.fit_model(trace, cfg)
    res = xr.residuals(model, trace)
    covered = sum(1 for w in res if w <= 0) / len(res)
    assert abs(covered - 0.9) < 0.05


def test_schedule_roundtrip(trace):
    policy = xr.make_policy(trace, xr.SchedKind.FS, 6, 1, 0.95)
    run = xr.simulate(trace, policy)
    assert not run.summary.livelock
    assert run.summary.mean_latency_s > 0
    arrived = sum(trace.sizes)
    assert math.isclose(arrived, run.served_bytes + run.final_backlog, rel_tol=1e-6)


def test_trace_file_roundtrip(tmp_path, trace):
    path = tmp_path / "trace.csv"
    xr.write_frame_trace(trace, str(path))
    back = xr.read_frame_trace(str(path))
    assert back.sizes == trace.sizes
    assert back.meta.content_label == trace.meta.content_label
