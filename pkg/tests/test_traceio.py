"""Trace model, CSV round trips, preprocessing, and resampling."""

import numpy as np
import pytest

from spraylink.errors import NoSignalError, ParseError, ValidationError
from spraylink.traceio import (
    Trace,
    detect_onset,
    load_trace,
    preprocess,
    resample,
    store_trace,
)


def make_trace(times, volts, **meta):
    return Trace(np.asarray(times, float), np.asarray(volts, float), meta=dict(meta))


def test_trace_validation():
    with pytest.raises(ValidationError):
        make_trace([0.0, 1.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(ValidationError):
        make_trace([0.0, 1.0], [0.0, np.nan])
    empty = make_trace([], [])
    assert len(empty) == 0
    t = make_trace([0.0, 0.5], [0.1, 0.2])
    assert t.samples == [(0.0, 0.1), (0.5, 0.2)]


def test_store_load_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    times = np.sort(rng.uniform(0.0, 10.0, size=1000))
    times = np.unique(times)
    volts = rng.uniform(0.0, 5.0, size=times.size)
    trace = make_trace(times, volts)
    path = tmp_path / "trace.csv"
    store_trace(trace, path)
    back = load_trace(path)
    assert np.array_equal(back.times, trace.times)
    assert np.array_equal(back.volts, trace.volts)


def test_load_trace_files(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("time_s,voltage_v\n")
    assert len(load_trace(empty)) == 0

    three = tmp_path / "three.csv"
    three.write_text("time_s,voltage_v\n0.0,0.1\n0.5,0.2\n1.0,0.15\n")
    trace = load_trace(three)
    assert len(trace) == 3
    assert trace.volts[2] == 0.15

    headerless = tmp_path / "headerless.csv"
    headerless.write_text("0.0,0.1\n")
    with pytest.raises(ParseError):
        load_trace(headerless)

    malformed = tmp_path / "malformed.csv"
    malformed.write_text("time_s,voltage_v\n0.0,0.1\nnope\n")
    with pytest.raises(ParseError) as err:
        load_trace(malformed)
    assert err.value.line == 3

    backwards = tmp_path / "backwards.csv"
    backwards.write_text("time_s,voltage_v\n1.0,0.1\n0.5,0.2\n")
    with pytest.raises(ValidationError):
        load_trace(backwards)


def test_preprocess_explicit_t0():
    trace = make_trace([0.0, 1.0, 2.0, 3.0], [0.7, 0.7, 1.2, 0.9])
    out = preprocess(trace, t0=1.0)
    assert out.times[0] == 0.0 and out.volts[0] == 0.0
    np.testing.assert_allclose(out.times, [0.0, 1.0, 2.0])
    np.testing.assert_allclose(out.volts, [0.0, 0.5, 0.2])
    assert out.meta["t0"] == 1.0 and out.meta["offset_v"] == 0.7


def test_preprocess_t0_between_samples():
    trace = make_trace([0.0, 1.0, 2.0], [0.0, 1.0, 1.0])
    out = preprocess(trace, t0=0.5)
    assert out.times[0] == 0.0 and out.volts[0] == 0.0
    np.testing.assert_allclose(out.times, [0.0, 0.5, 1.5])
    np.testing.assert_allclose(out.volts, [0.0, 0.5, 0.5])


def test_preprocess_constant_trace_is_zeroed():
    trace = make_trace([0.0, 1.0, 2.0], [0.7, 0.7, 0.7])
    out = preprocess(trace, t0=1.0)
    assert np.all(out.volts == 0.0)


def test_preprocess_idempotent():
    trace = make_trace(np.linspace(0.0, 5.0, 51), np.sin(np.linspace(0.0, 5.0, 51)) + 0.8)
    once = preprocess(trace, t0=1.0)
    twice = preprocess(once, t0=0.0)
    assert np.array_equal(once.times, twice.times)
    assert np.array_equal(once.volts, twice.volts)


def test_preprocess_negative_dips():
    # shallow dip (within the noise floor) is clamped to zero
    shallow = make_trace([0.0, 1.0, 2.0], [0.5, 0.497, 0.8])
    out = preprocess(shallow, t0=0.0)
    assert np.all(out.volts >= 0.0)
    assert "clamped_noise_dip_v" in out.meta
    # deep dip is preserved and flagged
    deep = make_trace([0.0, 1.0, 2.0], [0.5, 0.4, 0.8])
    out = preprocess(deep, t0=0.0)
    assert out.volts.min() < 0.0
    assert out.meta["negative_values"] is True


def test_preprocess_validation():
    trace = make_trace([0.0, 1.0], [0.0, 1.0])
    with pytest.raises(ValidationError):
        preprocess(trace, t0=5.0)
    with pytest.raises(ValidationError):
        preprocess(make_trace([], []), t0=0.0)


def test_detect_onset():
    t = np.arange(0.0, 10.0, 0.01)
    onset = 4.0
    v = np.where(t < onset, 0.7, 0.7 + np.clip(t - onset, 0.0, None))
    trace = make_trace(t, v)
    found = detect_onset(trace)
    assert abs(found - onset) <= 0.01
    out = preprocess(trace, t0="auto")
    assert out.times[0] == 0.0 and out.volts[0] == 0.0

    flat = make_trace(t, np.full_like(t, 0.7))
    with pytest.raises(NoSignalError):
        detect_onset(flat)


def test_resample_identity():
    trace = make_trace(np.linspace(0.0, 2.0, 21), np.random.default_rng(1).uniform(size=21))
    back = resample(trace, trace.times)
    assert np.array_equal(back.times, trace.times)
    assert np.array_equal(back.volts, trace.volts)


def test_resample_midpoint_and_extrapolation():
    trace = make_trace([0.0, 1.0], [0.0, 1.0])
    assert resample(trace, [0.5]).volts[0] == 0.5
    with pytest.raises(ValidationError):
        resample(trace, [0.5, 1.5])


def test_resample_interpolation_error_bound(bench_tx, bench_sensor):
    from spraylink.channel import sample_response
    from spraylink.kinetics import KineticsParams

    # the response climbs like t^0.59 out of t = 0, so the source trace has
    # to be an order denser than the 0.01 s target grid
    kin = KineticsParams(2.0, 0.5)
    dense = sample_response(bench_tx, kin, bench_sensor, 1.0, np.arange(0, 10001) * 0.001)
    grid = np.arange(0.005, 9.99, 0.01)
    interped = resample(dense, grid)
    direct = sample_response(bench_tx, kin, bench_sensor, 1.0, grid)
    err = interped.volts - direct.volts
    assert float(err @ err) / err.size < 1e-8
