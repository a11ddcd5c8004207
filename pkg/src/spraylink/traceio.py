"""Voltage-trace data model, CSV I/O, and preprocessing.

A trace is a strictly increasing series of (time s, voltage V) samples plus
a metadata dict. Preprocessing aligns the time axis to a start time t0,
removes the offset voltage observed at t0, and truncates everything before
it, so that a prepared trace starts at (0 s, 0 V).

File format: CSV with the exact header `time_s,voltage_v`; lines starting
with '#' are comments; values use a decimal point and no thousands
separators.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import NoSignalError, ParseError, ValidationError

TRACE_HEADER = "time_s,voltage_v"

# Post-offset negative dips no deeper than this are treated as noise and
# clamped to zero; deeper dips are preserved and flagged.
DEFAULT_NOISE_FLOOR_V = 0.005


@dataclass
class Trace:
    """Time-stamped voltage samples with preprocessing metadata."""

    times: np.ndarray
    volts: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.volts, dtype=float)
        if t.ndim != 1 or v.shape != t.shape:
            raise ValidationError("times and volts must be 1-D and equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValidationError("trace values must be finite")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise ValidationError("time stamps must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        self.times = t
        self.volts = v

    def __len__(self) -> int:
        return self.times.size

    @property
    def samples(self) -> list[tuple[float, float]]:
        """Samples as a list of (t, v) pairs."""
        return [(float(t), float(v)) for t, v in zip(self.times, self.volts)]


def atomic_write_text(path, text: str) -> None:
    """Write text to path via a same-directory temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def store_trace(trace: Trace, path) -> None:
    """Write a trace as CSV; 17 significant digits preserve float64 exactly."""
    lines = [TRACE_HEADER]
    lines.extend(f"{t:.17g},{v:.17g}" for t, v in zip(trace.times, trace.volts))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_trace(path) -> Trace:
    """Read a trace CSV written by store_trace (or compatible)."""
    times, volts = [], []
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if not header_seen:
                cols = [c.strip() for c in text.split(",")]
                if cols != TRACE_HEADER.split(","):
                    raise ParseError(
                        f"expected header '{TRACE_HEADER}', got {text!r}",
                        path=path,
                        line=line_no,
                    )
                header_seen = True
                continue
            parts = text.split(",")
            if len(parts) != 2:
                raise ParseError(
                    f"expected 2 columns, got {len(parts)}", path=path, line=line_no
                )
            try:
                times.append(float(parts[0]))
                volts.append(float(parts[1]))
            except ValueError as exc:
                raise ParseError(f"bad number: {exc}", path=path, line=line_no) from exc
    if not header_seen:
        raise ParseError("missing header", path=path)
    return Trace(np.array(times), np.array(volts), meta={"source": str(path)})


def detect_onset(trace: Trace) -> float:
    """Estimate the signal start time from the trace itself.

    Rule: the first time at which the centered finite-difference slope
    exceeds 3x the standard deviation of the slopes over the initial 10%
    of samples. Deterministic and parameter-free; pass an explicit t0 to
    preprocess() to override it.
    """
    n = len(trace)
    if n < 3:
        raise ValidationError("onset detection needs at least 3 samples")
    t, v = trace.times, trace.volts
    slopes = (v[2:] - v[:-2]) / (t[2:] - t[:-2])
    head = slopes[: max(2, n // 10)]
    threshold = 3.0 * float(np.std(head))
    idx = np.nonzero(slopes > threshold)[0]
    if idx.size == 0:
        raise NoSignalError("no onset detected: slope never exceeds threshold")
    return float(t[idx[0] + 1])


def preprocess(raw: Trace, t0="auto", noise_floor: float = DEFAULT_NOISE_FLOOR_V) -> Trace:
    """Align a raw trace to its start time and remove the offset voltage.

    t0 may be a time in seconds or "auto" (onset detection). The output
    time axis is raw time minus t0, truncated to t >= 0, and the voltage at
    t0 (interpolated when t0 falls between samples) is subtracted from
    every sample, so the result starts at (0, 0). Negative dips after
    offset removal are clamped to zero only when no deeper than
    noise_floor; otherwise they are kept and flagged in meta.
    """
    if len(raw) == 0:
        raise ValidationError("cannot preprocess an empty trace")
    if t0 == "auto":
        t0 = detect_onset(raw)
    else:
        t0 = float(t0)
        if not (raw.times[0] <= t0 <= raw.times[-1]):
            raise ValidationError(
                f"t0 = {t0!r} outside trace span "
                f"[{raw.times[0]!r}, {raw.times[-1]!r}]"
            )
    v0 = float(np.interp(t0, raw.times, raw.volts))
    keep = raw.times >= t0
    new_t = raw.times[keep] - t0
    new_v = raw.volts[keep] - v0
    if new_t.size == 0 or new_t[0] != 0.0:
        new_t = np.concatenate(([0.0], new_t))
        new_v = np.concatenate(([0.0], new_v))
    else:
        new_v = new_v.copy()
        new_v[0] = 0.0
    meta = dict(raw.meta)
    meta.update({"t0": t0, "offset_v": v0, "preprocessed": True})
    min_v = float(new_v.min())
    if min_v < 0.0:
        if -min_v <= noise_floor:
            new_v = np.maximum(new_v, 0.0)
            meta["clamped_noise_dip_v"] = -min_v
        else:
            meta["negative_values"] = True
    return Trace(new_t, new_v, meta=meta)


def resample(trace: Trace, grid) -> Trace:
    """Linearly interpolate a trace onto a new time grid.

    The grid must lie within the trace's span; extrapolation is refused.
    """
    if len(trace) == 0:
        raise ValidationError("cannot resample an empty trace")
    g = np.asarray(grid, dtype=float)
    if g.size and (g[0] < trace.times[0] or g[-1] > trace.times[-1]):
        raise ValidationError(
            f"grid [{g[0]!r}, {g[-1]!r}] extends beyond trace span "
            f"[{trace.times[0]!r}, {trace.times[-1]!r}]"
        )
    new_v = np.interp(g, trace.times, trace.volts)
    meta = dict(trace.meta)
    meta["resampled"] = True
    return Trace(g.copy(), new_v, meta=meta)
