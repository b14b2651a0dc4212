"""File formats: city CSV, sensor traces, and machine-readable reports.

All three formats carry a versioned header/tag and round-trip numbers
exactly (floats are rendered with Python's shortest round-trip repr).
Loaders never partially succeed: any error raises before a dataset is
returned.

Trace format (line oriented)::

    qtrace v1
    s <t_ms> <ax> <ay> <az> <mx> <my> <mz>
    t <t_ms> <true_heading_deg> <pitch_deg> <roll_deg>

's' lines are sensor samples (m/s^2 and microtesla, body frame), 't' lines
are optional interleaved truth records. Sample timestamps must be monotone
nondecreasing.

City CSV: mandatory header ``name,latitude_deg,longitude_deg``; names are
unique case-insensitively.

Report: a JSON document with "report", "meta", "samples" and "summary"
sections (or a plain-text table via format="text"). When truth records are
supplied the summary adds steady-state heading/deviation error over the
final 10 seconds of the trace.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

from .declination import DeclinationGrid, load_grid
from .errors import DuplicateCity, EmptyReport, InvalidCoordinate, ParseError
from .geodesy import GeoCoordinate
from .pipeline import QiblaPointerState, SensorSample, circular_diff
from .simulator import TruthRecord, truth_heading_at

TRACE_HEADER = "qtrace v1"
REPORT_TAG = "qibla-pipeline v1"
CITY_HEADER = ("name", "latitude_deg", "longitude_deg")

STEADY_STATE_WINDOW_MS = 10000.0


@dataclass(frozen=True)
class CityRecord:
    """A named location; the name is a unique case-insensitive key."""

    name: str
    location: GeoCoordinate


@dataclass(frozen=True)
class TraceFile:
    """Ordered sensor samples with an optional paired truth stream."""

    samples: tuple[SensorSample, ...]
    truth: tuple[TruthRecord, ...] | None = None


def load_cities(path: str) -> list[CityRecord]:
    """Load the city CSV; rejects bad rows and duplicate names outright."""
    records: list[CityRecord] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip().lower() for h in header) != CITY_HEADER:
            raise ParseError(f"expected header {','.join(CITY_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno)
            name = row[0].strip()
            if not name:
                raise ParseError("empty city name", line=lineno)
            key = name.casefold()
            if key in seen:
                raise DuplicateCity(name)
            try:
                location = GeoCoordinate(float(row[1]), float(row[2]))
            except (ValueError, InvalidCoordinate) as exc:
                raise ParseError(f"bad coordinates for {name!r}: {exc}", line=lineno) from None
            seen.add(key)
            records.append(CityRecord(name=name, location=location))
    return records


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace(trace: TraceFile, path: str) -> None:
    """Serialize a trace, interleaving truth lines by timestamp."""
    ts = [s.t_ms for s in trace.samples]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("sample timestamps must be monotone nondecreasing")
    lines = [TRACE_HEADER]
    truth = list(trace.truth) if trace.truth else []
    ti = 0
    for s in trace.samples:
        lines.append("s " + " ".join(_fmt(v) for v in (s.t_ms, *s.accel, *s.mag)))
        while ti < len(truth) and truth[ti].t_ms <= s.t_ms:
            r = truth[ti]
            lines.append("t " + " ".join(
                _fmt(v) for v in (r.t_ms, r.true_heading_deg, r.pitch_deg, r.roll_deg)))
            ti += 1
    for r in truth[ti:]:
        lines.append("t " + " ".join(
            _fmt(v) for v in (r.t_ms, r.true_heading_deg, r.pitch_deg, r.roll_deg)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace(path: str) -> TraceFile:
    """Parse a trace file; any malformed or out-of-order line aborts."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != TRACE_HEADER:
        raise ParseError(f"expected header {TRACE_HEADER!r}", line=1)
    samples: list[SensorSample] = []
    truth: list[TruthRecord] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        tag, *fields = raw.split()
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise ParseError("non-numeric field", line=lineno) from None
        if tag == "s":
            if len(values) != 7:
                raise ParseError(f"sample record needs 7 fields, got {len(values)}", line=lineno)
            if samples and values[0] < samples[-1].t_ms:
                raise ParseError("sample timestamps must be monotone nondecreasing", line=lineno)
            try:
                samples.append(SensorSample(values[0], tuple(values[1:4]), tuple(values[4:7])))
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
        elif tag == "t":
            if len(values) != 4:
                raise ParseError(f"truth record needs 4 fields, got {len(values)}", line=lineno)
            if truth and values[0] < truth[-1].t_ms:
                raise ParseError("truth timestamps must be monotone nondecreasing", line=lineno)
            truth.append(TruthRecord(*values))
        else:
            raise ParseError(f"unknown record tag {tag!r}", line=lineno)
    return TraceFile(samples=tuple(samples), truth=tuple(truth) if truth else None)


def _sample_entry(t_ms: float, state: QiblaPointerState) -> dict:
    return {
        "t_ms": t_ms,
        "magnetic_heading_deg": float(state.magnetic_heading),
        "true_heading_deg": float(state.true_heading),
        "qibla_deg": float(state.qibla),
        "deviation_deg": state.deviation_deg,
        "guidance": state.guidance.value,
        "calibrated": state.calibrated,
        "dynamic": state.dynamic,
    }


def summarize(
    entries: list[tuple[float, QiblaPointerState]],
    truth: list[TruthRecord] | None = None,
) -> dict:
    """Summary block for a pointer stream: deviation stats, plus heading
    and deviation error against truth over the final 10 s when truth is
    supplied."""
    if not entries:
        raise EmptyReport("cannot summarize an empty state stream")
    deviations = [abs(state.deviation_deg) for _, state in entries]
    summary = {
        "samples": len(entries),
        "mean_abs_deviation_deg": sum(deviations) / len(deviations),
        "max_abs_deviation_deg": max(deviations),
    }
    if truth:
        t_end = entries[-1][0]
        window = [(t, s) for t, s in entries if t >= t_end - STEADY_STATE_WINDOW_MS]
        truth_list = list(truth)
        # entry timestamps normally coincide with truth records; interpolate
        # only the stragglers
        heading_by_t = {r.t_ms: r.true_heading_deg % 360.0 for r in truth_list}
        head_errs = []
        dev_errs = []
        for t, s in window:
            true_h = heading_by_t.get(t)
            if true_h is None:
                true_h = truth_heading_at(truth_list, t)
            err = circular_diff(s.true_heading, true_h)
            head_errs.append(abs(err))
            true_dev = circular_diff(s.qibla, true_h)
            dev_errs.append(abs(circular_diff(s.deviation_deg, true_dev)))
        summary["steady_state_window_ms"] = STEADY_STATE_WINDOW_MS
        summary["steady_state_error_deg"] = sum(head_errs) / len(head_errs)
        summary["steady_state_max_error_deg"] = max(head_errs)
        summary["steady_state_deviation_error_deg"] = sum(dev_errs) / len(dev_errs)
        summary["steady_state_max_deviation_error_deg"] = max(dev_errs)
    return summary


def write_report(
    entries: list[tuple[float, QiblaPointerState]],
    path: str,
    fmt: str = "json",
    *,
    truth: list[TruthRecord] | None = None,
    meta: dict | None = None,
) -> dict:
    """Write the per-sample report plus summary; returns the summary block.

    fmt "json" writes the structured document, "text" a terminal table.
    An empty stream raises EmptyReport.
    """
    summary = summarize(entries, truth)
    if fmt == "json":
        doc = {
            "report": REPORT_TAG,
            "meta": meta or {},
            "samples": [_sample_entry(t, s) for t, s in entries],
            "summary": summary,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    elif fmt == "text":
        lines = [REPORT_TAG]
        for key, value in (meta or {}).items():
            lines.append(f"# {key}: {value}")
        lines.append(f"{'t_ms':>12} {'magnetic':>10} {'true':>10} {'qibla':>10} "
                     f"{'deviation':>10} guidance")
        for t, s in entries:
            lines.append(
                f"{t:>12.1f} {float(s.magnetic_heading):>10.2f} {float(s.true_heading):>10.2f} "
                f"{float(s.qibla):>10.2f} {s.deviation_deg:>+10.2f} {s.guidance.value}"
                + (" (dynamic)" if s.dynamic else "")
            )
        lines.append("")
        for key, value in summary.items():
            lines.append(f"{key}: {value:.4f}" if isinstance(value, float) else f"{key}: {value}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return summary


def read_report(path: str) -> dict:
    """Parse a structured report back into its document dict."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or doc.get("report") != REPORT_TAG:
        raise ParseError(f"not a {REPORT_TAG} document")
    return doc


def load_declination_grid(path: str) -> DeclinationGrid:
    """Grid loading lives with the declination logic; kept here as the
    single entry point for file-format consumers."""
    return load_grid(path)
