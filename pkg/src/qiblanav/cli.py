"""Command-line front door.

Subcommands: qibla, distance, simulate, pipeline, calibrate. Output is
either human text (azimuths to 2 decimals) or structured JSON at full
precision via --format json. Structured output carries no timestamps
unless --timestamps is passed, so repeated invocations on the same inputs
are byte-identical.

Exit codes: 0 success, 2 domain error (bad coordinates, degenerate
geometry, unreadable/invalid input files), 3 data insufficiency (too few
usable samples, degenerate calibration sweep), 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone

from .dataio import TraceFile, load_cities, read_trace, write_report, write_trace
from .declination import DeclinationDeg, declination_at, load_grid
from .errors import DegenerateSweep, InsufficientData, QiblaNavError
from .geodesy import KAABA, GeoCoordinate, haversine_distance, qibla_azimuth, slc_distance
from .pipeline import (
    DEFAULT_ALPHA,
    DEFAULT_GUIDANCE_THRESHOLD_DEG,
    calibrate,
    run_trace,
)
from .simulator import generate, load_scenario

USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract reserves 2
    # for domain errors and uses 64 for usage.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _add_location_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lat", type=float, help="latitude in degrees")
    p.add_argument("--lon", type=float, help="longitude in degrees")
    p.add_argument("--city", help="named location from the cities file")
    p.add_argument("--cities", help="city CSV file (name,latitude_deg,longitude_deg)")


def _add_declination_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--decl", type=float, help="magnetic declination in degrees, east-positive")
    g.add_argument("--decl-grid", help="declination grid file (declgrid v1)")


def _add_format_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--timestamps", action="store_true",
                   help="include a generation timestamp in structured output")


def _resolve_location(parser: argparse.ArgumentParser, args: argparse.Namespace) -> GeoCoordinate:
    by_coords = args.lat is not None or args.lon is not None
    by_city = args.city is not None
    if by_coords and by_city:
        parser.error("--lat/--lon and --city are mutually exclusive")
    if by_coords:
        if args.lat is None or args.lon is None:
            parser.error("--lat and --lon must be given together")
        return GeoCoordinate(args.lat, args.lon)
    if by_city:
        if not args.cities:
            parser.error("--city requires --cities FILE")
        for record in load_cities(args.cities):
            if record.name.casefold() == args.city.casefold():
                return record.location
        raise QiblaNavError(f"unknown city {args.city!r}")
    parser.error("a location is required: --lat/--lon or --city with --cities")
    raise AssertionError("unreachable")


def _resolve_declination(args: argparse.Namespace, where: GeoCoordinate) -> DeclinationDeg | None:
    if args.decl is not None:
        return DeclinationDeg(args.decl)
    if args.decl_grid is not None:
        return declination_at(load_grid(args.decl_grid), where)
    return None


def _meta_timestamp(args: argparse.Namespace) -> dict:
    if args.timestamps:
        return {"generated_at": datetime.now(timezone.utc).isoformat()}
    return {}


def _emit(args: argparse.Namespace, doc: dict, text_lines: list[str]) -> None:
    if args.format == "json":
        doc.update(_meta_timestamp(args))
        print(json.dumps(doc, indent=2))
    else:
        for line in text_lines:
            print(line)


def cmd_qibla(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    where = _resolve_location(parser, args)
    decl = _resolve_declination(args, where)
    azimuth = qibla_azimuth(where)
    distance = haversine_distance(where, KAABA)
    doc = {
        "report": "qibla-query v1",
        "latitude_deg": where.latitude_deg,
        "longitude_deg": where.longitude_deg,
        "qibla_deg": float(azimuth),
        "distance_km": float(distance),
        "declination_deg": float(decl) if decl is not None else None,
        "magnetic_assumed_true": decl is None,
    }
    if decl is None:
        decl_line = "declination: none (magnetic heading assumed true)"
    else:
        decl_line = f"declination: {float(decl):.2f} deg east"
    _emit(args, doc, [
        f"qibla azimuth: {float(azimuth):.2f} deg",
        f"distance to kaaba: {float(distance):.3f} km (haversine)",
        decl_line,
    ])
    return 0


def cmd_distance(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    del parser
    a = GeoCoordinate(args.from_lat, args.from_lon)
    b = GeoCoordinate(args.to_lat, args.to_lon)
    fn = haversine_distance if args.method == "haversine" else slc_distance
    distance = fn(a, b)
    doc = {
        "report": "distance-query v1",
        "method": args.method,
        "distance_km": float(distance),
    }
    _emit(args, doc, [f"distance: {float(distance):.3f} km ({args.method})"])
    return 0


def cmd_simulate(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    del parser
    scenario = load_scenario(args.scenario)
    samples, truth = generate(scenario)
    write_trace(TraceFile(samples=tuple(samples), truth=tuple(truth)), args.out)
    doc = {"report": "simulate v1", "samples": len(samples), "out": args.out}
    _emit(args, doc, [f"wrote {len(samples)} samples to {args.out}"])
    return 0


def cmd_pipeline(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    where = _resolve_location(parser, args)
    decl = _resolve_declination(args, where)
    trace = read_trace(args.trace)
    cal_samples = list(trace.samples)
    if args.sweep_ms is not None:
        cal_samples = [s for s in cal_samples if s.t_ms <= args.sweep_ms]
    cal = calibrate(cal_samples)
    entries = run_trace(
        list(trace.samples),
        where,
        cal,
        decl if decl is not None else DeclinationDeg(0.0),
        alpha=args.alpha,
        threshold_deg=args.threshold,
    )
    meta = {
        "latitude_deg": where.latitude_deg,
        "longitude_deg": where.longitude_deg,
        "declination_deg": float(decl) if decl is not None else None,
        "magnetic_assumed_true": decl is None,
        "alpha": args.alpha,
        "threshold_deg": args.threshold,
        "calibration": {
            "hard_iron_ut": list(cal.hard_iron),
            "samples_used": cal.samples_used,
            "coverage_deg": cal.coverage_deg,
            "converged": cal.converged,
        },
    }
    meta.update(_meta_timestamp(args))
    truth = list(trace.truth) if trace.truth else None
    summary = write_report(entries, args.out, fmt=args.format, truth=truth, meta=meta)
    doc = {"report": "qibla-pipeline v1", "meta": meta, "summary": summary}
    text = [f"processed {summary['samples']} samples, report written to {args.out}"]
    if "steady_state_error_deg" in summary:
        text.append(f"steady-state heading error: {summary['steady_state_error_deg']:.3f} deg")
    if decl is None:
        text.append("warning: no declination supplied, magnetic heading assumed true")
    _emit(args, doc, text)
    return 0


def cmd_calibrate(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    del parser
    trace = read_trace(args.trace)
    cal = calibrate(list(trace.samples))
    doc = {
        "report": "calibration v1",
        "hard_iron_ut": list(cal.hard_iron),
        "samples_used": cal.samples_used,
        "coverage_deg": cal.coverage_deg,
        "converged": cal.converged,
    }
    hx, hy, hz = cal.hard_iron
    _emit(args, doc, [
        f"hard iron (uT): {hx:.3f} {hy:.3f} {hz:.3f}",
        f"samples used: {cal.samples_used}",
        f"coverage: {cal.coverage_deg:.1f} deg",
        f"converged: {'yes' if cal.converged else 'no'}",
    ])
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="qiblanav", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qibla", help="qibla azimuth and distance for a location")
    _add_location_flags(p)
    _add_declination_flags(p)
    _add_format_flags(p)
    p.set_defaults(func=cmd_qibla)

    p = sub.add_parser("distance", help="great-circle distance between two points")
    p.add_argument("--from-lat", type=float, required=True)
    p.add_argument("--from-lon", type=float, required=True)
    p.add_argument("--to-lat", type=float, required=True)
    p.add_argument("--to-lon", type=float, required=True)
    p.add_argument("--method", choices=("haversine", "slc"), default="haversine")
    _add_format_flags(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("simulate", help="generate a sensor trace from a scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    _add_format_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pipeline", help="run the compass pipeline over a trace")
    p.add_argument("--trace", required=True)
    _add_location_flags(p)
    _add_declination_flags(p)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                   help="heading filter smoothing factor in (0, 1]")
    p.add_argument("--threshold", type=float, default=DEFAULT_GUIDANCE_THRESHOLD_DEG,
                   help="alignment threshold in degrees")
    p.add_argument("--sweep-ms", type=float, default=None,
                   help="calibrate only on samples up to this time (default: full trace)")
    p.add_argument("--out", required=True, help="report output path")
    _add_format_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("calibrate", help="estimate hard iron from a trace")
    p.add_argument("--trace", required=True)
    _add_format_flags(p)
    p.set_defaults(func=cmd_calibrate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except (InsufficientData, DegenerateSweep) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (QiblaNavError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
