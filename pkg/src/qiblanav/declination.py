"""Magnetic declination lookup and magnetic-to-true heading conversion.

Declination is east-positive: true heading = magnetic heading + declination.
The source is a static rectangular grid with bilinear interpolation between
nodes; grids are epoch-static (no secular variation) and immutable after
load, so lookups are pure and thread-safe.

Grid file format (text, line oriented, whitespace tolerant)::

    declgrid v1 <lat_min> <lat_max> <lat_step> <lon_min> <lon_max> <lon_step>
    <one row of declination values per latitude, ascending;
     one space-separated value per longitude, ascending>
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidAngle, OutOfCoverage, ParseError
from .geodesy import AzimuthDeg, GeoCoordinate, normalize_azimuth

GRID_HEADER_TAG = "declgrid"
GRID_FORMAT_VERSION = "v1"


class DeclinationDeg(float):
    """Magnetic declination in degrees, east-positive, |value| <= 90."""

    def __new__(cls, value_deg: float) -> "DeclinationDeg":
        if not math.isfinite(value_deg) or abs(value_deg) > 90.0:
            raise InvalidAngle(f"declination must be finite with |value| <= 90, got {value_deg!r}")
        return super().__new__(cls, value_deg)


@dataclass(frozen=True)
class DeclinationGrid:
    """Regular lat/lon grid of declination values, row-major by latitude."""

    lat_min: float
    lat_max: float
    lat_step: float
    lon_min: float
    lon_max: float
    lon_step: float
    values: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if not (self.lat_step > 0.0 and self.lon_step > 0.0):
            raise ValueError("grid steps must be strictly positive")
        if not (self.lat_max > self.lat_min and self.lon_max > self.lon_min):
            raise ValueError("grid bounds must satisfy min < max")
        n_lat = _axis_count(self.lat_min, self.lat_max, self.lat_step)
        n_lon = _axis_count(self.lon_min, self.lon_max, self.lon_step)
        if len(self.values) != n_lat:
            raise ValueError(f"expected {n_lat} latitude rows, got {len(self.values)}")
        for i, row in enumerate(self.values):
            if len(row) != n_lon:
                raise ValueError(f"row {i}: expected {n_lon} values, got {len(row)}")
            for v in row:
                if not (math.isfinite(v) and abs(v) <= 90.0):
                    raise ValueError(f"row {i}: declination {v!r} outside [-90, +90]")

    @property
    def n_lat(self) -> int:
        return len(self.values)

    @property
    def n_lon(self) -> int:
        return len(self.values[0])


def _axis_count(lo: float, hi: float, step: float) -> int:
    n = (hi - lo) / step + 1.0
    n_round = round(n)
    if abs(n - n_round) > 1e-9 or n_round < 2:
        raise ValueError(f"span [{lo}, {hi}] is not a whole number of steps of {step}")
    return int(n_round)


def declination_at(grid: DeclinationGrid, where: GeoCoordinate) -> DeclinationDeg:
    """Bilinear interpolation of the four grid nodes surrounding `where`.

    Queries exactly on a node return the stored value; anywhere outside the
    grid's bounding box raises OutOfCoverage.
    """
    lat, lon = where.latitude_deg, where.longitude_deg
    if not (grid.lat_min <= lat <= grid.lat_max and grid.lon_min <= lon <= grid.lon_max):
        raise OutOfCoverage(
            f"({lat}, {lon}) outside grid [{grid.lat_min}, {grid.lat_max}] x "
            f"[{grid.lon_min}, {grid.lon_max}]"
        )
    fi = (lat - grid.lat_min) / grid.lat_step
    fj = (lon - grid.lon_min) / grid.lon_step
    i = min(int(fi), grid.n_lat - 2)
    j = min(int(fj), grid.n_lon - 2)
    u = fi - i
    v = fj - j
    c00 = grid.values[i][j]
    c01 = grid.values[i][j + 1]
    c10 = grid.values[i + 1][j]
    c11 = grid.values[i + 1][j + 1]
    val = (1.0 - u) * ((1.0 - v) * c00 + v * c01) + u * ((1.0 - v) * c10 + v * c11)
    return DeclinationDeg(val)


def to_true_heading(magnetic: AzimuthDeg, decl: DeclinationDeg) -> AzimuthDeg:
    """Apply east-positive declination: true = magnetic + declination."""
    return normalize_azimuth(float(magnetic) + float(decl))


def parse_grid(text: str) -> DeclinationGrid:
    """Parse the declgrid v1 text format; malformed lines raise ParseError."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty grid file", line=1)
    header = lines[0].split()
    if len(header) != 8 or header[0] != GRID_HEADER_TAG or header[1] != GRID_FORMAT_VERSION:
        raise ParseError(
            f"expected header '{GRID_HEADER_TAG} {GRID_FORMAT_VERSION} "
            "<lat_min> <lat_max> <lat_step> <lon_min> <lon_max> <lon_step>'",
            line=1,
        )
    try:
        lat_min, lat_max, lat_step, lon_min, lon_max, lon_step = (float(f) for f in header[2:])
    except ValueError:
        raise ParseError("header bounds/steps must be numeric", line=1) from None

    rows: list[tuple[float, ...]] = []
    row_lines: list[int] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            rows.append(tuple(float(f) for f in raw.split()))
        except ValueError:
            raise ParseError("non-numeric declination value", line=lineno) from None
        row_lines.append(lineno)

    try:
        return DeclinationGrid(lat_min, lat_max, lat_step, lon_min, lon_max, lon_step, tuple(rows))
    except ValueError as exc:
        # Map dimension/range violations back onto a file line where possible.
        msg = str(exc)
        line = 1
        if msg.startswith("row "):
            idx = int(msg.split(":", 1)[0].split()[1])
            line = row_lines[idx] if idx < len(row_lines) else row_lines[-1]
        raise ParseError(msg, line=line) from None


def load_grid(path: str) -> DeclinationGrid:
    """Read and parse a declgrid file from disk."""
    with open(path, encoding="utf-8") as fh:
        return parse_grid(fh.read())
