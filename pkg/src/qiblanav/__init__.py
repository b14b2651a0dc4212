"""Qibla navigation toolkit: great-circle geodesy plus a tilt-compensated
compass pipeline verified against a deterministic sensor simulator."""

from .dataio import (
    CityRecord,
    TraceFile,
    load_cities,
    load_declination_grid,
    read_report,
    read_trace,
    summarize,
    write_report,
    write_trace,
)
from .declination import (
    DeclinationDeg,
    DeclinationGrid,
    declination_at,
    load_grid,
    parse_grid,
    to_true_heading,
)
from .geodesy import (
    EARTH,
    EARTH_RADIUS_KM,
    KAABA,
    AzimuthDeg,
    DistanceKm,
    EarthModel,
    GeoCoordinate,
    angular_separation,
    haversine_distance,
    initial_bearing,
    normalize_azimuth,
    qibla_azimuth,
    slc_distance,
)
from .pipeline import (
    DEFAULT_ALPHA,
    DEFAULT_GUIDANCE_THRESHOLD_DEG,
    G,
    CalibrationState,
    FilterState,
    Guidance,
    QiblaPointerState,
    SensorSample,
    calibrate,
    circular_diff,
    filter_heading,
    guidance,
    process,
    run_trace,
    tilt_compensated_heading,
)
from .simulator import (
    MagneticField,
    Scenario,
    TruthRecord,
    generate,
    load_scenario,
    parse_scenario,
    truth_heading_at,
)

__version__ = "0.1.0"

__all__ = [
    "AzimuthDeg",
    "CalibrationState",
    "CityRecord",
    "DEFAULT_ALPHA",
    "DEFAULT_GUIDANCE_THRESHOLD_DEG",
    "DeclinationDeg",
    "DeclinationGrid",
    "DistanceKm",
    "EARTH",
    "EARTH_RADIUS_KM",
    "EarthModel",
    "FilterState",
    "G",
    "GeoCoordinate",
    "Guidance",
    "KAABA",
    "MagneticField",
    "QiblaPointerState",
    "Scenario",
    "SensorSample",
    "TraceFile",
    "TruthRecord",
    "angular_separation",
    "calibrate",
    "circular_diff",
    "declination_at",
    "filter_heading",
    "generate",
    "guidance",
    "haversine_distance",
    "initial_bearing",
    "load_cities",
    "load_declination_grid",
    "load_grid",
    "load_scenario",
    "normalize_azimuth",
    "parse_grid",
    "parse_scenario",
    "process",
    "qibla_azimuth",
    "read_report",
    "read_trace",
    "run_trace",
    "slc_distance",
    "summarize",
    "tilt_compensated_heading",
    "to_true_heading",
    "truth_heading_at",
    "write_report",
    "write_trace",
]
