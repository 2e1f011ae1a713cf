"""Qibla azimuth, great-circle distance and a simulated compass pipeline."""

from ._core import (
    EARTH_RADIUS_KM,
    KAABA,
    QiblaError,
    Trace,
    __version__,
    calibrate,
    circular_diff,
    declination_at,
    guidance,
    haversine_distance,
    initial_bearing,
    normalize_azimuth,
    qibla_azimuth,
    read_trace,
    run_pipeline,
    simulate,
    slc_distance,
)

__all__ = [
    "EARTH_RADIUS_KM",
    "KAABA",
    "QiblaError",
    "Trace",
    "__version__",
    "calibrate",
    "circular_diff",
    "declination_at",
    "guidance",
    "haversine_distance",
    "initial_bearing",
    "normalize_azimuth",
    "qibla_azimuth",
    "read_trace",
    "run_pipeline",
    "simulate",
    "slc_distance",
]
