"""Ordered weighted averages of rational functions by sparse moment-SDP
relaxations, with a continuous single-facility location front-end."""

__version__ = "0.1.0"

from .location import (
    VARIANTS,
    InvalidNormError,
    LocationInstance,
    NormLift,
    build_center,
    build_general_location,
    build_kcentrum_loc,
    build_lifted,
    build_norm_lift,
    build_range,
    build_trimmed_loc,
    build_weber,
    calibrate_ball,
    default_ball,
    random_instance,
)

__all__ = [
    "__version__",
    "VARIANTS",
    "InvalidNormError",
    "LocationInstance",
    "NormLift",
    "build_center",
    "build_general_location",
    "build_kcentrum_loc",
    "build_lifted",
    "build_norm_lift",
    "build_range",
    "build_trimmed_loc",
    "build_weber",
    "calibrate_ball",
    "default_ball",
    "random_instance",
]
