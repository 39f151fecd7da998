"""Unit conversion helpers for inertial sensor quantities."""

import math

STANDARD_GRAVITY = 9.80665  # m/s^2, defines 1 g
SECONDS_PER_HOUR = 3600.0


def deg_per_hour_to_rad_per_sec(value: float) -> float:
    """Convert a gyro rate from °/h to rad/s."""

    return math.radians(value) / SECONDS_PER_HOUR


def rad_per_sec_to_deg_per_hour(value: float) -> float:
    """Convert a gyro rate from rad/s to °/h."""

    return math.degrees(value) * SECONDS_PER_HOUR


def milli_g_to_m_s2(value: float) -> float:
    """Convert an acceleration from mg to m/s^2 (1 mg = 9.80665e-3 m/s^2)."""

    return value * STANDARD_GRAVITY * 1e-3


def m_s2_to_milli_g(value: float) -> float:
    """Convert an acceleration from m/s^2 to mg."""

    return value / (STANDARD_GRAVITY * 1e-3)


def deg_per_sqrt_hour_to_rad_per_sqrt_sec(value: float) -> float:
    """Convert an angular random walk density from °/√h to rad/√s."""

    return math.radians(value) / math.sqrt(SECONDS_PER_HOUR)


def micro_g_per_sqrt_hz_to_m_s_per_sqrt_sec(value: float) -> float:
    """Convert a velocity random walk density from µg/√Hz to (m/s)/√s."""

    return value * STANDARD_GRAVITY * 1e-6


def wrap_deg(angle: float) -> float:
    """Wrap an angle in degrees to the interval (-180, 180]."""

    wrapped = math.fmod(angle, 360.0)
    if wrapped <= -180.0:
        wrapped += 360.0
    elif wrapped > 180.0:
        wrapped -= 360.0
    return wrapped
