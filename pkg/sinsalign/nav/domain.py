"""
Core domain models for the alignment toolkit.

Holds the value types shared by the simulator, the estimators and the bench:
earth parameters, attitude angles, IMU samples and streams, scenario
configuration and ground truth, plus the exception hierarchy. No estimation
logic lives here.

Conventions:
    navigation frame n  – east-north-up
    body frame b        – x right, y forward, z up
    C_a_b               – DCM mapping coordinates from frame a to frame b
"""

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from numpy.typing import NDArray

from sinsalign.core.data.unit import STANDARD_GRAVITY

Vector3 = NDArray[np.float64]
Matrix3 = NDArray[np.float64]

EARTH_RATE = 7.292115e-5  # rad/s


class AlignError(Exception):
    """Base class of every error raised by the toolkit."""


class IntegrationDivergenceError(AlignError):
    """A tracked DCM drifted too far from SO(3) to be projected back."""


class DegenerateGeometryError(AlignError):
    """The matched vector set does not determine a rotation."""


class KeyframeOrderError(AlignError):
    """A keyframe was added out of order or at the wrong interval."""


class InnovationError(AlignError):
    """The Kalman innovation covariance is not invertible."""


def as_vector3(value, name: str = "vector") -> Vector3:
    """Return ``value`` as a finite float64 array of shape (3,).

    :raises ValueError: If the value has the wrong size or non-finite components.
    """
    vec = np.asarray(value, dtype=np.float64).reshape(-1)
    if vec.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {np.shape(value)}")
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{name} has non-finite components: {vec}")
    return vec


@dataclass(frozen=True, slots=True)
class EarthParams:
    """Local earth model: latitude, rotation rate and gravity magnitude."""

    latitude: float
    earth_rate: float = EARTH_RATE
    gravity_mag: float = STANDARD_GRAVITY

    def __post_init__(self):
        if not abs(self.latitude) <= math.pi / 2:
            raise ValueError(f"latitude must lie in [-pi/2, pi/2], got {self.latitude}")
        if not self.earth_rate > 0:
            raise ValueError(f"earth_rate must be positive, got {self.earth_rate}")
        if not self.gravity_mag > 0:
            raise ValueError(f"gravity_mag must be positive, got {self.gravity_mag}")

    @property
    def omega_ie_n(self) -> Vector3:
        """Earth rotation rate resolved in the east-north-up frame."""
        return self.earth_rate * np.array([0.0, math.cos(self.latitude), math.sin(self.latitude)])


@dataclass(frozen=True, slots=True)
class EulerAngles:
    """Heading / pitch / roll in degrees.

    Attributes:
        heading: bow direction east of north, in (-180, 180].
        pitch: nose-up positive, in [-90, 90].
        roll: right-side-down positive, in (-180, 180].
        gimbal_lock: set when |pitch| exceeds 89.999°; only heading - roll is meaningful then.
    """

    heading: float
    pitch: float
    roll: float
    gimbal_lock: bool = False


@dataclass(frozen=True, slots=True)
class ImuSample:
    """One gyro/accelerometer measurement pair in the body frame."""

    t: float
    gyro: Vector3
    accel: Vector3

    def is_finite(self) -> bool:
        return bool(math.isfinite(self.t) and np.all(np.isfinite(self.gyro)) and np.all(np.isfinite(self.accel)))


@dataclass(frozen=True)
class ImuStream:
    """A full IMU recording held as arrays.

    Sample ``k`` is taken at ``t[k]`` and covers the interval ``[t[k], t[k] + dt]``.
    """

    t: NDArray[np.float64]
    gyro: NDArray[np.float64]
    accel: NDArray[np.float64]
    rate: float

    def __post_init__(self):
        n = self.t.shape[0]
        if self.gyro.shape != (n, 3) or self.accel.shape != (n, 3):
            raise ValueError(f"stream arrays disagree: t {self.t.shape}, gyro {self.gyro.shape}, accel {self.accel.shape}")
        if n > 1 and np.any(np.diff(self.t) < 0):
            raise ValueError("stream timestamps must be non-decreasing")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate

    @property
    def duration(self) -> float:
        return len(self) * self.dt

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def __iter__(self) -> Iterator[ImuSample]:
        for k in range(len(self)):
            yield self.sample(k)

    def sample(self, k: int) -> ImuSample:
        return ImuSample(t=float(self.t[k]), gyro=self.gyro[k], accel=self.accel[k])

    def head(self, duration: float) -> "ImuStream":
        """Return the samples taken strictly before ``duration`` seconds."""
        count = int(np.searchsorted(self.t, duration - 0.5 * self.dt, side="right"))
        return ImuStream(t=self.t[:count], gyro=self.gyro[:count], accel=self.accel[:count], rate=self.rate)

    def checksum(self) -> str:
        """SHA-256 over the raw sample bytes; identical streams give identical digests."""
        digest = hashlib.sha256()
        for array in (self.t, self.gyro, self.accel):
            digest.update(np.ascontiguousarray(array, dtype=np.float64).tobytes())
        return digest.hexdigest()


@dataclass(frozen=True)
class ScenarioConfig:
    """Simulation scenario, all quantities in SI units.

    Attributes:
        initial_attitude: true C_b^n at t = 0.
        initial_heading_error_deg: heading offset handed to recursive estimators at start-up.
        turntable_rate: continuous rotation rate about body z (rad/s).
        gyro_arw: angular random walk density (rad/√s).
        accel_vrw: velocity random walk density ((m/s)/√s).
    """

    duration: float = 900.0
    imu_rate: float = 100.0
    earth: EarthParams = field(default_factory=lambda: EarthParams(latitude=math.radians(45.0)))
    initial_attitude: Matrix3 = field(default_factory=lambda: np.eye(3))
    initial_heading_error_deg: float = 0.0
    turntable_rate: float = math.radians(6.0)
    gyro_bias: Vector3 = field(default_factory=lambda: np.zeros(3))
    accel_bias: Vector3 = field(default_factory=lambda: np.zeros(3))
    gyro_arw: float = 0.0
    accel_vrw: float = 0.0
    sway_accel_amp: float = 0.0
    sway_period: float = 8.0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if not self.imu_rate > 0:
            raise ValueError(f"imu_rate must be positive, got {self.imu_rate}")
        if self.sway_accel_amp > 0 and not self.sway_period > 0:
            raise ValueError(f"sway_period must be positive when sway is enabled, got {self.sway_period}")
        if self.gyro_arw < 0 or self.accel_vrw < 0:
            raise ValueError("noise densities must be non-negative")
        object.__setattr__(self, "initial_attitude", np.asarray(self.initial_attitude, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "gyro_bias", as_vector3(self.gyro_bias, "gyro_bias"))
        object.__setattr__(self, "accel_bias", as_vector3(self.accel_bias, "accel_bias"))

    @property
    def sample_count(self) -> int:
        return int(round(self.duration * self.imu_rate))


@dataclass(frozen=True)
class GroundTruth:
    """True attitude history and sensor biases of a simulated run.

    ``C_b_n[k]`` is the true C_b^n at ``t[k] = k / rate`` for k = 0 .. N (one more
    entry than the stream, closing the last sample interval).
    """

    t: NDArray[np.float64]
    C_b_n: NDArray[np.float64]
    gyro_bias: Vector3
    accel_bias: Vector3
    rate: float

    @property
    def duration(self) -> float:
        return float(self.t[-1])

    def index_at(self, t: float) -> int:
        """Index of the ground-truth sample nearest to ``t``.

        :raises ValueError: If ``t`` lies outside ``[0, duration]``.
        """
        if not (-1e-9 <= t <= self.duration + 1e-9):
            raise ValueError(f"t = {t} s is outside the ground truth span [0, {self.duration}] s")
        return int(min(max(round(t * self.rate), 0), len(self.t) - 1))

    def attitude_at(self, t: float) -> Matrix3:
        return self.C_b_n[self.index_at(t)]
