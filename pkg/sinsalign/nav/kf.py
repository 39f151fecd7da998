"""
Two-procedure alignment baseline: OBA coarse alignment followed by a 12-state
error-model Kalman filter with zero-velocity measurements.

State x = (φ, δv, ε, ∇) in the navigation frame, with the computed attitude
C̃_b^n = (I − skew(φ))·C_b^n and δv = ṽ − v. On a stationary base:

    φ̇  = −skew(ω_ie^n)·φ − C_b^n·ε
    δv̇ = skew(f^n)·φ − 2·skew(ω_ie^n)·δv + C_b^n·∇

Attitude and velocity are corrected after every measurement update (closed
loop); the bias states stay in the filter.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.transform import Rotation

from sinsalign.core.data.unit import deg_per_hour_to_rad_per_sec, milli_g_to_m_s2
from sinsalign.core.log.alignLogger import logger
from sinsalign.nav.coarse import AttitudeEstimate, coarse_align
from sinsalign.nav.domain import DegenerateGeometryError, EarthParams, ImuStream, InnovationError, Matrix3, Vector3
from sinsalign.nav.rotation import gravity_n, heading_deg, orthonormalize, rot_z, skew, so3_exp

STATE_DIM = 12
PHI = slice(0, 3)
DV = slice(3, 6)
EPS = slice(6, 9)
ACC = slice(9, 12)

DEFAULT_COARSE_WINDOW = 120.0
DEFAULT_FILTER_INTERVAL = 0.1
DEFAULT_VELOCITY_NOISE = 0.01
REORTHONORMALIZE_EVERY = 100
SYMMETRY_TOLERANCE = 1e-12
MAX_INNOVATION_CONDITION = 1e15

# keep P positive-definite for error-free sensors
PHI_PSD_FLOOR = 1e-16
DV_PSD_FLOOR = 1e-14


@dataclass(frozen=True)
class KfState:
    """Error-state estimate ``x`` with covariance ``P``."""

    x: NDArray[np.float64]
    P: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.float64).reshape(STATE_DIM))
        P = np.asarray(self.P, dtype=np.float64)
        if P.shape != (STATE_DIM, STATE_DIM):
            raise ValueError(f"P must be {STATE_DIM}x{STATE_DIM}, got {P.shape}")
        object.__setattr__(self, "P", P)

    def is_valid(self) -> bool:
        """P symmetric within 1e-12 with positive eigenvalues."""
        if not float(np.max(np.abs(self.P - self.P.T))) <= SYMMETRY_TOLERANCE * max(1.0, float(np.max(np.abs(self.P)))):
            return False
        return bool(np.all(np.linalg.eigvalsh(0.5 * (self.P + self.P.T)) > 0))


@dataclass(frozen=True)
class KfTuning:
    """Initial uncertainty and noise of the filter (SI units).

    Attributes:
        attitude_std: initial φ standard deviation per axis (rad); the heading axis is wide.
        process_psd: 12 spectral densities of the continuous process noise.
        velocity_noise: zero-velocity measurement standard deviation (m/s).
    """

    attitude_std: Vector3 = field(default_factory=lambda: np.radians([1.0, 1.0, 10.0]))
    velocity_std: float = 0.1
    gyro_bias_std: float = deg_per_hour_to_rad_per_sec(10.0)
    accel_bias_std: float = milli_g_to_m_s2(1.0)
    process_psd: NDArray[np.float64] = field(default_factory=lambda: default_process_psd(0.0, 0.0))
    velocity_noise: float = DEFAULT_VELOCITY_NOISE

    def initial_state(self) -> KfState:
        std = np.concatenate(
            [
                np.asarray(self.attitude_std, dtype=np.float64),
                np.full(3, self.velocity_std),
                np.full(3, self.gyro_bias_std),
                np.full(3, self.accel_bias_std),
            ]
        )
        return KfState(x=np.zeros(STATE_DIM), P=np.diag(std**2))


def default_process_psd(gyro_arw: float, accel_vrw: float) -> NDArray[np.float64]:
    """Process noise from the sensor densities; biases are modeled as constants."""
    return np.concatenate(
        [
            np.full(3, max(gyro_arw**2, PHI_PSD_FLOOR)),
            np.full(3, max(accel_vrw**2, DV_PSD_FLOOR)),
            np.zeros(6),
        ]
    )


def system_matrix(C_b_n: Matrix3, f_n: Vector3, p: EarthParams) -> NDArray[np.float64]:
    """Continuous-time error dynamics F of the stationary-base model."""
    w = skew(p.omega_ie_n)
    F = np.zeros((STATE_DIM, STATE_DIM))
    F[PHI, PHI] = -w
    F[PHI, EPS] = -C_b_n
    F[DV, PHI] = skew(f_n)
    F[DV, DV] = -2.0 * w
    F[DV, ACC] = C_b_n
    return F


def transition_matrix(F: NDArray[np.float64], dt: float) -> NDArray[np.float64]:
    """Φ = I + F·dt + (F·dt)²/2."""
    Fdt = F * dt
    return np.eye(STATE_DIM) + Fdt + 0.5 * (Fdt @ Fdt)


def kf_predict(
    s: KfState,
    C_b_n: Matrix3,
    f_b: Vector3,
    p: EarthParams,
    dt: float,
    process_psd: NDArray[np.float64] | None = None,
) -> KfState:
    """Time update over ``dt``: x ← Φ·x, P ← Φ·P·Φᵀ + Q·dt."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    q = default_process_psd(0.0, 0.0) if process_psd is None else np.asarray(process_psd, dtype=np.float64)
    phi = transition_matrix(system_matrix(C_b_n, C_b_n @ np.asarray(f_b, dtype=np.float64), p), dt)
    P = phi @ s.P @ phi.T + np.diag(q * dt)
    return KfState(x=phi @ s.x, P=0.5 * (P + P.T))


def measurement_matrix() -> NDArray[np.float64]:
    """H selecting the δv block."""
    H = np.zeros((3, STATE_DIM))
    H[:, DV] = np.eye(3)
    return H


def kf_update(s: KfState, observed_velocity_error: Vector3, velocity_noise: float = DEFAULT_VELOCITY_NOISE) -> KfState:
    """Zero-velocity measurement update with the Joseph-form covariance.

    :raises InnovationError: If the innovation covariance cannot be inverted.
    """
    if not velocity_noise > 0:
        raise InnovationError(f"velocity measurement noise must be positive, got {velocity_noise}")
    H = measurement_matrix()
    R = np.eye(3) * velocity_noise**2
    S = H @ s.P @ H.T + R
    if not np.all(np.isfinite(S)):
        raise InnovationError("innovation covariance has non-finite entries")
    cond = float(np.linalg.cond(S))
    if cond > MAX_INNOVATION_CONDITION:
        raise InnovationError(f"innovation covariance is not invertible (cond {cond:.3e})")
    K = np.linalg.solve(S, H @ s.P).T
    innovation = np.asarray(observed_velocity_error, dtype=np.float64) - H @ s.x
    x = s.x + K @ innovation
    I_KH = np.eye(STATE_DIM) - K @ H
    P = I_KH @ s.P @ I_KH.T + K @ R @ K.T
    return KfState(x=x, P=0.5 * (P + P.T))


@dataclass
class KfResult:
    """Heading output of the two-procedure run and the filter's bias history."""

    estimates: list[AttitudeEstimate] = field(default_factory=list)
    bias_times: list[float] = field(default_factory=list)
    gyro_bias: list[Vector3] = field(default_factory=list)
    accel_bias: list[Vector3] = field(default_factory=list)
    handoff_heading_deg: float = math.nan
    final_state: KfState | None = None


def run_two_procedure(
    samples: ImuStream,
    p: EarthParams,
    coarse_window: float = DEFAULT_COARSE_WINDOW,
    *,
    pair_interval: float = 1.0,
    filter_interval: float = DEFAULT_FILTER_INTERVAL,
    output_interval: float = 1.0,
    initial_heading_error_deg: float = 0.0,
    tuning: KfTuning | None = None,
) -> KfResult:
    """OBA for ``coarse_window`` seconds, then the zero-velocity Kalman filter to the end.

    The output during the coarse window is the OBA series; afterwards one attitude
    is emitted every ``output_interval`` seconds.

    :raises ValueError: If the coarse window is not shorter than the stream.
    :raises DegenerateGeometryError: If the coarse stage cannot determine an attitude.
    """
    if not coarse_window < samples.duration:
        raise ValueError(f"coarse_window {coarse_window} s must be shorter than the stream ({samples.duration} s)")
    tuning = tuning or KfTuning()
    dt = samples.dt
    block = max(int(round(filter_interval / dt)), 1)
    output_every = max(int(round(output_interval / dt)), 1)

    coarse = coarse_align(samples.head(coarse_window), p, pair_interval)
    if not coarse or coarse[-1].C_b_n is None:
        raise DegenerateGeometryError(f"coarse alignment has no observable attitude after {coarse_window} s")
    result = KfResult(estimates=list(coarse))

    C = rot_z(-math.radians(initial_heading_error_deg)) @ coarse[-1].C_b_n
    result.handoff_heading_deg = heading_deg(C)
    logger.info(f"KF hand-off at {coarse_window:.1f} s with heading {result.handoff_heading_deg:.4f} deg")

    k0 = len(samples.head(coarse_window))
    increments = Rotation.from_rotvec(samples.gyro[k0:] * dt).as_matrix()
    earth_step = so3_exp(-p.omega_ie_n * dt)
    g_n = gravity_n(p)
    coriolis = 2.0 * p.omega_ie_n

    state = tuning.initial_state()
    v = np.zeros(3)
    f_sum = np.zeros(3)
    count = 0
    for i, k in enumerate(range(k0, len(samples))):
        f_n = C @ samples.accel[k]
        v = v + (f_n + g_n - np.cross(coriolis, v)) * dt
        C = earth_step @ C @ increments[i]
        if (i + 1) % REORTHONORMALIZE_EVERY == 0:
            C = orthonormalize(C)
        f_sum += f_n
        count += 1

        if count == block:
            f_b_mean = C.T @ (f_sum / count)
            state = kf_predict(state, C, f_b_mean, p, count * dt, tuning.process_psd)
            state = kf_update(state, v, tuning.velocity_noise)
            C = orthonormalize(so3_exp(state.x[PHI]) @ C)
            v = v - state.x[DV]
            x = state.x.copy()
            x[PHI] = 0.0
            x[DV] = 0.0
            state = KfState(x=x, P=state.P)
            f_sum[:] = 0.0
            count = 0

        if (k + 1) % output_every == 0:
            t = (k + 1) * dt
            result.estimates.append(AttitudeEstimate(t=t, C_b_n=C.copy()))
            result.bias_times.append(t)
            result.gyro_bias.append(state.x[EPS].copy())
            result.accel_bias.append(state.x[ACC].copy())

    result.final_state = state
    return result
