"""
Deterministic IMU simulator for mooring self-alignment scenarios.

The true attitude is the initial C_b^n(0) followed by a continuous turntable
rotation about body z while the navigation frame turns with the earth:

    C_b^n(t)     = C_b^n(0) · Rz(turntable_rate · t)
    C_b^{ib0}(t) = C_b^n(0)^T · C_n^{in0}(t) · C_b^n(t)

Gyro samples are the constant rates reproducing the true body rotation over
each sample interval; accelerometer samples are the specific force at the
start of the interval. Both are then corrupted with constant bias and white
noise of the configured densities.
"""

import math
from dataclasses import replace

import numpy as np
from scipy.spatial.transform import Rotation

from sinsalign.nav.domain import GroundTruth, ImuStream, ScenarioConfig
from sinsalign.nav.rotation import heading_deg
from sinsalign.core.log.alignLogger import logger


def sway_acceleration(cfg: ScenarioConfig, t: np.ndarray) -> np.ndarray:
    """Horizontal sway acceleration in the navigation frame, shape (len(t), 3).

    The acceleration is a cosine along the east axis, so the induced velocity is a
    zero-mean sine that returns to zero after every full period.
    """
    acc = np.zeros((t.shape[0], 3))
    if cfg.sway_accel_amp > 0:
        acc[:, 0] = cfg.sway_accel_amp * np.cos(2.0 * math.pi * t / cfg.sway_period)
    return acc


def true_body_to_nav(cfg: ScenarioConfig, t: np.ndarray) -> np.ndarray:
    """True C_b^n at the given times, shape (len(t), 3, 3)."""
    turntable = Rotation.from_rotvec(np.outer(t, [0.0, 0.0, cfg.turntable_rate]))
    return np.einsum("ij,njk->nik", cfg.initial_attitude, turntable.as_matrix())


def ideal_measurements(cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Error-free gyro and accelerometer samples.

    Returns ``(t_samples, gyro, accel, C_b_n_truth)`` where the truth array holds one
    more epoch than the samples.
    """
    n = cfg.sample_count
    dt = 1.0 / cfg.imu_rate
    t_truth = np.arange(n + 1, dtype=np.float64) * dt
    C_b_n = true_body_to_nav(cfg, t_truth)
    C_n_b = np.transpose(C_b_n[:-1], (0, 2, 1))

    # body increment over [t_k, t_k+1] = exp((C_n^b(t_k) w_ie^n dt)^) · Rz(rate dt)
    earth_increment = Rotation.from_rotvec(np.einsum("nij,j->ni", C_n_b, cfg.earth.omega_ie_n) * dt)
    table_increment = Rotation.from_rotvec([0.0, 0.0, cfg.turntable_rate * dt])
    gyro = (earth_increment * table_increment).as_rotvec() / dt

    up_reaction = np.array([0.0, 0.0, cfg.earth.gravity_mag])
    f_n = up_reaction[None, :] + sway_acceleration(cfg, t_truth[:-1])
    accel = np.einsum("nij,nj->ni", C_n_b, f_n)
    return t_truth[:-1], gyro, accel, C_b_n


def simulate(cfg: ScenarioConfig) -> tuple[ImuStream, GroundTruth]:
    """Generate the corrupted IMU stream and the matching ground truth.

    Noise standard deviation per sample is density · sqrt(imu_rate). Noise is always
    drawn (gyro block first, then accelerometer) so the stream is bitwise reproducible
    for a given seed regardless of which densities are zero.
    """
    t, gyro, accel, C_b_n = ideal_measurements(cfg)
    n = t.shape[0]

    rng = np.random.default_rng(cfg.rng_seed)
    gyro_noise = rng.standard_normal((n, 3)) * (cfg.gyro_arw * math.sqrt(cfg.imu_rate))
    accel_noise = rng.standard_normal((n, 3)) * (cfg.accel_vrw * math.sqrt(cfg.imu_rate))

    stream = ImuStream(
        t=t,
        gyro=gyro + cfg.gyro_bias[None, :] + gyro_noise,
        accel=accel + cfg.accel_bias[None, :] + accel_noise,
        rate=cfg.imu_rate,
    )
    truth = GroundTruth(
        t=np.arange(n + 1, dtype=np.float64) / cfg.imu_rate,
        C_b_n=C_b_n,
        gyro_bias=cfg.gyro_bias.copy(),
        accel_bias=cfg.accel_bias.copy(),
        rate=cfg.imu_rate,
    )
    logger.debug(
        f"Simulated {n} samples over {cfg.duration:.1f} s at {cfg.imu_rate:.1f} Hz "
        f"(seed {cfg.rng_seed}, turntable {math.degrees(cfg.turntable_rate):.2f} deg/s)"
    )
    return stream, truth


def error_free(cfg: ScenarioConfig) -> ScenarioConfig:
    """Same scenario with biases and noise removed (the truth is unchanged)."""
    return replace(cfg, gyro_bias=np.zeros(3), accel_bias=np.zeros(3), gyro_arw=0.0, accel_vrw=0.0)


def true_heading_deg(gt: GroundTruth, t: float) -> float:
    """True heading at the ground-truth epoch nearest to ``t``.

    :raises ValueError: If ``t`` is outside the simulated span.
    """
    return heading_deg(gt.attitude_at(t))


def true_heading_series(gt: GroundTruth, times: np.ndarray) -> np.ndarray:
    return np.array([true_heading_deg(gt, float(t)) for t in times])
