"""SO(3) and earth-frame mathematics shared by every estimator."""

import math

import numpy as np

from sinsalign.core.data.unit import wrap_deg
from sinsalign.nav.domain import EarthParams, EulerAngles, IntegrationDivergenceError, Matrix3, Vector3

SMALL_ANGLE = 1e-8
ORTHONORMAL_LIMIT = 0.1
GIMBAL_LOCK_DEG = 89.999

_IDENTITY = np.eye(3)


def skew(v: Vector3) -> Matrix3:
    """Antisymmetric matrix with ``skew(v) @ w == cross(v, w)``."""

    x, y, z = float(v[0]), float(v[1]), float(v[2])
    return np.array(
        [
            [0.0, -z, y],
            [z, 0.0, -x],
            [-y, x, 0.0],
        ]
    )


def vee(m: Matrix3) -> Vector3:
    """Inverse of :func:`skew` applied to the antisymmetric part of ``m``."""

    return 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def so3_exp(v: Vector3) -> Matrix3:
    """Rodrigues formula for exp(skew(v)).

    Below :data:`SMALL_ANGLE` the second-order series I + K + K²/2 is used.
    """

    k = skew(v)
    theta = math.sqrt(float(v[0]) ** 2 + float(v[1]) ** 2 + float(v[2]) ** 2)
    k2 = k @ k
    if theta < SMALL_ANGLE:
        return _IDENTITY + k + 0.5 * k2
    return _IDENTITY + (math.sin(theta) / theta) * k + ((1.0 - math.cos(theta)) / (theta * theta)) * k2


def so3_log(r: Matrix3) -> Vector3:
    """Rotation vector of ``r`` with norm in [0, pi].

    Near pi the axis is read from the largest-diagonal column of the symmetric part,
    with the sign taken from the antisymmetric part; at exactly pi the first nonzero
    component is made positive.
    """

    r = np.asarray(r, dtype=np.float64)
    w = vee(r)
    sin_theta = float(np.linalg.norm(w))
    cos_theta = 0.5 * (float(np.trace(r)) - 1.0)
    theta = math.atan2(sin_theta, cos_theta)

    if theta < SMALL_ANGLE:
        return w.copy()
    if math.pi - theta > 1e-4:
        return (theta / sin_theta) * w

    # (R + R^T)/2 - cos(theta) I = (1 - cos(theta)) a a^T
    outer = 0.5 * (r + r.T) - cos_theta * _IDENTITY
    col = int(np.argmax(np.diag(outer)))
    axis = outer[:, col] / math.sqrt(max(outer[col, col], 1e-300))
    axis /= np.linalg.norm(axis)
    if float(np.dot(axis, w)) < 0.0:
        axis = -axis
    elif sin_theta == 0.0:
        nonzero = np.flatnonzero(np.abs(axis) > 1e-12)
        if nonzero.size and axis[nonzero[0]] < 0.0:
            axis = -axis
    return theta * axis


def orthonormality_error(r: Matrix3) -> float:
    """Frobenius norm of R^T R - I."""

    return float(np.linalg.norm(r.T @ r - _IDENTITY))


def orthonormalize(r: Matrix3) -> Matrix3:
    """Nearest rotation to ``r`` (polar projection through the SVD).

    :raises IntegrationDivergenceError: If ``r`` is too far from SO(3).
    """

    r = np.asarray(r, dtype=np.float64)
    error = orthonormality_error(r)
    if not error < ORTHONORMAL_LIMIT:
        raise IntegrationDivergenceError(f"matrix is not near a rotation: ||R^T R - I||_F = {error:.3e}")
    u, _, vt = np.linalg.svd(r)
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def is_rotation(r: Matrix3, tol: float = 1e-9) -> bool:
    return orthonormality_error(r) < tol and abs(float(np.linalg.det(r)) - 1.0) < tol


def rotation_angle(r: Matrix3) -> float:
    """Angle of ``r`` in radians."""

    return float(np.linalg.norm(so3_log(r)))


def earth_rotation_dcm(p: EarthParams, t: float) -> Matrix3:
    """C_n^{in0}(t): rotation of the navigation frame since t = 0 seen from the inertial frame."""

    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    return so3_exp(t * p.omega_ie_n)


def gravity_n(p: EarthParams) -> Vector3:
    """Gravity vector in the east-north-up frame."""

    return np.array([0.0, 0.0, -p.gravity_mag])


def rot_z(angle: float) -> Matrix3:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_x(angle: float) -> Matrix3:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> Matrix3:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def heading_pitch_roll_to_dcm(heading_deg: float, pitch_deg: float = 0.0, roll_deg: float = 0.0) -> Matrix3:
    """C_b^n = Rz(-heading) Rx(pitch) Ry(roll)."""

    return rot_z(-math.radians(heading_deg)) @ rot_x(math.radians(pitch_deg)) @ rot_y(math.radians(roll_deg))


def dcm_to_heading_pitch_roll(r: Matrix3) -> EulerAngles:
    """Decompose C_b^n into heading / pitch / roll in degrees."""

    pitch = math.degrees(math.asin(max(-1.0, min(1.0, float(r[2, 1])))))
    if abs(pitch) > GIMBAL_LOCK_DEG:
        # roll folded into heading
        heading = math.degrees(math.atan2(-float(r[1, 0]), float(r[0, 0])))
        return EulerAngles(heading=wrap_deg(heading), pitch=pitch, roll=0.0, gimbal_lock=True)
    heading = math.degrees(math.atan2(float(r[0, 1]), float(r[1, 1])))
    roll = math.degrees(math.atan2(-float(r[2, 0]), float(r[2, 2])))
    return EulerAngles(heading=wrap_deg(heading), pitch=pitch, roll=wrap_deg(roll))


def heading_deg(r: Matrix3) -> float:
    """Heading of C_b^n in degrees, (-180, 180]."""

    return wrap_deg(math.degrees(math.atan2(float(r[0, 1]), float(r[1, 1]))))
