"""
Optimization-based coarse alignment.

Attitude tracking of C_b^{ĩb0}, accumulation of the specific-force integral
F̃ (in ĩb0) and the gravity integral G (in in0), and the SVD solution of the
Wahba problem for the constant attitude C_{ib0}^{in0}. The output attitude is

    C_b^n = C_n^{in0}(t)^T · C_{ib0}^{in0} · C_b^{ĩb0}(t)
"""

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.transform import Rotation

from sinsalign.core.log.alignLogger import logger
from sinsalign.nav.domain import (
    DegenerateGeometryError,
    EarthParams,
    ImuSample,
    ImuStream,
    Matrix3,
    Vector3,
)
from sinsalign.nav.rotation import earth_rotation_dcm, gravity_n, orthonormalize, so3_exp

REORTHONORMALIZE_EVERY = 100
DEGENERATE_RATIO = 1e-12


@dataclass(frozen=True, slots=True)
class TrackState:
    """Running attitude and vector integrals of the tracker.

    Attributes:
        t: time of the next sample to be accumulated.
        C: tracked C_b^{ĩb0}.
        F: accumulated specific-force integral F̃ in ĩb0 (m/s).
        G: accumulated gravity integral G in in0 (m/s).
        steps: attitude updates applied so far, drives the re-orthonormalization cadence.
    """

    t: float = 0.0
    C: Matrix3 = field(default_factory=lambda: np.eye(3))
    F: Vector3 = field(default_factory=lambda: np.zeros(3))
    G: Vector3 = field(default_factory=lambda: np.zeros(3))
    steps: int = 0


@dataclass(frozen=True, slots=True)
class WahbaSolution:
    """Optimal C_{ib0}^{in0} with the objective value at the optimum."""

    R_hat: Matrix3
    residual_cost: float
    pair_count: int


@dataclass(frozen=True, slots=True)
class AttitudeEstimate:
    """One epoch of an estimator output; ``C_b_n`` is None while not yet observable."""

    t: float
    C_b_n: Matrix3 | None

    @property
    def observable(self) -> bool:
        return self.C_b_n is not None


def propagate_attitude(s: TrackState, sample: ImuSample, dt: float) -> TrackState:
    """Single-sample Rodrigues update C ← C · exp((dt ω̃)^).

    :raises ValueError: On non-finite samples, non-positive ``dt`` or a step of pi or more.
    """
    if not sample.is_finite():
        raise ValueError(f"non-finite IMU sample at t = {sample.t}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    step = dt * np.asarray(sample.gyro, dtype=np.float64)
    if not float(np.linalg.norm(step)) < math.pi:
        raise ValueError(f"rotation step {np.linalg.norm(step):.3f} rad is not below pi")
    C = s.C @ so3_exp(step)
    steps = s.steps + 1
    if steps % REORTHONORMALIZE_EVERY == 0:
        C = orthonormalize(C)
    return replace(s, C=C, steps=steps)


def accumulate_vectors(s: TrackState, sample: ImuSample, p: EarthParams, dt: float) -> TrackState:
    """Rectangle-rule update of F̃ and G over one sample interval; advances ``t``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    F = s.F + (s.C @ np.asarray(sample.accel, dtype=np.float64)) * dt
    G = s.G - (earth_rotation_dcm(p, s.t) @ gravity_n(p)) * dt
    return replace(s, t=s.t + dt, F=F, G=G)


def step(s: TrackState, sample: ImuSample, p: EarthParams, dt: float) -> TrackState:
    """Process one sample: accumulate with the attitude at the interval start, then propagate."""
    return propagate_attitude(accumulate_vectors(s, sample, p, dt), sample, dt)


@dataclass(frozen=True)
class TrackHistory:
    """Tracker state at every sample boundary k = 0 .. N (time k / rate).

    ``f_rot[k]`` is C_b^{ĩb0}(t_k) · f̃_k, the integrand of F̃ over sample k.
    """

    t: NDArray[np.float64]
    C: NDArray[np.float64]
    F: NDArray[np.float64]
    G: NDArray[np.float64]
    f_rot: NDArray[np.float64]
    rate: float

    def index_at(self, t: float) -> int:
        return int(round(t * self.rate))

    def mean_attitude(self, k0: int, k1: int) -> Matrix3:
        """Average of C over the samples of [t_k0, t_k1)."""
        return self.C[k0:k1].mean(axis=0)


def track_stream(stream: ImuStream, p: EarthParams) -> TrackHistory:
    """Run the tracker over a whole stream.

    Equivalent to applying :func:`step` to every sample; the per-sample increments,
    earth-rotation matrices and integrals are evaluated as array operations and only
    the attitude product stays sequential.
    """
    n = len(stream)
    dt = stream.dt
    if not np.all(np.isfinite(stream.gyro)) or not np.all(np.isfinite(stream.accel)):
        raise ValueError("stream contains non-finite samples")
    steps = stream.gyro * dt
    if n and not float(np.max(np.linalg.norm(steps, axis=1))) < math.pi:
        raise ValueError("a gyro sample rotates by pi or more within one interval")

    C = np.empty((n + 1, 3, 3))
    C[0] = np.eye(3)
    increments = Rotation.from_rotvec(steps).as_matrix() if n else np.empty((0, 3, 3))
    current = C[0]
    for k in range(n):
        current = current @ increments[k]
        if (k + 1) % REORTHONORMALIZE_EVERY == 0:
            current = orthonormalize(current)
        C[k + 1] = current

    f_rot = np.einsum("nij,nj->ni", C[:-1], stream.accel)
    F = np.zeros((n + 1, 3))
    F[1:] = np.cumsum(f_rot * dt, axis=0)

    t = np.arange(n + 1, dtype=np.float64) * dt
    earth = Rotation.from_rotvec(np.outer(t[:-1], p.omega_ie_n)).as_matrix() if n else np.empty((0, 3, 3))
    g_in0 = -np.einsum("nij,j->ni", earth, gravity_n(p))
    G = np.zeros((n + 1, 3))
    G[1:] = np.cumsum(g_in0 * dt, axis=0)
    return TrackHistory(t=t, C=C, F=F, G=G, f_rot=f_rot, rate=stream.rate)


class WahbaAccumulator:
    """Running attitude profile matrix B = Σ G_k F_kᵀ and squared norms of a pair set."""

    def __init__(self):
        self.B = np.zeros((3, 3))
        self.sum_sq = 0.0
        self.count = 0

    def add(self, F: Vector3, G: Vector3) -> None:
        self.B += np.outer(G, F)
        self.sum_sq += float(F @ F + G @ G)
        self.count += 1

    def solve(self) -> WahbaSolution:
        """Minimize Σ‖R F_k - G_k‖² over rotations.

        :raises ValueError: With fewer than two pairs.
        :raises DegenerateGeometryError: When the second singular value of B vanishes.
        """
        if self.count < 2:
            raise ValueError(f"the Wahba problem needs at least 2 pairs, got {self.count}")
        u, s, vt = np.linalg.svd(self.B)
        if not s[0] > 0 or s[1] < DEGENERATE_RATIO * s[0]:
            raise DegenerateGeometryError(f"matched vectors are collinear (singular values {s[0]:.3e}, {s[1]:.3e})")
        d = np.sign(np.linalg.det(u @ vt))
        R_hat = u @ np.diag([1.0, 1.0, d]) @ vt
        cost = max(self.sum_sq - 2.0 * float(np.trace(R_hat @ self.B.T)), 0.0)
        return WahbaSolution(R_hat=R_hat, residual_cost=cost, pair_count=self.count)


def solve_wahba(pairs: Sequence[tuple[Vector3, Vector3]]) -> WahbaSolution:
    """SVD solution of the Wahba problem for pairs ``(F̃_k, G_k)``."""
    acc = WahbaAccumulator()
    for F, G in pairs:
        acc.add(np.asarray(F, dtype=np.float64), np.asarray(G, dtype=np.float64))
    solution = acc.solve()
    return replace(solution, residual_cost=wahba_cost(solution.R_hat, pairs))


def wahba_cost(R: Matrix3, pairs: Sequence[tuple[Vector3, Vector3]]) -> float:
    return float(sum(np.sum((R @ np.asarray(F) - np.asarray(G)) ** 2) for F, G in pairs))


def output_attitude(p: EarthParams, t: float, R: Matrix3, C_tracked: Matrix3) -> Matrix3:
    """C_b^n = C_n^{in0}(t)^T · R · C_b^{ĩb0}."""
    return earth_rotation_dcm(p, t).T @ R @ C_tracked


def coarse_align_history(history: TrackHistory, p: EarthParams, pair_interval: float) -> list[AttitudeEstimate]:
    """OBA output series from a precomputed track history."""
    if not pair_interval > 0:
        raise ValueError(f"pair_interval must be positive, got {pair_interval}")
    stride = int(round(pair_interval * history.rate))
    if stride < 1:
        raise ValueError(f"pair_interval {pair_interval} s is shorter than the sample interval")
    last = history.t.shape[0] - 1

    acc = WahbaAccumulator()
    series: list[AttitudeEstimate] = []
    for k in range(stride, last + 1, stride):
        acc.add(history.F[k], history.G[k])
        if acc.count < 2:
            continue
        t = float(history.t[k])
        try:
            solution = acc.solve()
        except DegenerateGeometryError as exc:
            logger.debug(f"OBA epoch t = {t:.1f} s not yet observable: {exc}")
            series.append(AttitudeEstimate(t=t, C_b_n=None))
            continue
        series.append(AttitudeEstimate(t=t, C_b_n=output_attitude(p, t, solution.R_hat, history.C[k])))
    return series


def coarse_align(samples: ImuStream, p: EarthParams, pair_interval: float = 1.0) -> list[AttitudeEstimate]:
    """OBA coarse alignment: a C_b^n estimate at every pair epoch from the second pair on."""
    if len(samples) == 0:
        raise ValueError("the IMU stream is empty")
    if pair_interval < samples.dt - 1e-12:
        raise ValueError(f"pair_interval {pair_interval} s is shorter than the sample interval {samples.dt} s")
    return coarse_align_history(track_stream(samples, p), p, pair_interval)
