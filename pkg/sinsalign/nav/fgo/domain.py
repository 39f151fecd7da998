"""
Domain models of the factor-graph aligner.

Classes:
    NodeState         – 12-dim error state (φ, δF, ε, ∇) of one keyframe.
    KeyframeSnapshot  – tracker quantities frozen at a keyframe.
    ConstantAttitude  – the constant C_{ib0}^{in0} variable.
    NoiseModel        – diagonal covariances of the INS, measurement and prior factors.
    SolverTraceRow    – one line of the optimizer trace.
    SolveReport       – summary of one optimizer run.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from sinsalign.core.data.unit import deg_per_hour_to_rad_per_sec, milli_g_to_m_s2
from sinsalign.nav.domain import Matrix3, Vector3, as_vector3

STATE_DIM = 12
PHI = slice(0, 3)
DELTA_F = slice(3, 6)
EPS = slice(6, 9)
ACC = slice(9, 12)

IOSF_SIGMA_FLOOR = 1e-4  # m/s, integrated specific-force noise at t = 0
BIAS_WALK_FLOOR = 1e-16
# keeps the INS factor weights finite for error-free sensors
PHI_VAR_FLOOR = 1e-16
DELTA_F_VAR_FLOOR = 1e-14


@dataclass(frozen=True, slots=True)
class NodeState:
    """Error state at a keyframe: misalignment φ (rad), specific-force integral error δF (m/s),
    gyro bias ε (rad/s) and accelerometer bias ∇ (m/s²)."""

    phi: Vector3 = field(default_factory=lambda: np.zeros(3))
    dF: Vector3 = field(default_factory=lambda: np.zeros(3))
    eps: Vector3 = field(default_factory=lambda: np.zeros(3))
    acc: Vector3 = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("phi", "dF", "eps", "acc"):
            object.__setattr__(self, name, as_vector3(getattr(self, name), name))
        if not float(np.linalg.norm(self.phi)) < math.pi:
            raise ValueError(f"misalignment {np.linalg.norm(self.phi):.3f} rad leaves the small-angle regime")

    def to_vector(self) -> NDArray[np.float64]:
        return np.concatenate([self.phi, self.dF, self.eps, self.acc])

    @classmethod
    def from_vector(cls, x: NDArray[np.float64]) -> "NodeState":
        x = np.asarray(x, dtype=np.float64).reshape(STATE_DIM)
        return cls(phi=x[PHI], dF=x[DELTA_F], eps=x[EPS], acc=x[ACC])


@dataclass(frozen=True, slots=True)
class KeyframeSnapshot:
    """Tracker quantities at keyframe ``index``.

    Attributes:
        C: C_b^{ĩb0} at ``t``.
        F: accumulated F̃ at ``t`` (m/s).
        G: accumulated G at ``t`` (m/s).
        f_bar: interval average of C_b^{ĩb0}·f̃ over [t, t + dt]; None until the interval closes.
        C_mean: interval average of C_b^{ĩb0} over [t, t + dt]; when None the bias terms use ``C``.
    """

    index: int
    t: float
    C: Matrix3
    F: Vector3
    G: Vector3
    f_bar: Vector3 | None = None
    C_mean: Matrix3 | None = None

    @property
    def bias_coefficient(self) -> Matrix3:
        """DCM multiplying the biases in the one-step transition."""
        return self.C if self.C_mean is None else self.C_mean

    @property
    def is_closed(self) -> bool:
        return self.f_bar is not None


@dataclass(frozen=True, slots=True)
class ConstantAttitude:
    """The constant C_{ib0}^{in0} variable."""

    R: Matrix3 = field(default_factory=lambda: np.eye(3))


@dataclass(frozen=True)
class NoiseModel:
    """Diagonal covariances of the three factor types.

    Attributes:
        ins_var: 12 variances of the one-step prediction.
        iosf_var_rate: growth of the measurement variance per second ((m/s)²/s).
        iosf_var_floor: measurement variance at t = 0 ((m/s)²).
        prior_var: 12 variances of the prior on the first node.
    """

    ins_var: NDArray[np.float64]
    iosf_var_rate: float
    iosf_var_floor: float
    prior_var: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "ins_var", np.asarray(self.ins_var, dtype=np.float64).reshape(STATE_DIM))
        object.__setattr__(self, "prior_var", np.asarray(self.prior_var, dtype=np.float64).reshape(STATE_DIM))
        if np.any(self.ins_var <= 0) or np.any(self.prior_var <= 0):
            raise ValueError("INS and prior variances must be positive")
        if self.iosf_var_floor <= 0 or self.iosf_var_rate < 0:
            raise ValueError("measurement variance must be positive")

    def iosf_weights(self, t: NDArray[np.float64]) -> NDArray[np.float64]:
        """Per-keyframe scalar information 1 / σ² of the measurement factor."""
        return 1.0 / (self.iosf_var_rate * np.asarray(t, dtype=np.float64) + self.iosf_var_floor)

    @classmethod
    def from_sensor_noise(cls, gyro_arw: float, accel_vrw: float, dt: float) -> "NoiseModel":
        """Noise model derived from the sensor densities and the keyframe interval.

        White gyro / accelerometer noise propagated over ``dt`` gives the φ and δF rows;
        the bias rows get a small random-walk floor. The prior is weak.
        """
        ins_var = np.concatenate(
            [
                np.full(3, max(gyro_arw**2 * dt, PHI_VAR_FLOOR)),
                np.full(3, max(accel_vrw**2 * dt, DELTA_F_VAR_FLOOR)),
                np.full(3, BIAS_WALK_FLOOR),
                np.full(3, BIAS_WALK_FLOOR),
            ]
        )
        prior_var = np.concatenate(
            [
                np.full(3, 1.0),
                np.full(3, 1.0),
                np.full(3, deg_per_hour_to_rad_per_sec(10.0) ** 2),
                np.full(3, milli_g_to_m_s2(1.0) ** 2),
            ]
        )
        return cls(ins_var=ins_var, iosf_var_rate=accel_vrw**2, iosf_var_floor=IOSF_SIGMA_FLOOR**2, prior_var=prior_var)


@dataclass(frozen=True, slots=True)
class SolverTraceRow:
    iteration: int
    cost: float
    damping: float
    step_norm: float


@dataclass
class SolveReport:
    """Summary of one optimizer run; ``final_cost <= initial_cost`` whenever it converged."""

    iterations: int
    initial_cost: float
    final_cost: float
    converged: bool
    damping_final: float
    trace: list[SolverTraceRow] = field(default_factory=list)
