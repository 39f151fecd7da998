"""
Keyframe-driven alignment with the factor graph.

Keyframes are cut from the attitude-track history every ``keyframe_interval``
seconds; the whole graph is re-solved at every ``resolve_stride``-th keyframe,
warm-started from the previous optimum, and each solve yields one output
attitude and one bias estimate.
"""

from dataclasses import dataclass, field

import numpy as np

from sinsalign.core.log.alignLogger import logger
from sinsalign.nav.coarse import AttitudeEstimate, TrackHistory, output_attitude, track_stream
from sinsalign.nav.domain import DegenerateGeometryError, EarthParams, ImuStream, Matrix3, Vector3
from sinsalign.nav.fgo.domain import ConstantAttitude, KeyframeSnapshot, NodeState, NoiseModel, SolveReport
from sinsalign.nav.fgo.graph import FactorGraph
from sinsalign.nav.fgo.solver import MAX_ITERATIONS, solve
from sinsalign.nav.rotation import so3_exp

DEFAULT_KEYFRAME_INTERVAL = 2.0


@dataclass(frozen=True, slots=True)
class BiasEstimate:
    """Bias estimates after the solve at ``t``: gyro in rad/s, accelerometer in m/s²."""

    t: float
    gyro_bias: Vector3
    accel_bias: Vector3


@dataclass
class FgoResult:
    estimates: list[AttitudeEstimate] = field(default_factory=list)
    bias_series: list[BiasEstimate] = field(default_factory=list)
    reports: list[tuple[float, SolveReport]] = field(default_factory=list)
    graph: FactorGraph | None = None

    @property
    def final_bias(self) -> BiasEstimate | None:
        return self.bias_series[-1] if self.bias_series else None


def attitude_output(nodes: list[NodeState], R: ConstantAttitude, snap: KeyframeSnapshot, p: EarthParams) -> Matrix3:
    """C_b^n = C_n^{in0}(t_n)ᵀ · R* · exp(φ_n*) · C_n."""
    phi = nodes[snap.index].phi
    return output_attitude(p, snap.t, R.R, so3_exp(phi) @ snap.C)


def align_history(
    history: TrackHistory,
    p: EarthParams,
    noise: NoiseModel,
    keyframe_interval: float = DEFAULT_KEYFRAME_INTERVAL,
    resolve_stride: int = 1,
    max_iterations: int = MAX_ITERATIONS,
) -> FgoResult:
    """Run the factor-graph aligner over a precomputed track history."""
    stride = int(round(keyframe_interval * history.rate))
    if stride < 1:
        raise ValueError(f"keyframe_interval {keyframe_interval} s is shorter than the sample interval")
    if resolve_stride < 1:
        raise ValueError(f"resolve_stride must be at least 1, got {resolve_stride}")
    last = history.t.shape[0] - 1

    graph = FactorGraph(stride / history.rate, noise)
    result = FgoResult(graph=graph)
    constant: ConstantAttitude | None = None

    for j, k in enumerate(range(0, last + 1, stride)):
        previous_mean = history.mean_attitude(k - stride, k) if j else None
        snap = KeyframeSnapshot(index=j, t=float(history.t[k]), C=history.C[k], F=history.F[k], G=history.G[k])
        graph.add_keyframe(snap, previous_mean)
        is_last = k + stride > last
        if len(graph) < 2 or (j % resolve_stride and not is_last):
            continue

        if constant is not None:
            graph.states[-1] = graph.predict_last()
        try:
            nodes, constant, report = solve(graph, constant, max_iterations)
        except DegenerateGeometryError as exc:
            logger.debug(f"FGO epoch t = {snap.t:.1f} s not yet observable: {exc}")
            result.estimates.append(AttitudeEstimate(t=snap.t, C_b_n=None))
            continue

        result.reports.append((snap.t, report))
        result.estimates.append(AttitudeEstimate(t=snap.t, C_b_n=attitude_output(nodes, constant, graph.keyframes[-1], p)))
        result.bias_series.append(BiasEstimate(t=snap.t, gyro_bias=nodes[-1].eps.copy(), accel_bias=nodes[-1].acc.copy()))

    if result.bias_series:
        final = result.bias_series[-1]
        logger.debug(
            f"FGO finished {len(graph)} keyframes: gyro bias {np.degrees(final.gyro_bias) * 3600.0} deg/h, "
            f"accel bias {final.accel_bias} m/s^2"
        )
    return result


def fgo_align(
    samples: ImuStream,
    p: EarthParams,
    noise: NoiseModel,
    keyframe_interval: float = DEFAULT_KEYFRAME_INTERVAL,
    resolve_stride: int = 1,
    max_iterations: int = MAX_ITERATIONS,
) -> FgoResult:
    """Factor-graph alignment of a whole IMU stream."""
    if len(samples) == 0:
        raise ValueError("the IMU stream is empty")
    return align_history(track_stream(samples, p), p, noise, keyframe_interval, resolve_stride, max_iterations)
