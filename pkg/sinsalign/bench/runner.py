"""
Monte Carlo benchmark: one simulated stream per run, fed unchanged to every
requested method.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from sinsalign.bench.config import RunConfig, resolve_workers
from sinsalign.bench.metrics import HeadingErrorSeries, MetricsRow, aggregate, heading_error_series, is_diverged
from sinsalign.bench.output import emit_bench_outputs
from sinsalign.core.domain.operation import Operation
from sinsalign.core.handler.progress import QueueProgress
from sinsalign.core.log.alignLogger import logger
from sinsalign.nav.coarse import TrackHistory, coarse_align_history, track_stream
from sinsalign.nav.domain import GroundTruth, ImuStream, ScenarioConfig
from sinsalign.nav.fgo.aligner import align_history
from sinsalign.nav.fgo.domain import NoiseModel, SolveReport
from sinsalign.nav.kf import KfTuning, default_process_psd, run_two_procedure
from sinsalign.nav.simulator import simulate


@dataclass(frozen=True)
class BiasSeries:
    """Bias estimates over time: gyro in rad/s, accelerometer in m/s², one row per epoch."""

    t: np.ndarray
    gyro_bias: np.ndarray
    accel_bias: np.ndarray


@dataclass
class MethodRun:
    errors: HeadingErrorSeries
    bias: BiasSeries | None = None
    solver_reports: list[tuple[float, SolveReport]] = field(default_factory=list)


@dataclass
class RunOutcome:
    run: int
    seed: int
    checksum: str
    methods: dict[str, Operation[MethodRun]] = field(default_factory=dict)


@dataclass
class BenchResult:
    rows: list[MetricsRow]
    outcomes: list[RunOutcome]
    diverged: dict[str, list[int]]
    failed: dict[str, int]

    @property
    def series(self) -> list[HeadingErrorSeries]:
        return [op.payload.errors for outcome in self.outcomes for op in outcome.methods.values() if op.is_op_ok()]


class _StreamContext:
    """Simulated stream of one run with a lazily shared track history."""

    def __init__(self, cfg: RunConfig, scenario: ScenarioConfig, stream: ImuStream, truth: GroundTruth):
        self.cfg = cfg
        self.scenario = scenario
        self.stream = stream
        self.truth = truth
        self._history: TrackHistory | None = None

    @property
    def history(self) -> TrackHistory:
        if self._history is None:
            self._history = track_stream(self.stream, self.scenario.earth)
        return self._history


def _run_oba(ctx: _StreamContext, run: int) -> MethodRun:
    estimates = coarse_align_history(ctx.history, ctx.scenario.earth, ctx.cfg.oba.pair_interval_s)
    return MethodRun(errors=heading_error_series("oba", run, estimates, ctx.truth))


def _run_oba_kf(ctx: _StreamContext, run: int) -> MethodRun:
    sc = ctx.scenario
    kf = ctx.cfg.kf
    tuning = KfTuning(process_psd=default_process_psd(sc.gyro_arw, sc.accel_vrw), velocity_noise=kf.velocity_noise_m_s)
    result = run_two_procedure(
        ctx.stream,
        sc.earth,
        kf.coarse_window_s,
        pair_interval=ctx.cfg.oba.pair_interval_s,
        filter_interval=kf.filter_interval_s,
        initial_heading_error_deg=sc.initial_heading_error_deg,
        tuning=tuning,
    )
    bias = BiasSeries(
        t=np.array(result.bias_times),
        gyro_bias=np.array(result.gyro_bias).reshape(-1, 3),
        accel_bias=np.array(result.accel_bias).reshape(-1, 3),
    )
    return MethodRun(errors=heading_error_series("oba_kf", run, result.estimates, ctx.truth), bias=bias)


def _run_fgo(ctx: _StreamContext, run: int) -> MethodRun:
    sc = ctx.scenario
    fgo = ctx.cfg.fgo
    noise = NoiseModel.from_sensor_noise(sc.gyro_arw, sc.accel_vrw, fgo.keyframe_interval_s)
    result = align_history(ctx.history, sc.earth, noise, fgo.keyframe_interval_s, fgo.resolve_stride, fgo.max_iterations)
    bias = BiasSeries(
        t=np.array([b.t for b in result.bias_series]),
        gyro_bias=np.array([b.gyro_bias for b in result.bias_series]).reshape(-1, 3),
        accel_bias=np.array([b.accel_bias for b in result.bias_series]).reshape(-1, 3),
    )
    return MethodRun(errors=heading_error_series("fgo", run, result.estimates, ctx.truth), bias=bias, solver_reports=result.reports)


METHOD_RUNNERS: dict[str, Callable[[_StreamContext, int], MethodRun]] = {
    "oba": _run_oba,
    "oba_kf": _run_oba_kf,
    "fgo": _run_fgo,
}


def run_single(cfg: RunConfig, run: int) -> RunOutcome:
    """Simulate run ``run`` once and feed the identical stream to every configured method."""
    scenario = cfg.scenario.to_scenario(run)
    stream, truth = simulate(scenario)
    ctx = _StreamContext(cfg, scenario, stream, truth)
    outcome = RunOutcome(run=run, seed=scenario.rng_seed, checksum=stream.checksum())

    for method in cfg.bench.methods:
        logger.info(f"Run {run} (seed {scenario.rng_seed}): stream {outcome.checksum[:16]} -> {method}")
        op = Operation.capture(lambda: METHOD_RUNNERS[method](ctx, run))
        if not op.is_op_ok():
            logger.error(f"Run {run}: method {method} failed after {op.elapsed_s:.2f} s: {op.error} ({op.origin})")
        outcome.methods[method] = op
    return outcome


def execute_runs(cfg: RunConfig, workers: int = 1) -> list[RunOutcome]:
    """All Monte Carlo runs, ordered by run index regardless of scheduling."""
    runs = cfg.bench.monte_carlo_runs
    progress = QueueProgress(total_count=runs, label="Monte Carlo")
    outcomes: list[RunOutcome] = []
    if workers <= 1 or runs == 1:
        for r in range(runs):
            outcomes.append(run_single(cfg, r))
            progress.complete_step(r)
        return outcomes

    with ProcessPoolExecutor(max_workers=min(workers, runs)) as executor:
        for outcome in executor.map(run_single, [cfg] * runs, range(runs)):
            outcomes.append(outcome)
            progress.complete_step(outcome.run)
    return outcomes


def summarize(cfg: RunConfig, outcomes: list[RunOutcome]) -> BenchResult:
    """Metrics rows per (method, window) over the runs that succeeded and did not diverge."""
    diverged: dict[str, list[int]] = {m: [] for m in cfg.bench.methods}
    failed: dict[str, int] = {m: 0 for m in cfg.bench.methods}
    used: list[HeadingErrorSeries] = []

    for outcome in outcomes:
        for method, op in outcome.methods.items():
            if not op.is_op_ok():
                failed[method] += 1
                continue
            series = op.payload.errors
            if is_diverged(series, cfg.bench.divergence_threshold_deg, cfg.bench.divergence_tail_s):
                logger.warning(f"Run {outcome.run}: {method} diverged (tail heading error above {cfg.bench.divergence_threshold_deg:.1f} deg)")
                diverged[method].append(outcome.run)
                continue
            used.append(series)

    rows = [aggregate(used, method, tuple(window)) for method in cfg.bench.methods for window in cfg.bench.rmse_windows]
    for method, count in failed.items():
        if count:
            logger.warning(f"{method}: {count} run(s) failed and were excluded from the averages")
    return BenchResult(rows=rows, outcomes=outcomes, diverged=diverged, failed=failed)


def run_benchmark(cfg: RunConfig, out_dir: Path | str | None = None, workers: int | None = None) -> BenchResult:
    """Run the benchmark and write every output file under ``out_dir`` (default ``bench.output_dir``)."""
    result = summarize(cfg, execute_runs(cfg, resolve_workers(cfg) if workers is None else workers))
    emit_bench_outputs(result, cfg, Path(out_dir or cfg.bench.output_dir))
    return result
