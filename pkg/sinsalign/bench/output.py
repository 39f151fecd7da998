"""
Result files of the benchmark and the simulator dump.

Every numeric field is written with 9 significant digits; rows are emitted
in a fixed order so repeated runs produce identical files.
"""

import csv
import json
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Sequence

import numpy as np

from sinsalign.bench.config import RunConfig
from sinsalign.bench.metrics import HeadingErrorSeries, MetricsRow
from sinsalign.core.data.unit import SECONDS_PER_HOUR, m_s2_to_milli_g
from sinsalign.core.log.alignLogger import logger
from sinsalign.nav.domain import AlignError, GroundTruth, ImuStream
from sinsalign.nav.rotation import dcm_to_heading_pitch_roll

if TYPE_CHECKING:
    from sinsalign.bench.runner import BenchResult

METRICS_HEADER = ["method", "window_start_s", "window_end_s", "rmse_deg", "runs_used"]
HEADING_ERROR_HEADER = ["t_s", "run", "method", "heading_err_deg"]
BIAS_HEADER = ["t_s", "run", "method", "eps_x_deg_h", "eps_y_deg_h", "eps_z_deg_h", "acc_x_mg", "acc_y_mg", "acc_z_mg"]
SOLVER_TRACE_HEADER = ["t_s", "run", "iter", "cost", "damping", "step_norm"]
IMU_HEADER = ["t_s", "gx_rad_s", "gy_rad_s", "gz_rad_s", "ax_m_s2", "ay_m_s2", "az_m_s2"]
TRUTH_HEADER = ["t_s", "heading_deg", "pitch_deg", "roll_deg"]


class OutputError(AlignError):
    """A result file could not be written."""

    def __init__(self, path: Path, reason: str):
        self.path = path
        super().__init__(f"cannot write {path}: {reason}")


def fmt(value: float) -> str:
    """Number with 9 significant digits."""
    return f"{float(value):.9g}"


def _write_csv(path: Path, header: list[str], rows: Iterable[Sequence[Any]]) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OutputError(path, exc.strerror or str(exc)) from exc
    logger.info(f"Wrote {path}")
    return path


def write_metrics_csv(rows: Sequence[MetricsRow], path: Path) -> Path:
    return _write_csv(
        path,
        METRICS_HEADER,
        ([r.method, fmt(r.window_start), fmt(r.window_end), fmt(r.rmse_deg), r.runs_used] for r in rows),
    )


def write_heading_error_csv(series: Sequence[HeadingErrorSeries], path: Path) -> Path:
    ordered = sorted(series, key=lambda s: (s.run, s.method))

    def rows():
        for s in ordered:
            for t, err in zip(s.t, s.error_deg):
                yield [fmt(t), s.run, s.method, fmt(err)]

    return _write_csv(path, HEADING_ERROR_HEADER, rows())


def write_bias_csv(entries: Sequence[tuple[int, str, Any]], path: Path) -> Path:
    """Bias estimates of ``(run, method, BiasSeries)`` entries in deg/h and mg."""

    def rows():
        for run, method, bias in entries:
            eps = np.degrees(bias.gyro_bias) * SECONDS_PER_HOUR
            for i, t in enumerate(bias.t):
                acc = [m_s2_to_milli_g(a) for a in bias.accel_bias[i]]
                yield [fmt(t), run, method, *(fmt(e) for e in eps[i]), *(fmt(a) for a in acc)]

    return _write_csv(path, BIAS_HEADER, rows())


def write_solver_trace_csv(entries: Sequence[tuple[int, Any]], path: Path) -> Path:
    """Optimizer trace of ``(run, [(t, SolveReport), ...])`` entries."""

    def rows():
        for run, reports in entries:
            for t, report in reports:
                for row in report.trace:
                    yield [fmt(t), run, row.iteration, fmt(row.cost), fmt(row.damping), fmt(row.step_norm)]

    return _write_csv(path, SOLVER_TRACE_HEADER, rows())


def write_imu_csv(stream: ImuStream, path: Path) -> Path:
    return _write_csv(
        path,
        IMU_HEADER,
        ([fmt(stream.t[k]), *(fmt(v) for v in stream.gyro[k]), *(fmt(v) for v in stream.accel[k])] for k in range(len(stream))),
    )


def write_truth_csv(truth: GroundTruth, path: Path) -> Path:
    def rows():
        for t, C in zip(truth.t, truth.C_b_n):
            angles = dcm_to_heading_pitch_roll(C)
            yield [fmt(t), fmt(angles.heading), fmt(angles.pitch), fmt(angles.roll)]

    return _write_csv(path, TRUTH_HEADER, rows())


def _json_number(value: float) -> float | None:
    return None if not math.isfinite(value) else float(fmt(value))


def write_summary_json(cfg: RunConfig, rows: Sequence[MetricsRow], path: Path, extra: dict[str, Any] | None = None) -> Path:
    summary = {
        "seed": cfg.scenario.seed,
        "config": cfg.model_dump(mode="json"),
        "metrics": [
            {
                "method": r.method,
                "window_start_s": r.window_start,
                "window_end_s": r.window_end,
                "rmse_deg": _json_number(r.rmse_deg),
                "runs_used": r.runs_used,
            }
            for r in rows
        ],
    }
    summary.update(extra or {})
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(summary, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OutputError(path, exc.strerror or str(exc)) from exc
    logger.info(f"Wrote {path}")
    return path


def emit_outputs(
    rows: Sequence[MetricsRow],
    series: Sequence[HeadingErrorSeries],
    out_dir: Path | str,
    cfg: RunConfig | None = None,
    extra: dict[str, Any] | None = None,
) -> list[Path]:
    """Write ``metrics.csv``, ``heading_error.csv`` and ``summary.json`` under ``out_dir``."""
    out = Path(out_dir)
    return [
        write_metrics_csv(rows, out / "metrics.csv"),
        write_heading_error_csv(series, out / "heading_error.csv"),
        write_summary_json(cfg or RunConfig(), rows, out / "summary.json", extra),
    ]


def emit_bench_outputs(result: "BenchResult", cfg: RunConfig, out_dir: Path) -> list[Path]:
    """All files of a benchmark run; plot data and solver traces follow the configuration."""
    extra = {
        "diverged": result.diverged,
        "failed": result.failed,
        "stream_checksums": [o.checksum for o in result.outcomes],
    }
    series = result.series if cfg.bench.emit_plot_data else []
    written = emit_outputs(result.rows, series, out_dir, cfg, extra)

    if cfg.bench.emit_plot_data:
        bias_entries = [
            (o.run, method, op.payload.bias)
            for o in result.outcomes
            for method, op in o.methods.items()
            if op.is_op_ok() and op.payload.bias is not None
        ]
        written.append(write_bias_csv(bias_entries, out_dir / "bias_estimates.csv"))
    if cfg.fgo.emit_solver_trace:
        traces = [(o.run, o.methods["fgo"].payload.solver_reports) for o in result.outcomes if "fgo" in o.methods and o.methods["fgo"].is_op_ok()]
        written.append(write_solver_trace_csv(traces, out_dir / "solver_trace.csv"))
    return written
