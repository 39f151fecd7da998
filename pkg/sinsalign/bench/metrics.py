"""Heading-error series, windowed RMSE and the divergence policy."""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from sinsalign.core.data.unit import wrap_deg
from sinsalign.nav.coarse import AttitudeEstimate
from sinsalign.nav.domain import GroundTruth
from sinsalign.nav.rotation import heading_deg

TIME_TOLERANCE = 1e-6


@dataclass(frozen=True)
class HeadingSeries:
    """Headings in degrees at times ``t`` (s)."""

    t: NDArray[np.float64]
    heading_deg: NDArray[np.float64]

    def __post_init__(self):
        if self.t.shape != self.heading_deg.shape:
            raise ValueError(f"series arrays disagree: t {self.t.shape}, heading {self.heading_deg.shape}")


@dataclass(frozen=True)
class HeadingErrorSeries:
    """Wrapped heading error of one method in one Monte Carlo run."""

    method: str
    run: int
    t: NDArray[np.float64]
    error_deg: NDArray[np.float64]


@dataclass(frozen=True, slots=True)
class MetricsRow:
    method: str
    window_start: float
    window_end: float
    rmse_deg: float
    runs_used: int


def wrap_difference(est_deg: NDArray[np.float64], truth_deg: NDArray[np.float64]) -> NDArray[np.float64]:
    """ψ_est − ψ_true wrapped to (−180, 180]."""
    return np.array([wrap_deg(float(d)) for d in np.asarray(est_deg) - np.asarray(truth_deg)])


def window_rmse(t: NDArray[np.float64], error_deg: NDArray[np.float64], window: tuple[float, float]) -> float:
    """RMS of the (already wrapped) errors with ``start <= t <= end``.

    :raises ValueError: If no sample falls inside the window.
    """
    start, end = window
    mask = (t >= start - TIME_TOLERANCE) & (t <= end + TIME_TOLERANCE)
    if not np.any(mask):
        raise ValueError(f"no samples inside the window [{start}, {end}] s")
    return float(np.sqrt(np.mean(np.asarray(error_deg)[mask] ** 2)))


def heading_rmse(est: HeadingSeries, truth: HeadingSeries, window: tuple[float, float]) -> float:
    """Windowed heading RMSE in degrees.

    :raises ValueError: On misaligned timestamps or an empty window.
    """
    if est.t.shape != truth.t.shape or not np.allclose(est.t, truth.t, atol=TIME_TOLERANCE, rtol=0.0):
        raise ValueError("estimate and truth series must share their timestamps")
    return window_rmse(est.t, wrap_difference(est.heading_deg, truth.heading_deg), window)


def heading_error_series(method: str, run: int, estimates: Sequence[AttitudeEstimate], truth: GroundTruth) -> HeadingErrorSeries:
    """Error series over the observable epochs of an estimator output."""
    observable = [e for e in estimates if e.C_b_n is not None]
    t = np.array([e.t for e in observable], dtype=np.float64)
    est = np.array([heading_deg(e.C_b_n) for e in observable], dtype=np.float64)
    ref = np.array([heading_deg(truth.attitude_at(e.t)) for e in observable], dtype=np.float64)
    return HeadingErrorSeries(method=method, run=run, t=t, error_deg=wrap_difference(est, ref))


def is_diverged(series: HeadingErrorSeries, threshold_deg: float, tail_s: float) -> bool:
    """True when the RMS heading error over the final ``tail_s`` seconds exceeds ``threshold_deg``.

    A series with no samples in that tail counts as diverged.
    """
    if series.t.size == 0:
        return True
    end = float(series.t[-1])
    try:
        return window_rmse(series.t, series.error_deg, (end - tail_s, end)) > threshold_deg
    except ValueError:
        return True


def aggregate(series: Sequence[HeadingErrorSeries], method: str, window: tuple[float, float]) -> MetricsRow:
    """Average of the per-run window RMSEs of ``method``; runs without samples in the window are skipped."""
    values = []
    for s in series:
        if s.method != method:
            continue
        try:
            values.append(window_rmse(s.t, s.error_deg, window))
        except ValueError:
            continue
    rmse = float(np.mean(values)) if values else math.nan
    return MetricsRow(method=method, window_start=window[0], window_end=window[1], rmse_deg=rmse, runs_used=len(values))
