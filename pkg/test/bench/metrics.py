import math
import unittest

import numpy as np

from sinsalign.bench.metrics import (
    HeadingErrorSeries,
    HeadingSeries,
    aggregate,
    heading_error_series,
    heading_rmse,
    is_diverged,
    window_rmse,
    wrap_difference,
)
from sinsalign.core.testing.scenarios import zero_noise_scenario
from sinsalign.nav.coarse import AttitudeEstimate
from sinsalign.nav.rotation import heading_pitch_roll_to_dcm
from sinsalign.nav.simulator import simulate


def _series(values, t=None) -> HeadingSeries:
    values = np.asarray(values, dtype=np.float64)
    return HeadingSeries(t=np.arange(values.shape[0], dtype=np.float64) if t is None else np.asarray(t, dtype=np.float64), heading_deg=values)


class HeadingRmseTestCase(unittest.TestCase):
    def setUp(self):
        self.truth = _series(np.linspace(-170.0, 170.0, 11))

    def test_equal_series(self):
        self.assertEqual(heading_rmse(self.truth, self.truth, (0.0, 10.0)), 0.0)

    def test_constant_offset(self):
        est = _series(self.truth.heading_deg + 2.0)

        self.assertAlmostEqual(heading_rmse(est, self.truth, (0.0, 10.0)), 2.0, places=12)

    def test_wrap_around(self):
        est = _series(self.truth.heading_deg + 359.0)

        self.assertAlmostEqual(heading_rmse(est, self.truth, (0.0, 10.0)), 1.0, places=9)

    def test_window_is_inclusive(self):
        est = _series(self.truth.heading_deg + np.arange(11.0))

        self.assertAlmostEqual(heading_rmse(est, self.truth, (3.0, 5.0)), math.sqrt((9.0 + 16.0 + 25.0) / 3.0), places=12)

    def test_empty_window_raises(self):
        with self.assertRaises(ValueError):
            heading_rmse(self.truth, self.truth, (20.0, 30.0))

    def test_misaligned_timestamps_raise(self):
        shifted = _series(self.truth.heading_deg, t=np.arange(11.0) + 0.5)

        with self.assertRaises(ValueError):
            heading_rmse(shifted, self.truth, (0.0, 10.0))

    def test_series_shape_mismatch(self):
        with self.assertRaises(ValueError):
            HeadingSeries(t=np.zeros(3), heading_deg=np.zeros(4))


class WrapDifferenceTestCase(unittest.TestCase):
    def test_wrapping(self):
        np.testing.assert_allclose(wrap_difference(np.array([179.0, -179.0, 10.0]), np.array([-179.0, 179.0, 10.0])), [-2.0, 2.0, 0.0])

    def test_half_turn_maps_to_positive(self):
        self.assertEqual(wrap_difference(np.array([90.0]), np.array([-90.0]))[0], 180.0)


class ErrorSeriesTestCase(unittest.TestCase):
    def test_unobservable_epochs_are_dropped(self):
        _, truth = simulate(zero_noise_scenario(duration=4.0))
        estimates = [
            AttitudeEstimate(t=1.0, C_b_n=None),
            AttitudeEstimate(t=2.0, C_b_n=truth.attitude_at(2.0)),
            AttitudeEstimate(t=3.0, C_b_n=heading_pitch_roll_to_dcm(0.0) @ truth.attitude_at(3.0)),
        ]
        series = heading_error_series("oba", 4, estimates, truth)

        self.assertEqual(series.method, "oba")
        self.assertEqual(series.run, 4)
        np.testing.assert_array_equal(series.t, [2.0, 3.0])
        np.testing.assert_allclose(series.error_deg, [0.0, 0.0], atol=1e-9)


class DivergenceTestCase(unittest.TestCase):
    def _series(self, errors) -> HeadingErrorSeries:
        errors = np.asarray(errors, dtype=np.float64)
        return HeadingErrorSeries(method="fgo", run=0, t=np.arange(errors.shape[0], dtype=np.float64), error_deg=errors)

    def test_small_tail_is_not_diverged(self):
        self.assertFalse(is_diverged(self._series([90.0] * 50 + [1.0] * 50), threshold_deg=30.0, tail_s=20.0))

    def test_large_tail_is_diverged(self):
        self.assertTrue(is_diverged(self._series([1.0] * 50 + [60.0] * 50), threshold_deg=30.0, tail_s=20.0))

    def test_empty_series_is_diverged(self):
        self.assertTrue(is_diverged(self._series([]), threshold_deg=30.0, tail_s=20.0))


class AggregateTestCase(unittest.TestCase):
    def test_mean_of_run_rmses(self):
        t = np.arange(10.0)
        series = [
            HeadingErrorSeries("oba", 0, t, np.full(10, 1.0)),
            HeadingErrorSeries("oba", 1, t, np.full(10, 3.0)),
            HeadingErrorSeries("fgo", 0, t, np.full(10, 100.0)),
        ]
        row = aggregate(series, "oba", (2.0, 5.0))

        self.assertEqual(row.method, "oba")
        self.assertEqual((row.window_start, row.window_end), (2.0, 5.0))
        self.assertAlmostEqual(row.rmse_deg, 2.0, places=12)
        self.assertEqual(row.runs_used, 2)

    def test_no_runs_gives_nan(self):
        row = aggregate([], "fgo", (0.0, 1.0))

        self.assertTrue(math.isnan(row.rmse_deg))
        self.assertEqual(row.runs_used, 0)

    def test_window_rmse_tolerates_float_timestamps(self):
        t = np.arange(0, 101) * 0.1

        self.assertAlmostEqual(window_rmse(t, np.ones(101), (0.3, 0.7)), 1.0, places=12)


if __name__ == "__main__":
    unittest.main()
