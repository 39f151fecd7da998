import unittest

import numpy as np

from sinsalign.core.data.unit import rad_per_sec_to_deg_per_hour
from sinsalign.core.testing.graphs import graph_from_history
from sinsalign.core.testing.scenarios import (
    SLOW_TESTS_ENV,
    REFERENCE_GYRO_BIAS_DEG_H,
    bias_only_scenario,
    reference_scenario,
    slow_tests_enabled,
    zero_noise_scenario,
)
from sinsalign.nav.coarse import track_stream
from sinsalign.nav.domain import ImuStream
from sinsalign.nav.fgo.aligner import align_history, attitude_output, fgo_align
from sinsalign.nav.fgo.domain import DELTA_F, PHI, STATE_DIM, ConstantAttitude, NodeState, NoiseModel
from sinsalign.nav.rotation import heading_deg, is_rotation, so3_log
from sinsalign.nav.simulator import error_free, simulate


def heading_errors(estimates, truth) -> np.ndarray:
    diffs = np.array([heading_deg(e.C_b_n) - heading_deg(truth.attitude_at(e.t)) for e in estimates])
    return np.abs((diffs + 180.0) % 360.0 - 180.0)


class AlignerOutputTestCase(unittest.TestCase):
    def test_first_epochs_are_not_observable(self):
        cfg = zero_noise_scenario(duration=20.0)
        stream, _ = simulate(cfg)
        result = fgo_align(stream, cfg.earth, NoiseModel.from_sensor_noise(0.0, 0.0, 2.0))

        self.assertEqual(result.estimates[0].t, 2.0)
        self.assertFalse(result.estimates[0].observable)
        self.assertTrue(all(e.observable for e in result.estimates[1:]))
        self.assertEqual([e.t for e in result.estimates], [2.0 * k for k in range(1, 11)])
        self.assertEqual(len(result.bias_series), 9)
        self.assertEqual(len(result.reports), 9)
        self.assertEqual(len(result.graph), 11)

    def test_output_is_rotation(self):
        cfg = reference_scenario(seed=5, duration=30.0)
        stream, _ = simulate(cfg)
        result = fgo_align(stream, cfg.earth, NoiseModel.from_sensor_noise(cfg.gyro_arw, cfg.accel_vrw, 2.0))

        for e in result.estimates[1:]:
            self.assertTrue(is_rotation(e.C_b_n, tol=1e-9))

    def test_noise_free_heading(self):
        cfg = zero_noise_scenario(duration=120.0)
        stream, truth = simulate(cfg)
        result = fgo_align(stream, cfg.earth, NoiseModel.from_sensor_noise(0.0, 0.0, 2.0))

        late = [e for e in result.estimates if e.t >= 60.0]
        self.assertLess(float(np.max(heading_errors(late, truth))), 1e-3)

    def test_resolve_stride_keeps_final_epoch(self):
        cfg = zero_noise_scenario(duration=20.0)
        stream, _ = simulate(cfg)
        result = fgo_align(stream, cfg.earth, NoiseModel.from_sensor_noise(0.0, 0.0, 2.0), resolve_stride=4)

        self.assertEqual([e.t for e in result.estimates], [8.0, 16.0, 20.0])

    def test_attitude_output_applies_misalignment(self):
        cfg = zero_noise_scenario(duration=4.0)
        stream, _ = simulate(cfg)
        result = fgo_align(stream, cfg.earth, NoiseModel.from_sensor_noise(0.0, 0.0, 2.0))
        g = result.graph
        snap = g.keyframes[-1]
        nodes = [NodeState() for _ in range(len(g))]

        plain = attitude_output(nodes, g.constant, snap, cfg.earth)
        nodes[-1] = NodeState(phi=[0.0, 0.0, 0.01])
        tilted = attitude_output(nodes, g.constant, snap, cfg.earth)
        self.assertFalse(np.allclose(plain, tilted))
        self.assertTrue(is_rotation(tilted))

    def test_empty_stream_raises(self):
        empty = ImuStream(t=np.zeros(0), gyro=np.zeros((0, 3)), accel=np.zeros((0, 3)), rate=100.0)

        with self.assertRaises(ValueError):
            fgo_align(empty, zero_noise_scenario().earth, NoiseModel.from_sensor_noise(0.0, 0.0, 2.0))

    def test_short_keyframe_interval_raises(self):
        cfg = zero_noise_scenario(duration=4.0)
        stream, _ = simulate(cfg)

        with self.assertRaises(ValueError):
            align_history(track_stream(stream, cfg.earth), cfg.earth, NoiseModel.from_sensor_noise(0.0, 0.0, 2.0), keyframe_interval=0.001)
        with self.assertRaises(ValueError):
            align_history(track_stream(stream, cfg.earth), cfg.earth, NoiseModel.from_sensor_noise(0.0, 0.0, 2.0), resolve_stride=0)


class TransitionFidelityTestCase(unittest.TestCase):
    def test_one_step_prediction_matches_error_evolution(self):
        cfg = bias_only_scenario(duration=900.0)
        biased, _ = simulate(cfg)
        clean, _ = simulate(error_free(cfg))
        tracked = track_stream(biased, cfg.earth)
        reference = track_stream(clean, cfg.earth)
        g = graph_from_history(tracked, NoiseModel.from_sensor_noise(0.0, 0.0, 2.0))
        stride = int(round(g.dt * tracked.rate))
        idx = np.arange(len(g)) * stride

        # true error states: exp(φ)·C̃ = C and F̃ − δF = F
        X = np.zeros((len(g), STATE_DIM))
        for j, k in enumerate(idx):
            X[j, PHI] = so3_log(reference.C[k] @ tracked.C[k].T)
            X[j, DELTA_F] = tracked.F[k] - reference.F[k]
        X[:, 6:9] = cfg.gyro_bias
        X[:, 9:12] = cfg.accel_bias

        A = g.transitions()
        for j in range(len(g) - 1):
            predicted = A[j] @ X[j]
            actual_step = X[j + 1, :6] - X[j, :6]
            error = np.linalg.norm(predicted[:6] - X[j + 1, :6]) / np.linalg.norm(actual_step)
            self.assertLess(error, 0.05, msg=f"step {j} at t = {g.keyframes[j].t:.0f} s")


class AcceptanceTestCase(unittest.TestCase):
    def setUp(self):
        if not slow_tests_enabled():
            self.skipTest(f"set {SLOW_TESTS_ENV}=1 to run the full-length alignment checks")

    def test_noise_free_full_run(self):
        cfg = zero_noise_scenario(duration=900.0)
        stream, truth = simulate(cfg)
        result = fgo_align(stream, cfg.earth, NoiseModel.from_sensor_noise(0.0, 0.0, 2.0))

        late = [e for e in result.estimates if e.t >= 60.0]
        self.assertLess(float(np.max(heading_errors(late, truth))), 1e-3)

    def test_gyro_bias_recovery(self):
        estimates = []
        for seed in range(20):
            cfg = reference_scenario(seed=100 + seed)
            stream, _ = simulate(cfg)
            noise = NoiseModel.from_sensor_noise(cfg.gyro_arw, cfg.accel_vrw, 2.0)
            result = fgo_align(stream, cfg.earth, noise, resolve_stride=10_000)
            estimates.append([rad_per_sec_to_deg_per_hour(b) for b in result.final_bias.gyro_bias])

        mean = np.mean(estimates, axis=0)
        for axis in (0, 1):
            expected = REFERENCE_GYRO_BIAS_DEG_H[axis]
            self.assertLess(abs(mean[axis] - expected), 0.25 * abs(expected))

    def test_constant_attitude_matches_truth(self):
        cfg = bias_only_scenario(duration=900.0)
        stream, _ = simulate(cfg)
        result = fgo_align(stream, cfg.earth, NoiseModel.from_sensor_noise(1e-6, 1e-5, 2.0), resolve_stride=10_000)

        self.assertIsInstance(result.graph.constant, ConstantAttitude)
        self.assertLess(np.linalg.norm(so3_log(result.graph.constant.R @ cfg.initial_attitude.T)), 5e-3)


if __name__ == "__main__":
    unittest.main()
