import unittest

import numpy as np

from sinsalign.core.testing.graphs import moderate_noise, toy_graph
from sinsalign.nav.domain import KeyframeOrderError
from sinsalign.nav.fgo.domain import STATE_DIM, KeyframeSnapshot
from sinsalign.nav.fgo.graph import FactorGraph, add_keyframe
from sinsalign.nav.rotation import so3_exp


def whitened_jacobian(g: FactorGraph, X: np.ndarray, R: np.ndarray, h: float = 1e-6) -> np.ndarray:
    n = X.shape[0]
    size = STATE_DIM * n + 3
    base = g.whitened_residuals(X, R)
    J = np.zeros((base.shape[0], size))
    for i in range(STATE_DIM * n):
        e = np.zeros(STATE_DIM * n)
        e[i] = h
        plus = g.whitened_residuals(X + e.reshape(n, STATE_DIM), R)
        minus = g.whitened_residuals(X - e.reshape(n, STATE_DIM), R)
        J[:, i] = (plus - minus) / (2.0 * h)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        plus = g.whitened_residuals(X, so3_exp(e) @ R)
        minus = g.whitened_residuals(X, so3_exp(-e) @ R)
        J[:, STATE_DIM * n + i] = (plus - minus) / (2.0 * h)
    return J


class FactorGraphStructureTestCase(unittest.TestCase):
    def test_counts(self):
        g = toy_graph(count=5)

        self.assertEqual(len(g), 5)
        self.assertEqual(g.ins_factor_count, 4)
        self.assertEqual(g.measurement_factor_count, 5)
        self.assertEqual(g.prior_count, 1)
        self.assertEqual(g.unknown_count, 63)
        self.assertEqual(g.states.shape, (5, STATE_DIM))
        self.assertEqual(g.transitions().shape, (4, STATE_DIM, STATE_DIM))

    def test_empty_graph(self):
        g = FactorGraph(2.0, moderate_noise())

        self.assertEqual(g.prior_count, 0)
        self.assertEqual(g.ins_factor_count, 0)
        self.assertEqual(g.unknown_count, 3)

    def test_interval_closure(self):
        g = toy_graph(count=3)
        first, second, last = g.keyframes

        np.testing.assert_allclose(first.f_bar, (second.F - first.F) / g.dt, atol=1e-14)
        self.assertIsNotNone(first.C_mean)
        self.assertTrue(second.is_closed)
        self.assertFalse(last.is_closed)

    def test_out_of_order_index_raises(self):
        g = toy_graph(count=2)
        snap = KeyframeSnapshot(index=5, t=2.0, C=np.eye(3), F=np.zeros(3), G=np.zeros(3))

        with self.assertRaises(KeyframeOrderError):
            g.add_keyframe(snap)

    def test_wrong_interval_raises(self):
        g = toy_graph(count=2)
        snap = KeyframeSnapshot(index=2, t=2.5, C=np.eye(3), F=np.zeros(3), G=np.zeros(3))

        with self.assertRaises(KeyframeOrderError):
            g.add_keyframe(snap)
        self.assertEqual(len(g), 2)

    def test_non_finite_snapshot_raises(self):
        g = toy_graph(count=1)
        snap = KeyframeSnapshot(index=1, t=1.0, C=np.eye(3), F=np.array([np.nan, 0.0, 0.0]), G=np.zeros(3))

        with self.assertRaises(ValueError):
            g.add_keyframe(snap)

    def test_module_level_add_keyframe(self):
        g = FactorGraph(1.0, moderate_noise())
        add_keyframe(g, KeyframeSnapshot(index=0, t=0.0, C=np.eye(3), F=np.zeros(3), G=np.zeros(3)))

        self.assertEqual(len(g), 1)

    def test_invalid_interval(self):
        with self.assertRaises(ValueError):
            FactorGraph(0.0, moderate_noise())

    def test_predict_last_propagates_previous_node(self):
        g = toy_graph(count=3)
        g.states[1] = 1e-3 * np.arange(STATE_DIM)

        np.testing.assert_allclose(g.predict_last(), g.transitions()[1] @ g.states[1], atol=0.0)


class LinearizationTestCase(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(31)
        self.g = toy_graph(count=4)
        self.X = 1e-2 * rng.standard_normal((4, STATE_DIM))
        self.R = so3_exp(np.array([0.35, -0.25, 1.25]))

    def test_cost_matches_whitened_residuals(self):
        H, grad, cost = self.g.linearize(self.X, self.R)
        r = self.g.whitened_residuals(self.X, self.R)

        self.assertAlmostEqual(cost, float(r @ r), delta=1e-10 * cost)
        self.assertAlmostEqual(cost, self.g.cost(self.X, self.R), delta=1e-10 * cost)

    def test_normal_equations_match_finite_differences(self):
        H, grad, _ = self.g.linearize(self.X, self.R)
        J = whitened_jacobian(self.g, self.X, self.R)
        r = self.g.whitened_residuals(self.X, self.R)

        self.assertEqual(H.shape, (self.g.unknown_count, self.g.unknown_count))
        dense = H.toarray()
        np.testing.assert_allclose(dense, dense.T, atol=1e-12 * np.max(np.abs(dense)))
        np.testing.assert_allclose(dense, J.T @ J, rtol=1e-5, atol=1e-6 * np.max(np.abs(dense)))
        np.testing.assert_allclose(grad, J.T @ r, rtol=1e-5, atol=1e-6 * np.max(np.abs(grad)))

    def test_normal_matrix_is_sparse(self):
        g = toy_graph(count=20)
        H, _, _ = g.linearize(g.states, np.eye(3))
        n = len(g)
        # block tridiagonal chain plus the 3-column hub border
        bound = (3 * n - 2) * STATE_DIM**2 + 2 * n * STATE_DIM * 3 + 9

        self.assertLessEqual(H.nnz, bound)
        self.assertLess(H.nnz, (STATE_DIM * n + 3) ** 2 / 2)


if __name__ == "__main__":
    unittest.main()
