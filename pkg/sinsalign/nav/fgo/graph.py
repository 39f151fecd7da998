"""
Factor graph of the unified alignment method.

A chain of keyframe error states x_1 .. x_n linked by INS factors, one
measurement factor from every node to the constant attitude R, and a prior
on x_1. Unknowns are ordered as [x_1, .., x_n, δφ_c] (12n + 3).
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from sinsalign.nav.domain import KeyframeOrderError, Matrix3
from sinsalign.nav.fgo.domain import DELTA_F, STATE_DIM, ConstantAttitude, KeyframeSnapshot, NodeState, NoiseModel
from sinsalign.nav.fgo.factors import (
    ins_residual_batch,
    measurement_residual_batch,
    rotated_vectors,
    skew_batch,
    transition_batch,
)

INTERVAL_TOLERANCE = 1e-9


@dataclass(frozen=True)
class LinearSystem:
    """Whitened residuals and Jacobian blocks of the graph at one linearization point.

    Every row is scaled by the square root of its information, so the cost is the plain
    sum of squares. The Jacobian blocks are

        INS k:   −W·A_k on x_k and W on x_{k+1}, W = diag(ins_sqrt_w)
        meas k:  −√s_k·R on δF_k and −√s_k·[R·(F̃_k − δF_k)]× on δφ_c
        prior:   −diag(prior_sqrt_w) on x_1
    """

    R: Matrix3
    transitions: NDArray[np.float64]
    ins_sqrt_w: NDArray[np.float64]
    ins_residuals: NDArray[np.float64]
    meas_sqrt_w: NDArray[np.float64]
    meas_skews: NDArray[np.float64]
    meas_residuals: NDArray[np.float64]
    prior_sqrt_w: NDArray[np.float64]
    prior_residual: NDArray[np.float64]

    @property
    def node_count(self) -> int:
        return self.meas_residuals.shape[0]

    @property
    def cost(self) -> float:
        return float(np.sum(self.ins_residuals**2) + np.sum(self.meas_residuals**2) + self.prior_residual @ self.prior_residual)

    def model_cost(self, delta: NDArray[np.float64]) -> float:
        """Cost of the linearized residuals after the step ``delta``."""
        n = self.node_count
        dX = delta[: STATE_DIM * n].reshape(n, STATE_DIM)
        dc = delta[STATE_DIM * n :]
        ins = self.ins_residuals + self.ins_sqrt_w * (dX[1:] - np.einsum("nij,nj->ni", self.transitions, dX[:-1]))
        meas = self.meas_residuals - self.meas_sqrt_w[:, None] * (dX[:, DELTA_F] @ self.R.T + self.meas_skews @ dc)
        prior = self.prior_residual - self.prior_sqrt_w * dX[0]
        return float(np.sum(ins**2) + np.sum(meas**2) + prior @ prior)

    def hessian_diagonal(self) -> NDArray[np.float64]:
        """diag(JᵀJ), shape (12n + 3,)."""
        n = self.node_count
        w = self.ins_sqrt_w**2
        s = self.meas_sqrt_w**2
        d = np.zeros((n, STATE_DIM))
        d[:-1] += np.einsum("i,nij->nj", w, self.transitions**2)
        d[1:] += w
        d[:, DELTA_F] += s[:, None]
        d[0] += self.prior_sqrt_w**2
        d_c = np.einsum("n,nij->j", s, self.meas_skews**2)
        return np.concatenate([d.ravel(), d_c])

    def normal_equations(self) -> tuple[sp.csc_matrix, NDArray[np.float64]]:
        """H = JᵀJ and g = Jᵀr.

        H is block tridiagonal over the chain plus a dense 3-column border for δφ_c.
        """
        n = self.node_count
        A = self.transitions
        w = self.ins_sqrt_w**2
        s = self.meas_sqrt_w**2
        skews = self.meas_skews

        At = np.transpose(A, (0, 2, 1))
        diag = np.zeros((n, STATE_DIM, STATE_DIM))
        diag[:-1] += np.einsum("nij,j,njk->nik", At, w, A)
        diag[1:] += np.diag(w)
        diag[:, DELTA_F, DELTA_F] += s[:, None, None] * np.eye(3)
        diag[0] += np.diag(self.prior_sqrt_w**2)
        upper = -At * w[None, None, :]

        border = np.zeros((n, STATE_DIM, 3))
        border[:, DELTA_F, :] = s[:, None, None] * np.einsum("ji,njk->nik", self.R, skews)
        corner = np.einsum("n,nji,njk->ik", s, skews, skews)

        wr = self.ins_residuals * self.ins_sqrt_w
        g = np.zeros((n, STATE_DIM))
        g[:-1] -= np.einsum("nij,nj->ni", At, wr)
        g[1:] += wr
        g[:, DELTA_F] -= self.meas_sqrt_w[:, None] * (self.meas_residuals @ self.R)
        g[0] -= self.prior_sqrt_w * self.prior_residual
        g_c = np.einsum("n,nij,nj->i", self.meas_sqrt_w, skews, self.meas_residuals)

        return _assemble(diag, upper, border, corner), np.concatenate([g.ravel(), g_c])


class FactorGraph:
    """Keyframe snapshots, node states, the constant attitude and the noise model."""

    def __init__(self, dt: float, noise: NoiseModel):
        if not dt > 0:
            raise ValueError(f"keyframe interval must be positive, got {dt}")
        self.dt = dt
        self.noise = noise
        self.keyframes: list[KeyframeSnapshot] = []
        self.states = np.zeros((0, STATE_DIM))
        self.constant: ConstantAttitude | None = None
        self._transitions: NDArray[np.float64] | None = None
        self._measurements: tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]] | None = None

    def __len__(self) -> int:
        return len(self.keyframes)

    @property
    def nodes(self) -> list[NodeState]:
        return [NodeState.from_vector(x) for x in self.states]

    @property
    def ins_factor_count(self) -> int:
        return max(len(self) - 1, 0)

    @property
    def measurement_factor_count(self) -> int:
        return len(self)

    @property
    def prior_count(self) -> int:
        return 1 if len(self) else 0

    @property
    def unknown_count(self) -> int:
        return STATE_DIM * len(self) + 3

    def add_keyframe(self, snap: KeyframeSnapshot, previous_mean: Matrix3 | None = None) -> "FactorGraph":
        """Append ``snap`` with a zero node state.

        The previous keyframe's interval is closed here: its f̄ becomes
        (F̃_{k+1} − F̃_k) / dt unless already set, and ``previous_mean`` (the interval
        average of C_b^{ĩb0}) is attached when given.

        :raises KeyframeOrderError: On a wrong index or an interval other than ``dt``.
        """
        if snap.index != len(self):
            raise KeyframeOrderError(f"expected keyframe {len(self)}, got {snap.index}")
        if not (np.all(np.isfinite(snap.C)) and np.all(np.isfinite(snap.F)) and np.all(np.isfinite(snap.G))):
            raise ValueError(f"keyframe {snap.index} has non-finite components")
        if self.keyframes:
            prev = self.keyframes[-1]
            interval = snap.t - prev.t
            if not abs(interval - self.dt) <= INTERVAL_TOLERANCE:
                raise KeyframeOrderError(f"keyframe {snap.index} is {interval:.9f} s after its predecessor, expected {self.dt:.9f} s")
            f_bar = prev.f_bar if prev.f_bar is not None else (np.asarray(snap.F) - np.asarray(prev.F)) / self.dt
            C_mean = previous_mean if previous_mean is not None else prev.C_mean
            self.keyframes[-1] = replace(prev, f_bar=f_bar, C_mean=C_mean)
        self.keyframes.append(snap)
        self.states = np.vstack([self.states, np.zeros((1, STATE_DIM))])
        self._transitions = None
        self._measurements = None
        return self

    def transitions(self) -> NDArray[np.float64]:
        """A_k of every INS factor, shape (n − 1, 12, 12)."""
        if self._transitions is None:
            closed = self.keyframes[:-1]
            if closed:
                C_bias = np.stack([k.bias_coefficient for k in closed])
                f_bar = np.stack([np.asarray(k.f_bar) for k in closed])
                self._transitions = transition_batch(C_bias, f_bar, self.dt)
            else:
                self._transitions = np.zeros((0, STATE_DIM, STATE_DIM))
        return self._transitions

    def predict_last(self) -> NDArray[np.float64]:
        """One-step prediction of the newest node from its predecessor."""
        if len(self) < 2:
            return np.zeros(STATE_DIM)
        return self.transitions()[-1] @ self.states[-2]

    def wahba_pairs(self) -> list[tuple[NDArray[np.float64], NDArray[np.float64]]]:
        return [(np.asarray(k.F), np.asarray(k.G)) for k in self.keyframes]

    def _measurement_arrays(self) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        if self._measurements is None:
            t = np.array([k.t for k in self.keyframes])
            F = np.stack([np.asarray(k.F) for k in self.keyframes])
            G = np.stack([np.asarray(k.G) for k in self.keyframes])
            self._measurements = (F, G, self.noise.iosf_weights(t))
        return self._measurements

    def whitened_residuals(self, X: NDArray[np.float64], R: Matrix3) -> NDArray[np.float64]:
        """All residuals scaled by the square root of their information, concatenated."""
        F, G, s = self._measurement_arrays()
        ins = ins_residual_batch(X, self.transitions()) / np.sqrt(self.noise.ins_var)
        meas = measurement_residual_batch(X, R, F, G) * np.sqrt(s)[:, None]
        prior = -X[0] / np.sqrt(self.noise.prior_var)
        return np.concatenate([ins.ravel(), meas.ravel(), prior])

    def cost(self, X: NDArray[np.float64], R: Matrix3) -> float:
        """Sum of Mahalanobis-weighted squared residuals."""
        r = self.whitened_residuals(X, R)
        return float(r @ r)

    def linear_system(self, X: NDArray[np.float64], R: Matrix3) -> LinearSystem:
        """Whitened residuals and Jacobian blocks at (X, R)."""
        F, G, s = self._measurement_arrays()
        A = self.transitions()
        ins_sqrt_w = 1.0 / np.sqrt(self.noise.ins_var)
        prior_sqrt_w = 1.0 / np.sqrt(self.noise.prior_var)
        meas_sqrt_w = np.sqrt(s)
        rotated = rotated_vectors(X, R, F)
        return LinearSystem(
            R=np.asarray(R, dtype=np.float64),
            transitions=A,
            ins_sqrt_w=ins_sqrt_w,
            ins_residuals=ins_residual_batch(X, A) * ins_sqrt_w,
            meas_sqrt_w=meas_sqrt_w,
            meas_skews=skew_batch(rotated),
            meas_residuals=(rotated - G) * meas_sqrt_w[:, None],
            prior_sqrt_w=prior_sqrt_w,
            prior_residual=-X[0] * prior_sqrt_w,
        )

    def linearize(self, X: NDArray[np.float64], R: Matrix3) -> tuple[sp.csc_matrix, NDArray[np.float64], float]:
        """Normal equations H·δ = −g at (X, R) and the cost there."""
        system = self.linear_system(X, R)
        H, g = system.normal_equations()
        return H, g, system.cost


def _block_indices(row_offsets: NDArray[np.int64], col_offsets: NDArray[np.int64], rows: int, cols: int):
    r = row_offsets[:, None, None] + np.arange(rows)[None, :, None] + np.zeros((1, 1, cols), dtype=np.int64)
    c = col_offsets[:, None, None] + np.arange(cols)[None, None, :] + np.zeros((1, rows, 1), dtype=np.int64)
    return r.ravel(), c.ravel()


def _assemble(diag, upper, border, corner) -> sp.csc_matrix:
    n = diag.shape[0]
    size = STATE_DIM * n + 3
    base = STATE_DIM * np.arange(n)
    hub = np.full(n, STATE_DIM * n)

    rows, cols, data = [], [], []

    def put(r_off, c_off, blocks, mirror=False):
        r, c = _block_indices(r_off, c_off, blocks.shape[1], blocks.shape[2])
        rows.append(r)
        cols.append(c)
        data.append(blocks.ravel())
        if mirror:
            rows.append(c)
            cols.append(r)
            data.append(blocks.ravel())

    put(base, base, diag)
    if n > 1:
        put(base[:-1], base[1:], upper, mirror=True)
    put(base, hub, border, mirror=True)
    put(np.array([STATE_DIM * n]), np.array([STATE_DIM * n]), corner[None])

    H = sp.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))
    return H.tocsc()


def add_keyframe(g: FactorGraph, snap: KeyframeSnapshot, previous_mean: Matrix3 | None = None) -> FactorGraph:
    return g.add_keyframe(snap, previous_mean)

