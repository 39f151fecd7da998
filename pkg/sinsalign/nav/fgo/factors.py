"""
Residuals and Jacobians of the three factor types.

The single-factor functions take domain objects; the ``*_batch`` functions
evaluate the same expressions for a whole chain at once and are what the
solver uses.
"""

import numpy as np
from numpy.typing import NDArray

from sinsalign.nav.fgo.domain import ACC, DELTA_F, EPS, PHI, STATE_DIM, ConstantAttitude, KeyframeSnapshot, NodeState
from sinsalign.nav.domain import Matrix3, Vector3
from sinsalign.nav.rotation import skew


def skew_batch(v: NDArray[np.float64]) -> NDArray[np.float64]:
    """Stack of skew matrices for vectors of shape (n, 3)."""
    out = np.zeros((v.shape[0], 3, 3))
    out[:, 0, 1] = -v[:, 2]
    out[:, 0, 2] = v[:, 1]
    out[:, 1, 0] = v[:, 2]
    out[:, 1, 2] = -v[:, 0]
    out[:, 2, 0] = -v[:, 1]
    out[:, 2, 1] = v[:, 0]
    return out


def transition_batch(C_bias: NDArray[np.float64], f_bar: NDArray[np.float64], dt: float) -> NDArray[np.float64]:
    """One-step transition matrices A_k, shape (n, 12, 12).

        φ_{k+1}  = φ_k − C·ε_k·dt
        δF_{k+1} = δF_k + (C·∇_k + skew(f̄_k)·φ_k)·dt
        ε, ∇ constant
    """
    n = C_bias.shape[0]
    A = np.broadcast_to(np.eye(STATE_DIM), (n, STATE_DIM, STATE_DIM)).copy()
    A[:, PHI, EPS] = -C_bias * dt
    A[:, DELTA_F, PHI] = skew_batch(f_bar) * dt
    A[:, DELTA_F, ACC] = C_bias * dt
    return A


def transition_matrix(snap: KeyframeSnapshot, dt: float) -> NDArray[np.float64]:
    """A_k of the INS factor leaving ``snap``.

    :raises ValueError: If the interval of ``snap`` is not closed yet.
    """
    if snap.f_bar is None:
        raise ValueError(f"keyframe {snap.index} has no interval average yet")
    return transition_batch(snap.bias_coefficient[None], np.asarray(snap.f_bar)[None], dt)[0]


def ins_residual_batch(X: NDArray[np.float64], A: NDArray[np.float64]) -> NDArray[np.float64]:
    """x_{k+1} − A_k·x_k for every chain link, shape (n − 1, 12)."""
    return X[1:] - np.einsum("nij,nj->ni", A, X[:-1])


def ins_factor(
    x_k: NodeState, x_k1: NodeState, snap: KeyframeSnapshot, dt: float
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Residual x_{k+1} − f(x_k) with J_k = −A_k and J_{k+1} = I."""
    A = transition_matrix(snap, dt)
    residual = ins_residual_batch(np.stack([x_k.to_vector(), x_k1.to_vector()]), A[None])[0]
    return residual, -A, np.eye(STATE_DIM)


def rotated_vectors(X: NDArray[np.float64], R: Matrix3, F: NDArray[np.float64]) -> NDArray[np.float64]:
    """R·(F̃_k − δF_k) for every keyframe, shape (n, 3)."""
    return (F - X[:, DELTA_F]) @ R.T


def measurement_residual_batch(X: NDArray[np.float64], R: Matrix3, F: NDArray[np.float64], G: NDArray[np.float64]) -> NDArray[np.float64]:
    return rotated_vectors(X, R, F) - G


def measurement_factor(
    x_k: NodeState, c: ConstantAttitude, snap: KeyframeSnapshot
) -> tuple[Vector3, NDArray[np.float64], Matrix3]:
    """Residual R·(F̃_k − δF_k) − G_k.

    J_x is −R on the δF block and zero elsewhere; J_R is taken with respect to the
    left perturbation R ← exp(skew(φ_c))·R and equals −skew(R·(F̃_k − δF_k)).
    """
    rotated = c.R @ (np.asarray(snap.F) - x_k.dF)
    J_x = np.zeros((3, STATE_DIM))
    J_x[:, DELTA_F] = -c.R
    return rotated - np.asarray(snap.G), J_x, -skew(rotated)


def prior_factor(x_1: NodeState) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Zero-mean prior on the first node: residual −x_1, J = −I."""
    return -x_1.to_vector(), -np.eye(STATE_DIM)


def prior_cost(x_1: NodeState, prior_var: NDArray[np.float64]) -> float:
    """x_1ᵀ·Σ_PRIOR⁻¹·x_1."""
    residual, _ = prior_factor(x_1)
    return float(np.sum(residual**2 / prior_var))

