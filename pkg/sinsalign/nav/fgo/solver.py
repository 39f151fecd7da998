"""
Damped Gauss-Newton (Levenberg-Marquardt) solver over SO(3) × R^{12n}.

The linearized problem is solved in square-root form. Walking along the chain,
the rows touching x_k (the rows carried from x_{k-1}, the measurement and
damping rows of x_k and the INS factor to x_{k+1}) are reduced by a Householder
QR over [x_k, x_{k+1}, δφ_c]. The top block row is kept for back substitution
and the rest is carried to the next node. The last node closes the system with
δφ_c, so the hub is eliminated exactly and no normal matrix is ever formed.

Rows are sorted by magnitude before each factorization because the bias rows
carry weights many orders above the measurement rows.

The first step of a solve is undamped. Marquardt damping λ·diag(JᵀJ) is only
switched on when a step fails to lower the cost, and it relaxes with the gain
ratio of accepted steps.
"""

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_triangular

from sinsalign.core.log.alignLogger import logger
from sinsalign.nav.coarse import solve_wahba
from sinsalign.nav.fgo.domain import DELTA_F, STATE_DIM, ConstantAttitude, NodeState, SolveReport, SolverTraceRow
from sinsalign.nav.fgo.graph import FactorGraph, LinearSystem
from sinsalign.nav.rotation import orthonormalize, so3_exp

MAX_ITERATIONS = 50
RELATIVE_COST_TOLERANCE = 1e-8
STEP_TOLERANCE = 1e-10
INITIAL_DAMPING = 0.0
MIN_DAMPING = 1e-10
MAX_DAMPING = 1e8

# column layout of the per-node block rows
X_K = slice(0, STATE_DIM)
X_NEXT = slice(STATE_DIM, 2 * STATE_DIM)
HUB = slice(2 * STATE_DIM, 2 * STATE_DIM + 3)
RHS = 2 * STATE_DIM + 3
WIDTH = RHS + 1
CARRIED = STATE_DIM + 3


def _triangularize(rows: NDArray[np.float64]) -> NDArray[np.float64]:
    order = np.argsort(-np.max(np.abs(rows[:, :-1]), axis=1), kind="stable")
    return np.linalg.qr(rows[order], mode="r")


def _node_rows(system: LinearSystem, k: int, carried: NDArray[np.float64], damping_x: NDArray[np.float64] | None) -> NDArray[np.float64]:
    """Every row of the reduced system that touches x_k, in the [x_k, x_{k+1}, δφ_c, rhs] layout."""
    blocks = [carried]
    if k == 0:
        prior = np.zeros((STATE_DIM, WIDTH))
        prior[:, X_K] = -np.diag(system.prior_sqrt_w)
        prior[:, RHS] = -system.prior_residual
        blocks.append(prior)

    meas = np.zeros((3, WIDTH))
    meas[:, DELTA_F] = -system.meas_sqrt_w[k] * system.R
    meas[:, HUB] = -system.meas_sqrt_w[k] * system.meas_skews[k]
    meas[:, RHS] = -system.meas_residuals[k]
    blocks.append(meas)

    if damping_x is not None:
        damp = np.zeros((STATE_DIM, WIDTH))
        damp[:, X_K] = np.diag(damping_x[k])
        blocks.append(damp)

    if k < system.node_count - 1:
        ins = np.zeros((STATE_DIM, WIDTH))
        ins[:, X_K] = -system.ins_sqrt_w[:, None] * system.transitions[k]
        ins[:, X_NEXT] = np.diag(system.ins_sqrt_w)
        ins[:, RHS] = -system.ins_residuals[k]
        blocks.append(ins)
    return np.vstack(blocks)


def _damped_step(system: LinearSystem, damping: float) -> NDArray[np.float64]:
    """Minimizer δ of ‖r + J·δ‖² + λ·δᵀ·diag(JᵀJ)·δ.

    Returns NaNs when the reduced system is singular.
    """
    n = system.node_count
    damping_x = damping_c = None
    if damping > 0:
        d = np.sqrt(damping * system.hessian_diagonal())
        damping_x = d[: STATE_DIM * n].reshape(n, STATE_DIM)
        damping_c = d[STATE_DIM * n :]

    pivots = []
    carried = np.zeros((0, WIDTH))
    for k in range(n - 1):
        T = _triangularize(_node_rows(system, k, carried, damping_x))
        pivots.append(T[:STATE_DIM])
        carried = np.zeros((CARRIED, WIDTH))
        carried[:, X_K] = T[STATE_DIM : STATE_DIM + CARRIED, X_NEXT]
        carried[:, HUB] = T[STATE_DIM : STATE_DIM + CARRIED, HUB]
        carried[:, RHS] = T[STATE_DIM : STATE_DIM + CARRIED, RHS]

    last = np.delete(_node_rows(system, n - 1, carried, damping_x), X_NEXT, axis=1)
    if damping_c is not None:
        damp = np.zeros((3, last.shape[1]))
        damp[:, STATE_DIM:CARRIED] = np.diag(damping_c)
        last = np.vstack([last, damp])
    T = _triangularize(last)

    delta = np.empty(STATE_DIM * n + 3)
    try:
        tail = solve_triangular(T[:CARRIED, :CARRIED], T[:CARRIED, CARRIED], check_finite=False)
        dc = tail[STATE_DIM:]
        delta[STATE_DIM * (n - 1) :] = tail
        x_next = tail[:STATE_DIM]
        for k in range(n - 2, -1, -1):
            P = pivots[k]
            rhs = P[:, RHS] - P[:, X_NEXT] @ x_next - P[:, HUB] @ dc
            x_next = solve_triangular(P[:, X_K], rhs, check_finite=False)
            delta[STATE_DIM * k : STATE_DIM * (k + 1)] = x_next
    except np.linalg.LinAlgError:
        delta[:] = np.nan
    return delta


def _apply_step(X: NDArray[np.float64], R: NDArray[np.float64], delta: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    n = X.shape[0]
    X_new = X + delta[: STATE_DIM * n].reshape(n, STATE_DIM)
    R_new = orthonormalize(so3_exp(delta[STATE_DIM * n :]) @ R)
    return X_new, R_new


def _at_minimum(system: LinearSystem, cost: float, damping: float) -> bool:
    """True when the undamped model predicts no relative gain above the tolerance."""
    if damping == 0.0:
        return True
    return bool(cost - system.model_cost(_damped_step(system, 0.0)) <= RELATIVE_COST_TOLERANCE * cost)


def _raise_damping(damping: float) -> float:
    return max(damping * 10.0, MIN_DAMPING)


def _relax_damping(damping: float, gain_ratio: float) -> float:
    damping *= max(1.0 / 3.0, 1.0 - (2.0 * gain_ratio - 1.0) ** 3)
    return damping if damping >= MIN_DAMPING else 0.0


def solve(
    g: FactorGraph,
    init_R: ConstantAttitude | None = None,
    max_iterations: int = MAX_ITERATIONS,
) -> tuple[list[NodeState], ConstantAttitude, SolveReport]:
    """Minimize the weighted least-squares cost of ``g``.

    With ``init_R`` the current node states of the graph are the starting point;
    without it R comes from the Wahba solution over the keyframe pairs and every
    node starts at zero. The optimum is written back into the graph.

    The solve converges when the undamped linear model predicts a relative gain
    below ``RELATIVE_COST_TOLERANCE`` or a step under ``STEP_TOLERANCE``, or when an
    accepted step changes the cost by less than ``RELATIVE_COST_TOLERANCE``. Running out of
    iterations, or of damping without a descent, leaves ``converged`` false.

    :raises ValueError: With fewer than two keyframes.
    :raises DegenerateGeometryError: When the Wahba initializer has collinear pairs.
    """
    if len(g) < 2:
        raise ValueError(f"solve needs at least 2 keyframes, got {len(g)}")
    if init_R is None:
        R = solve_wahba(g.wahba_pairs()).R_hat
        X = np.zeros_like(g.states)
    else:
        R = np.asarray(init_R.R, dtype=np.float64)
        X = g.states.copy()

    cost = g.cost(X, R)
    report = SolveReport(iterations=0, initial_cost=cost, final_cost=cost, converged=cost == 0.0, damping_final=INITIAL_DAMPING)
    damping = INITIAL_DAMPING
    stalled = False

    while not report.converged and not stalled and report.iterations < max_iterations:
        report.iterations += 1
        system = g.linear_system(X, R)
        cost = system.cost
        while True:
            delta = _damped_step(system, damping)
            if not np.all(np.isfinite(delta)):
                if damping >= MAX_DAMPING:
                    stalled = True
                    break
                damping = _raise_damping(damping)
                continue
            step_norm = float(np.linalg.norm(delta))
            predicted = cost - system.model_cost(delta)
            if (predicted <= RELATIVE_COST_TOLERANCE * cost or step_norm < STEP_TOLERANCE) and _at_minimum(system, cost, damping):
                report.trace.append(SolverTraceRow(iteration=report.iterations, cost=cost, damping=damping, step_norm=step_norm))
                report.converged = True
                break

            X_new, R_new = _apply_step(X, R, delta)
            new_cost = g.cost(X_new, R_new)
            report.trace.append(SolverTraceRow(iteration=report.iterations, cost=new_cost, damping=damping, step_norm=step_norm))
            logger.debug(f"FGO iteration {report.iterations}: cost {new_cost:.6e}, damping {damping:.1e}, step {step_norm:.3e}")
            if new_cost < cost:
                gain_ratio = (cost - new_cost) / predicted if predicted > 0 else 0.0
                relative_change = (cost - new_cost) / cost
                X, R, cost = X_new, R_new, new_cost
                damping = _relax_damping(damping, gain_ratio)
                if relative_change < RELATIVE_COST_TOLERANCE:
                    report.converged = True
                break
            if damping >= MAX_DAMPING:
                stalled = True
                break
            damping = _raise_damping(damping)

    report.final_cost = cost
    report.damping_final = damping
    if not report.converged:
        reason = "no descent at maximum damping" if stalled else f"{report.iterations} iterations"
        logger.warning(f"FGO solve stopped without converging ({reason}, cost {cost:.6e})")

    g.states = X
    g.constant = ConstantAttitude(R=R)
    return g.nodes, g.constant, report
