"""Per-object pose + shape solve: alternating pose and coefficient blocks.

The per-object loss is

    sum_i s_i ||pi(R X_i + T) - x_i||^2  +  mu ||lambda||^2
        + mu1 D_p2p(T)^2 + mu2 D_v2v(R)^2       (plane terms when supplied)

Each block step only accepts loss reductions, so the total is monotonically
non-increasing across the alternation.
"""

import numpy as np

from .errors import BehindCameraError, NoProgressError
from .plane_consensus import normal_angle, point_plane_distance
from .projection import reprojection_residuals
from .rotations import exp_so3, project_to_so3, skew
from .scene_model import CANONICAL_UP, ObjectState, coeff_box, object_up_axis


def object_loss(state, det, atlas, cam, plane, weights):
    """Evaluate the per-object loss (reprojection + Tikhonov + plane terms)."""
    mu, mu1, mu2 = weights
    block = reprojection_residuals(state, det, atlas, cam)
    loss = block.loss + mu * float(state.coeffs @ state.coeffs)
    # plane terms below mirror _stacked_system; keep the two in sync
    if plane is not None:
        if mu1 > 0:
            loss += mu1 * point_plane_distance(state.translation, plane) ** 2
        if mu2 > 0:
            loss += mu2 * normal_angle(object_up_axis(state), plane) ** 2
    return loss


def _v2v_residual_row(state, plane, sqrt_mu2):
    """Residual sqrt(mu2)*arcsin(|n x u|) and its gradient wrt the rotation tangent."""
    n = plane.normal / np.linalg.norm(plane.normal)
    u = object_up_axis(state)
    v = np.cross(n, u)
    s = float(np.linalg.norm(v))
    s = min(s, 1.0)
    res = sqrt_mu2 * np.arcsin(s)
    grad = np.zeros(3)
    c = abs(float(n @ u))
    if s > 1e-9 and c > 1e-6:
        # d(arcsin s)/du = (1/|c|) * [n]x^T (n x u)/s ; du/dw = -[u]x
        ds_du = skew(n).T @ (v / s)
        grad = (1.0 / c) * (ds_du @ (-skew(u)))
    return res, sqrt_mu2 * grad


def _stacked_system(state, det, atlas, cam, plane, weights):
    """Residual vector and Jacobian over (rotation tangent, translation, coeffs)."""
    mu, mu1, mu2 = weights
    m = atlas.n_components
    block = reprojection_residuals(state, det, atlas, cam)
    rows = [block.residuals]
    jrows = [block.jacobian[:, 0 : 6 + m]]
    if mu > 0:
        jr = np.zeros((m, 6 + m))
        jr[:, 6 : 6 + m] = np.sqrt(mu) * np.eye(m)
        rows.append(np.sqrt(mu) * state.coeffs)
        jrows.append(jr)
    if plane is not None and mu1 > 0:
        n = plane.normal / np.linalg.norm(plane.normal)
        d = point_plane_distance(state.translation, plane)
        rows.append([np.sqrt(mu1) * d])
        jr = np.zeros((1, 6 + m))
        jr[0, 3:6] = np.sqrt(mu1) * n
        jrows.append(jr)
    if plane is not None and mu2 > 0:
        res, grad = _v2v_residual_row(state, plane, np.sqrt(mu2))
        rows.append([res])
        jr = np.zeros((1, 6 + m))
        jr[0, 0:3] = grad
        jrows.append(jr)
    r = np.concatenate([np.atleast_1d(np.asarray(x, dtype=float)) for x in rows])
    return r, np.vstack(jrows)


def _joint_step(state, det, atlas, cam, plane, weights, loss, damping, bound_mode):
    """One damped Gauss-Newton step over pose and coefficients jointly.

    Coefficients are projected back onto their box after the step; the step
    is only accepted when the loss does not increase.
    """
    r, j = _stacked_system(state, det, atlas, cam, plane, weights)
    g = j.T @ r
    h = j.T @ j
    lo, hi = coeff_box(atlas, bound_mode)
    while damping < 1e10:
        step = np.linalg.solve(h + damping * np.diag(np.maximum(np.diag(h), 1e-12)), -g)
        try:
            cand = ObjectState(
                rotation=project_to_so3(exp_so3(step[0:3]) @ state.rotation),
                translation=state.translation + step[3:6],
                coeffs=np.clip(state.coeffs + step[6:], lo, hi),
            )
            cand_loss = object_loss(cand, det, atlas, cam, plane, weights)
        except (BehindCameraError, ValueError):
            damping *= 10.0
            continue
        if cand_loss <= loss:
            return cand, cand_loss, max(damping / 3.0, 1e-12)
        damping *= 10.0
    return state, loss, damping


def lambda_step(state, det, atlas, cam, mu, bound_mode="symmetric"):
    """Coefficient update: regularized linearized least squares, box-projected.

    Linearizes the reprojection residuals around the current coefficients,
    solves (J^T J + mu I) lam = J^T (J lam0 - r) for the new coefficients and
    projects onto the active box ([0, U_j] in paper_literal mode, [-U_j, U_j]
    in symmetric mode).
    """
    m = atlas.n_components
    block = reprojection_residuals(state, det, atlas, cam)
    j = block.jacobian[:, 6 : 6 + m]
    r = block.residuals
    h = j.T @ j + mu * np.eye(m)
    rhs = j.T @ (j @ state.coeffs - r)
    lam = np.linalg.solve(h, rhs)
    lo, hi = coeff_box(atlas, bound_mode)
    return np.clip(lam, lo, hi)


def _coeff_step(state, det, atlas, cam, plane, weights, loss, bound_mode):
    """Apply lambda_step with a backtracking line search to guarantee descent."""
    mu = weights[0]
    target = lambda_step(state, det, atlas, cam, mu, bound_mode)
    direction = target - state.coeffs
    if np.max(np.abs(direction)) < 1e-15:
        return state, loss
    alpha = 1.0
    for _ in range(12):
        cand_coeffs = state.coeffs + alpha * direction  # stays inside the convex box
        try:
            cand = ObjectState(
                rotation=state.rotation, translation=state.translation, coeffs=cand_coeffs
            )
            cand_loss = object_loss(cand, det, atlas, cam, plane, weights)
        except (BehindCameraError, ValueError):
            alpha *= 0.5
            continue
        if cand_loss <= loss:
            return cand, cand_loss
        alpha *= 0.5
    return state, loss


def solve_object(init, det, atlas, cam, plane, weights, config):
    """Minimize the per-object loss: joint damped steps plus a shape block.

    Each inner iteration takes one damped Gauss-Newton step over pose and
    coefficients together (a strict two-block alternation zig-zags on the
    strongly coupled depth/shape directions) followed by the box-constrained
    coefficient block. Every sub-step only accepts loss reductions.

    Returns (state, final_loss, loss_history). The history starts at the
    initial loss and is non-increasing.
    """
    state = init
    try:
        loss = object_loss(state, det, atlas, cam, plane, weights)
    except BehindCameraError as exc:
        raise NoProgressError(str(exc), best_state=init) from exc
    history = [loss]
    damping = 1e-4
    for _ in range(config.inner_max_iters):
        prev = loss
        state, loss, damping = _joint_step(
            state, det, atlas, cam, plane, weights, loss, damping, config.coeff_bound_mode
        )
        state, loss = _coeff_step(
            state, det, atlas, cam, plane, weights, loss, config.coeff_bound_mode
        )
        history.append(loss)
        if prev - loss <= config.inner_tol * max(prev, 1.0):
            break
    return state, loss, history
