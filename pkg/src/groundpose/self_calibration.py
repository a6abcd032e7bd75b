"""Focal-length correction from plane disagreement, and depth rescaling.

Two consensus planes are available each outer iteration: one fitted to
object positions (whose tilt absorbs any focal-length error through the
depth axis) and one from object up-axes (whose normal is insensitive to the
focal). Comparing their z-components yields a multiplicative focal
correction; rescaling every object's depth by the same ratio preserves the
weak-perspective reprojection, so re-optimization can be warm-started.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BehindCameraError, InvalidArgumentError
from .projection import reprojection_residuals
from .rotations import exp_so3, project_to_so3
from .scene_model import CameraIntrinsics, ObjectState, coeff_box


@dataclass(frozen=True)
class FocalUpdate:
    focal: float
    clamped: bool = False
    unobservable: bool = False


def _check_normalized(plane, name):
    if abs(np.linalg.norm(plane.normal) - 1.0) > 1e-6:
        raise InvalidArgumentError(f"{name} must be normalized before the focal update")


def focal_update(plane_t, plane_r, focal, f_min=None, f_max=None, eps=1e-3):
    """New focal from the ratio of the two planes' normalized z-components.

    plane_t is fitted to object translations, plane_r to object up-axes.
    The update is focal * v_c(translations) / v_c(rotations): an over-large
    focal inflates depths, which shrinks |v_c| of the translations plane
    relative to the rotation consensus, so the ratio pulls the focal back.
    Identical planes are an exact fixed point.

    When either |v_c| falls below eps the plane is near-parallel to the
    optical axis and the correction is unobservable: the focal is returned
    unchanged with the `unobservable` flag set.
    """
    _check_normalized(plane_t, "translations plane")
    _check_normalized(plane_r, "rotations plane")
    vc_t = float(plane_t.coeffs[2])
    vc_r = float(plane_r.coeffs[2])
    if min(abs(vc_t), abs(vc_r)) <= eps:
        return FocalUpdate(focal=float(focal), unobservable=True)
    # ratio first: identical planes give vc_t / vc_r == 1.0 exactly, so the
    # fixed point focal_update(p, p, f) == f holds to the bit
    new = float(focal) * (vc_t / vc_r)
    clamped = False
    if new <= 0:
        return FocalUpdate(focal=float(focal), unobservable=True)
    if f_min is not None and new < f_min:
        new, clamped = float(f_min), True
    if f_max is not None and new > f_max:
        new, clamped = float(f_max), True
    return FocalUpdate(focal=new, clamped=clamped)


def _joint_reprojection_loss(states, detections, atlas, cam, mu):
    total = 0.0
    for state, det in zip(states, detections):
        block = reprojection_residuals(state, det, atlas, cam)
        total += block.loss + mu * float(state.coeffs @ state.coeffs)
    return total


def focal_polish(states, detections, atlas, cam, mu, bound_mode="symmetric", max_iters=60):
    """Joint damped Gauss-Newton over every object's pose/coeffs and the focal.

    The plane-ratio focal update reads a one-dimensional signal and can stall
    near, but not at, the reprojection optimum; this finisher descends the
    full score-weighted reprojection loss with the focal as a shared column,
    so the focal/depth valley is traversed jointly instead of by alternation.
    Steps are only accepted when the loss does not increase.

    Returns (states, cam, loss) for the live objects passed in.
    """
    if len(states) != len(detections):
        raise InvalidArgumentError("states and detections must pair up")
    if not states:
        return list(states), cam, 0.0
    m = atlas.n_components
    per = 6 + m
    lo, hi = coeff_box(atlas, bound_mode)
    states = list(states)
    loss = _joint_reprojection_loss(states, detections, atlas, cam, mu)
    damping = 1e-4
    for _ in range(max_iters):
        rows, jrows = [], []
        for k, (state, det) in enumerate(zip(states, detections)):
            block = reprojection_residuals(state, det, atlas, cam)
            nr = block.residuals.size
            j = np.zeros((nr + m, per * len(states) + 1))
            j[:nr, k * per : (k + 1) * per] = block.jacobian[:, :per]
            j[:nr, -1] = block.jacobian[:, per]  # shared focal column
            j[nr:, k * per + 6 : (k + 1) * per] = np.sqrt(mu) * np.eye(m)
            rows.append(np.concatenate([block.residuals, np.sqrt(mu) * state.coeffs]))
            jrows.append(j)
        r = np.concatenate(rows)
        jac = np.vstack(jrows)
        g = jac.T @ r
        h = jac.T @ jac
        improved = False
        while damping < 1e10:
            step = np.linalg.solve(h + damping * np.diag(np.maximum(np.diag(h), 1e-12)), -g)
            try:
                cand_cam = CameraIntrinsics(
                    focal=cam.focal + step[-1], principal_point=cam.principal_point
                )
                cand = [
                    ObjectState(
                        rotation=project_to_so3(exp_so3(step[k * per : k * per + 3]) @ s.rotation),
                        translation=s.translation + step[k * per + 3 : k * per + 6],
                        coeffs=np.clip(s.coeffs + step[k * per + 6 : (k + 1) * per], lo, hi),
                    )
                    for k, s in enumerate(states)
                ]
                cand_loss = _joint_reprojection_loss(cand, detections, atlas, cand_cam, mu)
            except (BehindCameraError, ValueError):
                damping *= 10.0
                continue
            if cand_loss <= loss:
                stalled = loss - cand_loss <= 1e-14 * max(loss, 1.0)
                states, cam, loss = cand, cand_cam, cand_loss
                damping = max(damping / 3.0, 1e-12)
                improved = not stalled
                break
            damping *= 10.0
        if not improved:
            break
    return states, cam, loss


def depth_rescale(state, scale):
    """Scale the translation's z-component; rotation, x, y, coeffs unchanged."""
    if scale <= 0:
        raise InvalidArgumentError(f"scale must be positive, got {scale}")
    t = state.translation.copy()
    t[2] *= scale
    return ObjectState(rotation=state.rotation, translation=t, coeffs=state.coeffs)
