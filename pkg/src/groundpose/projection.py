"""Perspective and weak-perspective projection, weighted residuals, Jacobians.

Parameter layout used by every Jacobian in the package, 6 + m + 1 columns:

    [0:3]     rotation tangent (axis-angle increment applied on the left)
    [3:6]     translation
    [6:6+m]   shape coefficients
    [6+m]     focal length
"""

from dataclasses import dataclass

import numpy as np

from .errors import BehindCameraError, InvalidArgumentError
from .rotations import exp_so3, project_to_so3, skew
from .scene_model import instantiate_shape


@dataclass(frozen=True)
class ResidualBlock:
    """Stacked weighted reprojection residuals and their analytic Jacobian."""

    residuals: np.ndarray  # (2n,)
    jacobian: np.ndarray  # (2n, 6 + m + 1)

    @property
    def loss(self):
        return float(self.residuals @ self.residuals)


def project_point(p, cam):
    """Full-perspective projection of one camera-frame point to pixels."""
    p = np.asarray(p, dtype=float)
    if p[2] <= 0:
        raise BehindCameraError(f"point has non-positive depth z = {p[2]}")
    return cam.focal * p[:2] / p[2] + cam.principal_point


def project_points(points, cam):
    """Vectorized project_point over an (n, 3) array."""
    points = np.asarray(points, dtype=float)
    if np.any(points[:, 2] <= 0):
        raise BehindCameraError("at least one point has non-positive depth")
    return cam.focal * points[:, :2] / points[:, 2:3] + cam.principal_point


def project_weak(points, depth_ref, cam):
    """Weak-perspective projection: every point shares the reference depth."""
    if depth_ref <= 0:
        raise InvalidArgumentError(f"depth_ref must be positive, got {depth_ref}")
    points = np.asarray(points, dtype=float)
    return cam.focal * points[:, :2] / depth_ref + cam.principal_point


def reprojection_residuals(state, det, atlas, cam):
    """Score-weighted reprojection residuals of one object, with Jacobian.

    Residual rows carry sqrt(score) so that the squared norm of the stacked
    vector equals the score-weighted reprojection error. Keypoints with zero
    score contribute zero rows (residual and Jacobian).
    """
    n, m = atlas.n_keypoints, atlas.n_components
    if det.keypoints.shape[0] != n:
        raise InvalidArgumentError("detection keypoint count does not match atlas")
    shape = instantiate_shape(atlas, state.coeffs)
    q = shape @ state.rotation.T  # (n, 3) rotated points
    p = q + state.translation
    active = det.scores > 0
    if np.any(p[active, 2] <= 0):
        raise BehindCameraError(
            f"object {det.id!r}: transformed keypoint behind the camera"
        )
    residuals = np.zeros(2 * n)
    jac = np.zeros((2 * n, 6 + m + 1))
    f = cam.focal
    sqrt_s = np.sqrt(det.scores)
    for i in np.flatnonzero(active):
        px, py, pz = p[i]
        proj = np.array([f * px / pz + cam.principal_point[0], f * py / pz + cam.principal_point[1]])
        w = sqrt_s[i]
        rows = slice(2 * i, 2 * i + 2)
        residuals[rows] = w * (proj - det.keypoints[i])
        dpi = np.array([[f / pz, 0.0, -f * px / pz**2], [0.0, f / pz, -f * py / pz**2]])
        jac[rows, 0:3] = w * (dpi @ (-skew(q[i])))
        jac[rows, 3:6] = w * dpi
        # dX_i/dlambda_j = basis[j, i]; chain through R and the projection
        jac[rows, 6 : 6 + m] = w * (dpi @ (state.rotation @ atlas.basis[:, i, :].T))
        jac[rows, 6 + m] = w * np.array([px / pz, py / pz])
    return ResidualBlock(residuals=residuals, jacobian=jac)


def _perturbed(state, cam, delta, m):
    """Apply a parameter-vector increment; used by the finite-difference check."""
    from dataclasses import replace

    from .scene_model import CameraIntrinsics, ObjectState

    rot = project_to_so3(exp_so3(delta[0:3]) @ state.rotation)
    st = ObjectState(
        rotation=rot,
        translation=state.translation + delta[3:6],
        coeffs=state.coeffs + delta[6 : 6 + m],
    )
    cam2 = CameraIntrinsics(focal=cam.focal + delta[6 + m], principal_point=cam.principal_point)
    return st, cam2


def check_jacobian(state, det, atlas, cam, eps=1e-6):
    """Worst relative error of the analytic Jacobian vs central differences.

    The discrepancy is measured per parameter column as
    ||analytic - numeric|| / max(||analytic||, ||numeric||); a per-entry
    quotient would be dominated by finite-difference roundoff on entries far
    below the column scale. Columns whose analytic and numeric norms are both
    below 1e-8 are skipped; 0.0 is returned when every column is (e.g.
    all-zero scores).
    """
    if not 1e-9 < eps < 1e-3:
        raise InvalidArgumentError("eps must lie in (1e-9, 1e-3)")
    m = atlas.n_components
    n_params = 6 + m + 1
    block = reprojection_residuals(state, det, atlas, cam)
    fd = np.zeros_like(block.jacobian)
    # steps are relative to each parameter's magnitude to tame FD roundoff
    scales = np.ones(n_params)
    scales[3:6] = np.maximum(1.0, np.abs(state.translation))
    scales[6 + m] = max(1.0, cam.focal)
    for j in range(n_params):
        step = eps * scales[j]
        delta = np.zeros(n_params)
        delta[j] = step
        sp, cp = _perturbed(state, cam, delta, m)
        sm, cm = _perturbed(state, cam, -delta, m)
        rp = reprojection_residuals(sp, det, atlas, cp).residuals
        rm = reprojection_residuals(sm, det, atlas, cm).residuals
        fd[:, j] = (rp - rm) / (2 * step)
    a_norms = np.linalg.norm(block.jacobian, axis=0)
    fd_norms = np.linalg.norm(fd, axis=0)
    scale = np.maximum(a_norms, fd_norms)
    keep = scale > 1e-8
    if not np.any(keep):
        return 0.0
    err = np.linalg.norm(block.jacobian - fd, axis=0)
    return float(np.max(err[keep] / scale[keep]))
