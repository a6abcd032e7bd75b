"""Closed-form rigid pose initialization (DLT) and damped rigid refinement."""

import numpy as np

from .errors import (
    BehindCameraError,
    DegenerateConfigurationError,
    NoProgressError,
    UnderdeterminedError,
)
from .projection import reprojection_residuals
from .rotations import exp_so3, project_to_so3
from .scene_model import ObjectState


def dlt_pose(det, atlas, cam, score_threshold=0.05):
    """Estimate a rigid pose from the mean shape via the 12-parameter DLT.

    Keypoints with score below `score_threshold` are left out of the linear
    system; remaining rows are weighted by sqrt(score). The recovered 3x3
    block is projected onto SO(3) and the translation rescaled consistently.
    Shape coefficients are returned as zero.
    """
    use = det.scores > score_threshold
    k = int(np.count_nonzero(use))
    if k < 6:
        raise UnderdeterminedError(
            f"object {det.id!r}: {k} usable keypoints, need at least 6"
        )
    pts3 = atlas.mean_shape[use]
    # normalized image coordinates remove focal/principal-point scaling
    norm2 = (det.keypoints[use] - cam.principal_point) / cam.focal
    w = np.sqrt(det.scores[use])

    a = np.zeros((2 * k, 12))
    for i in range(k):
        x, y = norm2[i]
        hom = np.append(pts3[i], 1.0)
        a[2 * i, 0:4] = w[i] * hom
        a[2 * i, 8:12] = -w[i] * x * hom
        a[2 * i + 1, 4:8] = w[i] * hom
        a[2 * i + 1, 8:12] = -w[i] * y * hom

    _, sv, vt = np.linalg.svd(a)
    if sv[0] > 0 and sv[-2] / sv[0] < 1e-10:
        raise DegenerateConfigurationError(
            f"object {det.id!r}: DLT system is rank deficient"
        )
    p = vt[-1].reshape(3, 4)

    # fix the global sign so most depths come out positive
    depths = pts3 @ p[2, :3] + p[2, 3]
    if np.median(depths) < 0:
        p = -p

    m3 = p[:, :3]
    sv_m = np.linalg.svd(m3, compute_uv=False)
    if sv_m[-1] / sv_m[0] < 1e-6:
        raise DegenerateConfigurationError(
            f"object {det.id!r}: degenerate (near-coplanar) correspondence"
        )
    scale = float(np.mean(sv_m))
    rot = project_to_so3(m3)
    trans = p[:, 3] / scale
    if trans[2] <= 0:
        raise DegenerateConfigurationError(
            f"object {det.id!r}: DLT placed the object behind the camera"
        )
    return ObjectState(rotation=rot, translation=trans, coeffs=np.zeros(atlas.n_components))


def refine_rigid(init, det, atlas, cam, iters=20):
    """Polish a rigid pose by damped least squares on the 6 pose parameters.

    The reprojection loss is non-increasing across iterations; coefficients
    are left untouched. Stops early when damping cannot improve the loss.
    """
    state = init
    try:
        block = reprojection_residuals(state, det, atlas, cam)
    except BehindCameraError as exc:
        raise NoProgressError(str(exc), best_state=init) from exc
    loss = block.loss
    damping = 1e-4
    for _ in range(iters):
        j = block.jacobian[:, 0:6]
        g = j.T @ block.residuals
        h = j.T @ j
        improved = False
        while damping < 1e10:
            step = np.linalg.solve(h + damping * np.diag(np.maximum(np.diag(h), 1e-12)), -g)
            try:
                cand = ObjectState(
                    rotation=project_to_so3(exp_so3(step[0:3]) @ state.rotation),
                    translation=state.translation + step[3:6],
                    coeffs=state.coeffs,
                )
                cand_block = reprojection_residuals(cand, det, atlas, cam)
            except (BehindCameraError, ValueError):
                damping *= 10.0
                continue
            if cand_block.loss <= loss:
                state, block, loss = cand, cand_block, cand_block.loss
                damping = max(damping / 3.0, 1e-12)
                improved = True
                break
            damping *= 10.0
        if not improved:
            break  # stationary within damping range
    return state
