"""Shared construction helpers for the test suite."""

import numpy as np

from groundpose import Detection, instantiate_shape, project_points


def exact_detection(state, atlas, cam, scores=None, id=""):
    """Detection whose keypoints are the exact projection of a posed shape."""
    pts = instantiate_shape(atlas, state.coeffs) @ state.rotation.T + state.translation
    proj = project_points(pts, cam)
    if scores is None:
        scores = np.ones(proj.shape[0])
    return Detection(keypoints=proj, scores=scores, id=id)


def rotation_error_deg(n_est, n_true):
    """Unsigned angle between two plane normals, degrees."""
    c = abs(float(np.asarray(n_est) @ np.asarray(n_true)))
    return float(np.degrees(np.arccos(np.clip(c, 0.0, 1.0))))
