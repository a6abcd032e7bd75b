import numpy as np
import pytest

from groundpose import (
    CameraIntrinsics,
    Detection,
    check_jacobian,
    project_point,
    project_points,
    project_weak,
    random_rotation,
    reprojection_residuals,
)
from groundpose.errors import BehindCameraError, InvalidArgumentError
from groundpose.scene_model import ObjectState

from helpers import exact_detection


def test_project_point_manual(cam):
    p = np.array([2.0, -1.0, 10.0])
    expect = np.array([1000.0 * 0.2 + 640.0, 1000.0 * -0.1 + 480.0])
    assert np.allclose(project_point(p, cam), expect)


def test_project_point_behind_camera(cam):
    with pytest.raises(BehindCameraError):
        project_point(np.array([0.0, 0.0, -1.0]), cam)
    with pytest.raises(BehindCameraError):
        project_points(np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]), cam)


def test_project_points_matches_scalar(cam, rng):
    pts = rng.uniform(1.0, 20.0, (7, 3))
    batch = project_points(pts, cam)
    for i, p in enumerate(pts):
        assert np.allclose(batch[i], project_point(p, cam))


def test_project_weak_scaling_invariance(cam, rng):
    """Scaling (focal, reference depth) jointly leaves the weak projection fixed."""
    pts = rng.uniform(-2.0, 2.0, (10, 3)) + np.array([0.0, 0.0, 50.0])
    base = project_weak(pts, 50.0, cam)
    for lam in (0.5, 2.0, 7.3):
        cam2 = CameraIntrinsics(lam * cam.focal, cam.principal_point)
        assert np.allclose(project_weak(pts, lam * 50.0, cam2), base, atol=1e-10)
    with pytest.raises(InvalidArgumentError):
        project_weak(pts, -1.0, cam)


def test_residuals_zero_on_exact_detection(state, atlas, cam):
    det = exact_detection(state, atlas, cam)
    block = reprojection_residuals(state, det, atlas, cam)
    assert np.max(np.abs(block.residuals)) < 1e-9
    assert block.loss < 1e-18


def test_residuals_score_weighting(state, atlas, cam, rng):
    det = exact_detection(state, atlas, cam)
    shifted = Detection(keypoints=det.keypoints + 1.0, scores=det.scores, id="a")
    quarter = Detection(keypoints=det.keypoints + 1.0, scores=0.25 * det.scores, id="b")
    full = reprojection_residuals(state, shifted, atlas, cam).loss
    down = reprojection_residuals(state, quarter, atlas, cam).loss
    assert np.isclose(down, 0.25 * full)


def test_zero_score_rows_are_zero(state, atlas, cam):
    scores = np.ones(atlas.n_keypoints)
    scores[3] = 0.0
    det = exact_detection(state, atlas, cam, scores=scores)
    # move the dead keypoint far away: must not affect anything
    kp = det.keypoints.copy()
    kp[3] = [1e6, 1e6]
    det = Detection(keypoints=kp, scores=scores)
    block = reprojection_residuals(state, det, atlas, cam)
    assert np.all(block.residuals[6:8] == 0.0)
    assert np.all(block.jacobian[6:8] == 0.0)


def test_keypoint_count_mismatch(state, atlas, cam):
    det = Detection(keypoints=np.zeros((atlas.n_keypoints + 1, 2)), scores=np.ones(atlas.n_keypoints + 1))
    with pytest.raises(InvalidArgumentError):
        reprojection_residuals(state, det, atlas, cam)


def test_check_jacobian_random_configs(atlas, rng):
    worst = 0.0
    for _ in range(10):
        st = ObjectState(
            rotation=random_rotation(rng),
            translation=np.array([rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(8, 60)]),
            coeffs=rng.normal(0, 1, atlas.n_components),
        )
        cam = CameraIntrinsics(rng.uniform(500, 2000), np.array([640.0, 480.0]))
        det = Detection(
            keypoints=rng.uniform(0, 1280, (atlas.n_keypoints, 2)),
            scores=rng.uniform(0.2, 1.0, atlas.n_keypoints),
        )
        worst = max(worst, check_jacobian(st, det, atlas, cam))
    assert worst < 1e-5


def test_check_jacobian_all_zero_scores(state, atlas, cam):
    det = Detection(keypoints=np.zeros((atlas.n_keypoints, 2)), scores=np.zeros(atlas.n_keypoints))
    assert check_jacobian(state, det, atlas, cam) == 0.0


def test_check_jacobian_eps_validation(state, atlas, cam):
    det = exact_detection(state, atlas, cam)
    with pytest.raises(InvalidArgumentError):
        check_jacobian(state, det, atlas, cam, eps=1.0)
