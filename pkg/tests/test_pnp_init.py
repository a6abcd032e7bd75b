import numpy as np
import pytest

from groundpose import Detection, dlt_pose, geodesic_distance, random_rotation, refine_rigid
from groundpose.errors import UnderdeterminedError
from groundpose.projection import reprojection_residuals
from groundpose.rotations import exp_so3
from groundpose.scene_model import ObjectState

from helpers import exact_detection


def rigid_state(atlas, rng, z=30.0):
    return ObjectState(
        rotation=random_rotation(rng),
        translation=np.array([rng.uniform(-2, 2), rng.uniform(-2, 2), z]),
        coeffs=np.zeros(atlas.n_components),
    )


def test_dlt_recovers_rigid_pose(atlas, cam, rng):
    for _ in range(10):
        truth = rigid_state(atlas, rng)
        det = exact_detection(truth, atlas, cam)
        est = dlt_pose(det, atlas, cam)
        assert geodesic_distance(est.rotation, truth.rotation) < 1e-6
        assert np.linalg.norm(est.translation - truth.translation) < 1e-5
        assert np.all(est.coeffs == 0.0)


def test_dlt_respects_score_threshold(atlas, cam, rng):
    truth = rigid_state(atlas, rng)
    det = exact_detection(truth, atlas, cam)
    # corrupt two keypoints but push their scores below the threshold
    kp = det.keypoints.copy()
    kp[0] = [0.0, 0.0]
    kp[5] = [10.0, 10.0]
    scores = np.ones(atlas.n_keypoints)
    scores[[0, 5]] = 0.01
    det = Detection(keypoints=kp, scores=scores)
    est = dlt_pose(det, atlas, cam, score_threshold=0.05)
    assert geodesic_distance(est.rotation, truth.rotation) < 1e-6


def test_dlt_needs_six_points(atlas, cam, rng):
    truth = rigid_state(atlas, rng)
    scores = np.zeros(atlas.n_keypoints)
    scores[:5] = 1.0
    det = exact_detection(truth, atlas, cam, scores=scores)
    with pytest.raises(UnderdeterminedError):
        dlt_pose(det, atlas, cam)


def test_refine_rigid_improves_perturbed_pose(atlas, cam, rng):
    truth = rigid_state(atlas, rng)
    det = exact_detection(truth, atlas, cam)
    init = ObjectState(
        rotation=exp_so3(np.array([0.05, -0.03, 0.02])) @ truth.rotation,
        translation=truth.translation + np.array([0.3, -0.2, 1.5]),
        coeffs=truth.coeffs,
    )
    loss0 = reprojection_residuals(init, det, atlas, cam).loss
    refined = refine_rigid(init, det, atlas, cam)
    loss1 = reprojection_residuals(refined, det, atlas, cam).loss
    assert loss1 <= loss0
    assert geodesic_distance(refined.rotation, truth.rotation) < 1e-6
    assert np.linalg.norm(refined.translation - truth.translation) < 1e-5


def test_refine_rigid_fixed_point_at_optimum(atlas, cam, rng):
    truth = rigid_state(atlas, rng)
    det = exact_detection(truth, atlas, cam)
    refined = refine_rigid(truth, det, atlas, cam)
    assert geodesic_distance(refined.rotation, truth.rotation) < 1e-9
    assert np.linalg.norm(refined.translation - truth.translation) < 1e-9
