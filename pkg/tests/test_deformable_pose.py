import numpy as np
import pytest

from groundpose import (
    Plane,
    SolverConfig,
    geodesic_distance,
    lambda_step,
    object_loss,
    random_rotation,
    solve_object,
)
from groundpose.plane_consensus import normal_angle, point_plane_distance
from groundpose.projection import reprojection_residuals
from groundpose.rotations import exp_so3
from groundpose.scene_model import ObjectState, object_up_axis

from helpers import exact_detection


@pytest.fixture
def truth(atlas, rng):
    return ObjectState(
        rotation=random_rotation(rng),
        translation=np.array([0.5, -1.0, 28.0]),
        coeffs=np.array([1.2, -0.6])[: atlas.n_components],
    )


def perturbed(truth):
    return ObjectState(
        rotation=exp_so3(np.array([0.04, -0.06, 0.03])) @ truth.rotation,
        translation=truth.translation + np.array([0.4, -0.3, 2.0]),
        coeffs=np.zeros_like(truth.coeffs),
    )


def test_object_loss_components(truth, atlas, cam):
    det = exact_detection(truth, atlas, cam)
    base = reprojection_residuals(truth, det, atlas, cam).loss
    mu = 3.0
    expect = base + mu * float(truth.coeffs @ truth.coeffs)
    assert np.isclose(object_loss(truth, det, atlas, cam, None, (mu, 0.0, 0.0)), expect)
    plane = Plane(coeffs=np.array([0.0, 0.0, 1.0, -20.0]))  # z = 20 plane
    with_plane = object_loss(truth, det, atlas, cam, plane, (mu, 2.0, 5.0))
    d = point_plane_distance(truth.translation, plane)
    a = normal_angle(object_up_axis(truth), plane)
    assert np.isclose(with_plane, expect + 2.0 * d**2 + 5.0 * a**2)


def test_solve_object_recovers_pose_and_shape(truth, atlas, cam):
    det = exact_detection(truth, atlas, cam)
    config = SolverConfig(mu_shape=1e-10)
    est, loss, history = solve_object(perturbed(truth), det, atlas, cam, None,
                                      (config.mu_shape, 0.0, 0.0), config)
    assert geodesic_distance(est.rotation, truth.rotation) < 1e-6
    assert np.linalg.norm(est.translation - truth.translation) < 1e-5
    assert np.max(np.abs(est.coeffs - truth.coeffs)) < 1e-4
    # residual term vanishes; what's left is the mu_shape * |coeffs|^2 regularizer
    assert loss < config.mu_shape * (np.sum(truth.coeffs**2) + 1e-3)


def test_solve_object_history_monotone(truth, atlas, cam):
    det = exact_detection(truth, atlas, cam)
    config = SolverConfig()
    _, _, history = solve_object(perturbed(truth), det, atlas, cam, None,
                                 (1.0, 0.0, 0.0), config)
    diffs = np.diff(history)
    assert history[0] > history[-1]
    assert np.all(diffs <= 1e-12)


def test_solve_object_respects_plane_terms(truth, atlas, cam):
    """Heavy plane weights pull the solution onto the plane."""
    det = exact_detection(truth, atlas, cam)
    plane = Plane(coeffs=np.array([0.0, 0.0, 1.0, -(truth.translation[2] + 2.0)]))
    config = SolverConfig()
    est, _, _ = solve_object(truth, det, atlas, cam, plane, (1e-6, 1e6, 0.0), config)
    assert abs(point_plane_distance(est.translation, plane)) < 0.05


def test_lambda_step_recovers_coeffs(truth, atlas, cam):
    det = exact_detection(truth, atlas, cam)
    start = ObjectState(rotation=truth.rotation, translation=truth.translation,
                        coeffs=np.zeros_like(truth.coeffs))
    lam = lambda_step(start, det, atlas, cam, mu=1e-10)
    # one linearized step from zero is not exact under perspective, just close
    assert np.max(np.abs(lam - truth.coeffs)) < 5e-3


def test_lambda_step_box_modes(truth, atlas, cam):
    det = exact_detection(truth, atlas, cam)
    start = ObjectState(rotation=truth.rotation, translation=truth.translation,
                        coeffs=np.zeros_like(truth.coeffs))
    lam = lambda_step(start, det, atlas, cam, mu=1e-10, bound_mode="paper_literal")
    assert np.all(lam >= 0.0)
    lam = lambda_step(start, det, atlas, cam, mu=1e-10, bound_mode="symmetric")
    assert np.all(np.abs(lam) <= atlas.coeff_bounds + 1e-12)


def test_large_mu_shrinks_coeffs(truth, atlas, cam):
    det = exact_detection(truth, atlas, cam)
    config = SolverConfig(mu_shape=1e8)
    est, _, _ = solve_object(truth, det, atlas, cam, None, (1e8, 0.0, 0.0), config)
    assert np.max(np.abs(est.coeffs)) < 1e-2
