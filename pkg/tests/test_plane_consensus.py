import numpy as np
import pytest
from hypothesis import given, strategies as st

from groundpose import (
    ObjectState,
    Plane,
    normal_angle,
    normalize_plane,
    point_plane_distance,
    ransac_plane_from_rotations,
    ransac_plane_from_translations,
    rotation_aligning,
)
from groundpose.errors import InsufficientDataError, InvalidArgumentError, InvalidPlaneError
from groundpose.scene_model import CANONICAL_UP, RansacConfig

from helpers import rotation_error_deg


def test_point_plane_distance_hand_value():
    plane = Plane(coeffs=np.array([0.0, 0.0, 2.0, -8.0]))  # z = 4, non-unit normal
    assert np.isclose(point_plane_distance([0.0, 0.0, 7.0], plane), 3.0)
    assert np.isclose(point_plane_distance([5.0, -2.0, 1.0], plane), -3.0)


def test_point_plane_distance_zero_normal():
    with pytest.raises(InvalidPlaneError):
        point_plane_distance([0, 0, 0], Plane(coeffs=np.array([0.0, 0.0, 0.0, 1.0])))


def test_normal_angle_known_values():
    plane = Plane(coeffs=np.array([0.0, 0.0, 1.0, 0.0]))
    assert np.isclose(normal_angle([0, 0, 5.0], plane), 0.0)
    assert np.isclose(normal_angle([1.0, 0, 0], plane), np.pi / 2)
    assert np.isclose(normal_angle([0, 0, -1.0], plane), 0.0)  # direction-symmetric
    assert np.isclose(normal_angle([1.0, 0.0, 1.0], plane), np.pi / 4)


unit_plane = st.tuples(
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-5, 5)
).filter(lambda c: np.linalg.norm(c[:3]) > 1e-3)


@given(unit_plane)
def test_normalize_plane_invariants(c):
    p = normalize_plane(Plane(coeffs=np.array(c)))
    assert np.isclose(np.linalg.norm(p.normal), 1.0)
    assert p.offset >= 0.0
    # renormalizing may shift the last bit, but nothing more
    again = normalize_plane(p)
    assert np.allclose(again.coeffs, p.coeffs, rtol=0.0, atol=1e-15)
    assert again.offset >= 0.0


def test_normalize_plane_sign_tie():
    p = normalize_plane(Plane(coeffs=np.array([0.0, 0.0, -3.0, 0.0])))
    assert p.coeffs[2] > 0  # offset tie broken toward positive v_c


def test_ransac_translations_recovers_plane_with_outliers(rng):
    normal = np.array([0.1, -0.8, -0.55])
    normal /= np.linalg.norm(normal)
    d = 12.0
    pts = []
    for _ in range(15):
        p = rng.uniform(-20, 20, 3)
        p -= (normal @ p + d) * normal  # project onto the plane
        pts.append(p)
    for _ in range(4):  # gross outliers
        pts.append(rng.uniform(-20, 20, 3) + 40.0 * normal)
    pts = np.array(pts)
    config = RansacConfig(distance_threshold=0.5, seed=3)
    plane, mask = ransac_plane_from_translations(pts, config)
    assert rotation_error_deg(plane.normal, normal) < 0.1
    assert mask[:15].all() and not mask[15:].any()
    # distances of inliers vanish for this noiseless construction
    assert max(abs(point_plane_distance(p, plane)) for p in pts[:15]) < 1e-9


def test_ransac_translations_determinism(rng):
    pts = rng.uniform(-10, 10, (12, 3))
    pts[:, 2] = 30.0 + 0.1 * pts[:, 0]
    config = RansacConfig(distance_threshold=0.4, seed=7)
    p1, m1 = ransac_plane_from_translations(pts, config)
    p2, m2 = ransac_plane_from_translations(pts, config)
    assert np.array_equal(p1.coeffs, p2.coeffs)
    assert np.array_equal(m1, m2)


def test_ransac_translations_needs_three_points():
    config = RansacConfig(distance_threshold=0.5)
    with pytest.raises(InsufficientDataError):
        ransac_plane_from_translations(np.zeros((2, 3)), config)
    with pytest.raises(InvalidArgumentError):
        ransac_plane_from_translations(np.zeros((5, 2)), config)


def test_ransac_rotations_consensus(atlas, rng):
    normal = np.array([0.0, -0.85, -0.527])
    normal /= np.linalg.norm(normal)
    align = rotation_aligning(CANONICAL_UP, normal)
    states = []
    for k in range(8):
        t = np.array([rng.uniform(-5, 5), rng.uniform(-3, 3), rng.uniform(15, 40)])
        states.append(ObjectState(rotation=align, translation=t, coeffs=np.zeros(2)))
    # one outlier tipped well past the angle threshold
    tipped = rotation_aligning(CANONICAL_UP, np.array([1.0, 0.0, 0.0]))
    states.append(ObjectState(rotation=tipped, translation=[0, 0, 20.0], coeffs=np.zeros(2)))
    config = RansacConfig(distance_threshold=0.5)
    plane, mask = ransac_plane_from_rotations(states, config)
    assert rotation_error_deg(plane.normal, normal) < 1e-6
    assert mask[:8].all() and not mask[8]
    # offset passes through the inlier translation centroid
    centroid = np.mean([s.translation for s in states[:8]], axis=0)
    assert abs(point_plane_distance(centroid, plane)) < 1e-9


def test_ransac_rotations_empty():
    with pytest.raises(InsufficientDataError):
        ransac_plane_from_rotations([], RansacConfig(distance_threshold=0.5))
