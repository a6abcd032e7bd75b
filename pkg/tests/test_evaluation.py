import numpy as np
import pytest

from groundpose import (
    ADD_THRESHOLDS,
    VIEWPOINT_THRESHOLDS,
    ObjectState,
    add_accuracy,
    add_distance,
    random_rotation,
    viewpoint_precision,
)
from groundpose.errors import InsufficientDataError
from groundpose.rotations import exp_so3


def posed(atlas, rng, offset=np.zeros(3), spin=0.0):
    r = random_rotation(rng)
    base = ObjectState(rotation=r, translation=np.array([1.0, 2.0, 30.0]),
                       coeffs=np.zeros(atlas.n_components))
    moved = ObjectState(
        rotation=exp_so3(np.array([0.0, spin, 0.0])) @ r,
        translation=base.translation + offset,
        coeffs=base.coeffs,
    )
    return moved, base


def test_add_distance_identity(atlas, rng):
    est, gt = posed(atlas, rng)
    assert add_distance(gt, gt, atlas) == 0.0


def test_add_distance_pure_translation(atlas, rng):
    """A rigid offset moves every keypoint equally: ADD = |offset| / diameter."""
    d = 0.7 * atlas.diameter
    est, gt = posed(atlas, rng, offset=np.array([d, 0.0, 0.0]))
    assert np.isclose(add_distance(est, gt, atlas), 0.7, rtol=1e-12)


def test_add_distance_counts_shape_error(atlas, rng):
    _, gt = posed(atlas, rng)
    est = ObjectState(rotation=gt.rotation, translation=gt.translation,
                      coeffs=gt.coeffs + 1.0)
    assert add_distance(est, gt, atlas) > 0.0


def test_add_accuracy_counting_oracle(atlas, rng):
    fractions = [0.0, 0.3, 0.6, 1.0, 1.5, 3.0]
    pairs = [posed(atlas, rng, offset=np.array([f * atlas.diameter, 0, 0])) for f in fractions]
    acc = add_accuracy(pairs, atlas, ADD_THRESHOLDS)
    expect = [
        float(sum(f <= t for f in fractions) / len(fractions) * 100.0)
        for t in ADD_THRESHOLDS
    ]
    assert acc == expect
    # curve is monotone non-decreasing
    assert all(a <= b for a, b in zip(acc, acc[1:]))


def test_add_accuracy_threshold_inclusive(atlas, rng):
    est, gt = posed(atlas, rng, offset=np.array([0.4 * atlas.diameter, 0, 0]))
    d = add_distance(est, gt, atlas)
    # exactly on the threshold counts as correct
    assert add_accuracy([(est, gt)], atlas, (d,)) == [100.0]
    assert add_accuracy([(est, gt)], atlas, (np.nextafter(d, 0.0),)) == [0.0]


def test_add_accuracy_identity_full_marks(atlas, rng):
    pairs = [(g, g) for _, g in (posed(atlas, rng) for _ in range(5))]
    assert add_accuracy(pairs, atlas, ADD_THRESHOLDS) == [100.0] * len(ADD_THRESHOLDS)


def test_viewpoint_counting_oracle(atlas, rng):
    angles = [0.0, 0.1, 0.2, 0.25, 0.33, 0.5]
    pairs = [posed(atlas, rng, spin=a) for a in angles]
    prec = viewpoint_precision(pairs, VIEWPOINT_THRESHOLDS)
    expect = [
        float(sum(a <= t for a in angles) / len(angles) * 100.0)
        for t in VIEWPOINT_THRESHOLDS
    ]
    assert prec == expect


def test_viewpoint_threshold_inclusive(atlas, rng):
    est, gt = posed(atlas, rng, spin=0.21)
    from groundpose import geodesic_distance

    d = geodesic_distance(est.rotation, gt.rotation)
    assert viewpoint_precision([(est, gt)], (d,)) == [100.0]
    assert viewpoint_precision([(est, gt)], (np.nextafter(d, 0.0),)) == [0.0]


def test_metrics_reject_empty(atlas):
    with pytest.raises(InsufficientDataError):
        add_accuracy([], atlas)
    with pytest.raises(InsufficientDataError):
        viewpoint_precision([])


def test_threshold_grids():
    assert ADD_THRESHOLDS == (0.4, 0.8, 1.2, 1.6, 2.0)
    assert VIEWPOINT_THRESHOLDS == (0.14, 0.21, 0.28, 0.35, 0.42)
