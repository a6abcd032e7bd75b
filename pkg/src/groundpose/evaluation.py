"""Quantitative pose metrics: normalized ADD curves and viewpoint precision."""

import numpy as np

from .errors import InsufficientDataError
from .rotations import geodesic_distance
from .scene_model import instantiate_shape

# Threshold grids used throughout the synthetic benchmarks.
ADD_THRESHOLDS = (0.4, 0.8, 1.2, 1.6, 2.0)
VIEWPOINT_THRESHOLDS = (0.14, 0.21, 0.28, 0.35, 0.42)


def add_distance(est, gt, atlas):
    """Mean 3D keypoint distance between two posed shapes, over the diameter.

    Each shape is instantiated from its own coefficients before posing, so
    shape errors count alongside pose errors.
    """
    pts_e = instantiate_shape(atlas, est.coeffs) @ est.rotation.T + est.translation
    pts_g = instantiate_shape(atlas, gt.coeffs) @ gt.rotation.T + gt.translation
    return float(np.linalg.norm(pts_e - pts_g, axis=1).mean() / atlas.diameter)


def add_accuracy(pairs, atlas, thresholds=ADD_THRESHOLDS):
    """Percent of (est, gt) pairs with add_distance <= threshold, per threshold.

    Comparisons are inclusive, so a pair exactly on a threshold counts as
    correct; the resulting curve is monotone non-decreasing.
    """
    pairs = list(pairs)
    if not pairs:
        raise InsufficientDataError("add_accuracy needs at least one pose pair")
    dists = np.array([add_distance(e, g, atlas) for e, g in pairs])
    return [float(np.mean(dists <= t) * 100.0) for t in thresholds]


def viewpoint_precision(pairs, thresholds=VIEWPOINT_THRESHOLDS):
    """Percent of pairs whose rotation geodesic distance is <= each threshold."""
    pairs = list(pairs)
    if not pairs:
        raise InsufficientDataError("viewpoint_precision needs at least one pose pair")
    dists = np.array([geodesic_distance(e.rotation, g.rotation) for e, g in pairs])
    return [float(np.mean(dists <= t) * 100.0) for t in thresholds]
