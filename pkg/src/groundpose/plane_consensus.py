"""Robust ground-plane estimation and plane/object distance measures."""

import numpy as np

from .errors import (
    DegenerateConfigurationError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidPlaneError,
)
from .scene_model import Plane, object_up_axis


def point_plane_distance(t, plane):
    """Signed point-to-plane distance; invariant to plane coefficient scaling."""
    t = np.asarray(t, dtype=float)
    n = plane.normal
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        raise InvalidPlaneError("plane normal is zero")
    return float((n @ t + plane.offset) / norm)


def normal_angle(up, plane):
    """Angle between a direction and the plane normal: arcsin(|n x u|), in [0, pi/2]."""
    up = np.asarray(up, dtype=float)
    n = plane.normal
    nn, nu = np.linalg.norm(n), np.linalg.norm(up)
    if nn < 1e-12:
        raise InvalidPlaneError("plane normal is zero")
    if nu < 1e-12:
        raise InvalidArgumentError("up vector is zero")
    s = np.linalg.norm(np.cross(n / nn, up / nu))
    return float(np.arcsin(np.clip(s, 0.0, 1.0)))


def normalize_plane(plane):
    """Scale to a unit normal and fix the sign so v_d >= 0 (tie: v_c >= 0)."""
    c = plane.coeffs
    norm = np.linalg.norm(c[:3])
    if norm < 1e-12:
        raise InvalidPlaneError("plane normal is zero")
    c = c / norm
    if c[3] < 0 or (c[3] == 0 and c[2] < 0):
        c = -c
    return Plane(coeffs=c + 0.0)  # +0.0 folds any -0.0 into +0.0


def _plane_from_3(p1, p2, p3):
    n = np.cross(p2 - p1, p3 - p1)
    if np.linalg.norm(n) < 1e-12:
        return None
    return Plane(coeffs=np.append(n, -n @ p1))


def _tls_plane(points):
    """Total-least-squares plane: centroid plus smallest covariance eigenvector."""
    centroid = points.mean(axis=0)
    centered = points - centroid
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    n = vt[-1]
    return Plane(coeffs=np.append(n, -n @ centroid))


def ransac_plane_from_translations(translations, config, rng=None):
    """RANSAC plane fit to object positions; returns (Plane, inlier mask).

    The winning consensus set is refit by total least squares and the mask
    recomputed against the refit plane. Deterministic given the seed.
    """
    pts = np.asarray(translations, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InvalidArgumentError("translations must be (N, 3)")
    n_pts = pts.shape[0]
    if n_pts < 3:
        raise InsufficientDataError(f"need at least 3 translations, got {n_pts}")
    thresh = config.distance_threshold
    if thresh is None:
        raise InvalidArgumentError("distance_threshold must be resolved before RANSAC")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    best_mask = None
    best_count = 0
    for _ in range(config.iterations):
        idx = rng.choice(n_pts, size=3, replace=False)
        cand = _plane_from_3(*pts[idx])
        if cand is None:
            continue
        dists = np.abs((pts @ cand.normal + cand.offset) / np.linalg.norm(cand.normal))
        mask = dists < thresh
        if int(mask.sum()) > best_count:
            best_count = int(mask.sum())
            best_mask = mask
    if best_mask is None:
        raise DegenerateConfigurationError("all RANSAC samples were collinear")

    refit = _tls_plane(pts[best_mask])
    dists = np.abs(pts @ refit.normal + refit.offset)  # unit normal from SVD
    mask = dists < thresh
    if mask.sum() >= 3:
        refit = _tls_plane(pts[mask])
        dists = np.abs(pts @ refit.normal + refit.offset)
        mask = dists < thresh
    else:
        mask = best_mask
    return normalize_plane(refit), mask


def ransac_plane_from_rotations(states, config, rng=None):
    """Consensus plane from object up-axes; offset through the inlier centroid.

    Samples one axis per round; inliers are axes within the angle threshold
    of it; the refit normal is the normalized (sign-aligned) inlier mean.
    The rotations only constrain the normal, so v_d places the plane through
    the centroid of the inlier objects' translations.
    """
    states = list(states)
    n_obj = len(states)
    if n_obj == 0:
        raise InsufficientDataError("need at least one object state")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    axes = np.array([object_up_axis(s) for s in states])
    trans = np.array([s.translation for s in states])

    def angles_to(ref):
        s = np.linalg.norm(np.cross(axes, ref), axis=1)
        return np.arcsin(np.clip(s, 0.0, 1.0))

    best_mask = None
    best_count = 0
    if n_obj <= config.iterations:
        candidates = np.arange(n_obj)
    else:
        candidates = rng.choice(n_obj, size=config.iterations, replace=False)
    for idx in candidates:
        mask = angles_to(axes[idx]) <= config.angle_threshold
        if int(mask.sum()) > best_count:
            best_count = int(mask.sum())
            best_mask = mask
            best_ref = axes[idx]
    signs = np.where(axes[best_mask] @ best_ref >= 0, 1.0, -1.0)
    normal = (signs[:, None] * axes[best_mask]).mean(axis=0)
    normal /= np.linalg.norm(normal)
    mask = angles_to(normal) <= config.angle_threshold
    if not np.any(mask):
        mask = best_mask
    centroid = trans[mask].mean(axis=0)
    plane = Plane(coeffs=np.append(normal, -normal @ centroid))
    return normalize_plane(plane), mask
