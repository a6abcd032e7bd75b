"""Seeded synthetic parking-lot scenes with exact ground truth.

Every generated scene satisfies the domain invariants by construction:
objects sit exactly on the sampled plane with up-axes equal to its normal,
and reprojecting the ground truth reproduces the stored keypoints.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import GenerationError, InvalidArgumentError
from .plane_consensus import normalize_plane
from .projection import project_points
from .rotations import exp_so3, rotation_aligning
from .scene_model import (
    CANONICAL_UP,
    CameraIntrinsics,
    Detection,
    ObjectState,
    Plane,
    Scene,
    SceneEstimate,
    ShapeAtlas,
    coeff_box,
    instantiate_shape,
)


@dataclass(frozen=True)
class SynthConfig:
    n_objects: int = 10
    focal_range: tuple = (800.0, 1200.0)
    plane_tilt_range: tuple = (0.45, 0.65)  # radians, camera pitch below horizontal
    depth_range: tuple = (18.0, 55.0)  # object units
    keypoint_noise_sigma: float = 0.0  # pixels
    outlier_fraction: float = 0.0
    coeff_sigma: float = 1.0
    seed: int = 0
    image_size: tuple = (1280.0, 960.0)
    margin: float = 10.0  # pixels every keypoint must keep from the border


def car_atlas(n_components=2):
    """Procedural 12-keypoint car-like atlas with length/height deformation modes.

    Keypoints: 4 wheel centers, 4 roof corners, 2 headlights, 2 taillights.
    Canonical frame: +X forward, +Z up, origin at the keypoint centroid.
    Basis components are unit displacement fields scaled by a per-mode
    standard deviation, so coefficients are in units of standard deviations
    and the default bound of 3 spans three sigma.
    """
    if not 1 <= n_components <= 2:
        raise InvalidArgumentError("car_atlas supports 1 or 2 components")
    length, width, height = 4.6, 1.8, 1.5
    wheel_z, roof_z = 0.35, height
    hx, tx = length / 2, -length / 2
    wx = 0.36 * length
    rx = 0.22 * length
    wy = width / 2
    pts = np.array(
        [
            [wx, -wy, wheel_z], [wx, wy, wheel_z], [-wx, -wy, wheel_z], [-wx, wy, wheel_z],
            [rx, -0.42 * width, roof_z], [rx, 0.42 * width, roof_z],
            [-rx, -0.42 * width, roof_z], [-rx, 0.42 * width, roof_z],
            [hx, -0.38 * width, 0.6], [hx, 0.38 * width, 0.6],
            [tx, -0.38 * width, 0.75], [tx, 0.38 * width, 0.75],
        ]
    )
    names = (
        "wheel_fl", "wheel_fr", "wheel_rl", "wheel_rr",
        "roof_fl", "roof_fr", "roof_rl", "roof_rr",
        "light_fl", "light_fr", "light_rl", "light_rr",
    )
    pts = pts - pts.mean(axis=0)
    # mode 1: stretch along the length axis; mode 2: stretch vertically
    sigmas = (0.35, 0.15)
    fields = []
    d1 = np.zeros_like(pts)
    d1[:, 0] = pts[:, 0]
    fields.append(d1)
    if n_components == 2:
        d2 = np.zeros_like(pts)
        d2[:, 2] = pts[:, 2] - pts[:, 2].mean()
        # orthogonalize against the first mode as flattened vectors
        f1 = d1.ravel()
        d2 = (d2.ravel() - (d2.ravel() @ f1) / (f1 @ f1) * f1).reshape(pts.shape)
        fields.append(d2)
    basis = np.stack(
        [sigmas[j] * f / np.linalg.norm(f.ravel()) for j, f in enumerate(fields)]
    )
    diffs = pts[:, None, :] - pts[None, :, :]
    diameter = float(np.max(np.linalg.norm(diffs, axis=-1)))
    return ShapeAtlas(
        mean_shape=pts,
        basis=basis,
        coeff_bounds=np.full(n_components, 3.0),
        diameter=diameter,
        keypoint_names=names,
    )


def _ground_plane(tilt, cam_height):
    """Plane of a ground viewed by a camera pitched down by `tilt`, camera frame.

    Camera frame is x-right, y-down, z-forward; the world up direction maps
    to (0, -cos tilt, -sin tilt). cam_height is the camera's height over the
    plane.
    """
    up = np.array([0.0, -np.cos(tilt), -np.sin(tilt)])
    return Plane(coeffs=np.append(up, cam_height)), up


def generate_scene(atlas, config):
    """Sample one scene and its exact ground truth: (Scene, SceneEstimate)."""
    rng = np.random.default_rng(config.seed)
    w, h = config.image_size
    focal = rng.uniform(*config.focal_range)
    cam = CameraIntrinsics(focal=focal, principal_point=np.array([w / 2, h / 2]))
    tilt = rng.uniform(*config.plane_tilt_range)
    z_mid = 0.5 * (config.depth_range[0] + config.depth_range[1])
    # put the mid-depth ground point a third of the way down the lower half
    y_target = 0.3 * (h / 2) / focal * z_mid
    cam_height = z_mid * np.sin(tilt) + y_target * np.cos(tilt)
    plane, up = _ground_plane(tilt, cam_height)
    lo, hi = coeff_box(atlas, "symmetric")

    detections = []
    objects = []
    max_lateral = np.arctan(0.45 * w / focal)
    for k in range(config.n_objects):
        placed = False
        for _ in range(1000):
            z = rng.uniform(*config.depth_range)
            x = z * np.tan(rng.uniform(-max_lateral, max_lateral))
            # plane has no x-component: y follows from (z, height)
            y = (cam_height - z * np.sin(tilt)) / np.cos(tilt)
            t = np.array([x, y, z])
            yaw = rng.uniform(0.0, 2 * np.pi)
            rot = rotation_aligning(CANONICAL_UP, up) @ exp_so3(yaw * CANONICAL_UP)
            coeffs = np.clip(rng.normal(0.0, config.coeff_sigma, atlas.n_components), lo, hi)
            pts = instantiate_shape(atlas, coeffs) @ rot.T + t
            if np.any(pts[:, 2] <= 1.0):
                continue
            proj = project_points(pts, cam)
            m = config.margin
            if np.any(proj[:, 0] < m) or np.any(proj[:, 0] > w - m):
                continue
            if np.any(proj[:, 1] < m) or np.any(proj[:, 1] > h - m):
                continue
            state = ObjectState(rotation=rot, translation=t, coeffs=coeffs)
            detections.append(
                Detection(keypoints=proj, scores=np.ones(atlas.n_keypoints), id=f"car{k:02d}")
            )
            objects.append(state)
            placed = True
            break
        if not placed:
            raise GenerationError(f"could not place object {k} within 1000 attempts")

    scene = Scene(detections=tuple(detections), image_size=np.array([w, h]), intrinsics_hint=None)
    truth = SceneEstimate(
        objects=tuple(objects),
        plane=normalize_plane(plane),
        intrinsics=cam,
        per_object_loss=tuple(0.0 for _ in objects),
        converged=True,
        iterations=0,
    )
    scene2, truth = _apply_config_noise(scene, truth, atlas, config)
    return scene2, truth


def _apply_config_noise(scene, truth, atlas, config):
    if config.outlier_fraction > 0:
        scene, truth, _ = plant_outliers(
            scene, truth, atlas, config.outlier_fraction, "pose-outlier", config.seed + 1
        )
    if config.keypoint_noise_sigma > 0:
        scene = perturb_keypoints(scene, config.keypoint_noise_sigma, config.seed + 2)
    return scene, truth


def perturb_keypoints(scene, sigma, seed=0):
    """Add isotropic Gaussian pixel noise; scores drop with the noise magnitude.

    Scores become clip(1 - |noise| / (3 sigma), 0, 1). sigma = 0 returns the
    scene unchanged.
    """
    if sigma < 0:
        raise InvalidArgumentError("sigma must be non-negative")
    if sigma == 0:
        return scene
    rng = np.random.default_rng(seed)
    dets = []
    for det in scene.detections:
        noise = rng.normal(0.0, sigma, det.keypoints.shape)
        mags = np.linalg.norm(noise, axis=1)
        scores = np.clip(1.0 - mags / (3.0 * sigma), 0.0, 1.0)
        scores = np.where(det.scores > 0, scores, 0.0)
        dets.append(Detection(keypoints=det.keypoints + noise, scores=scores, id=det.id))
    return replace(scene, detections=tuple(dets))


def drop_keypoints(scene, fraction, seed=0):
    """Zero the scores of a random fraction of keypoints per detection."""
    if not 0 <= fraction < 1:
        raise InvalidArgumentError("fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    dets = []
    for det in scene.detections:
        n = det.keypoints.shape[0]
        n_drop = int(round(fraction * n))
        scores = det.scores.copy()
        if n_drop:
            idx = rng.choice(n, size=n_drop, replace=False)
            scores[idx] = 0.0
        dets.append(Detection(keypoints=det.keypoints, scores=scores, id=det.id))
    return replace(scene, detections=tuple(dets))


def plant_outliers(scene, truth, atlas, fraction, mode="pose-outlier", seed=0):
    """Turn a fraction of objects or keypoints into outliers.

    pose-outlier: lifts and tilts the selected ground-truth objects off the
    plane, then re-projects their keypoints, so both scene and truth change.
    keypoint-outlier: replaces a fraction of keypoints with uniform image
    positions, truth untouched.

    Returns (scene, truth, labels) where labels marks outlier objects (pose
    mode) or detections containing corrupted keypoints (keypoint mode).
    """
    if not 0 <= fraction <= 0.5:
        raise InvalidArgumentError("fraction must lie in [0, 0.5]")
    rng = np.random.default_rng(seed)
    n_obj = len(scene.detections)
    labels = np.zeros(n_obj, dtype=bool)
    if fraction == 0 or n_obj == 0:
        return scene, truth, labels

    if mode == "pose-outlier":
        n_out = int(round(fraction * n_obj))
        chosen = rng.choice(n_obj, size=n_out, replace=False)
        labels[chosen] = True
        # normalized plane keeps v_d >= 0, so +normal points to the camera side
        up = truth.plane.normal / np.linalg.norm(truth.plane.normal)
        dets = list(scene.detections)
        objs = list(truth.objects)
        for k in chosen:
            lift = rng.uniform(0.8, 1.5) * atlas.diameter
            tilt_axis = np.array([np.cos(a := rng.uniform(0, 2 * np.pi)), 0.0, np.sin(a)])
            tilt = rng.uniform(0.3, 0.6)
            st = objs[k]
            rot = exp_so3(tilt * tilt_axis) @ st.rotation
            trans = st.translation + lift * up
            new = ObjectState(rotation=rot, translation=trans, coeffs=st.coeffs)
            pts = instantiate_shape(atlas, new.coeffs) @ new.rotation.T + new.translation
            proj = project_points(pts, truth.intrinsics)
            dets[k] = Detection(keypoints=proj, scores=dets[k].scores, id=dets[k].id)
            objs[k] = new
        scene = replace(scene, detections=tuple(dets))
        truth = replace(truth, objects=tuple(objs))
        return scene, truth, labels

    if mode == "keypoint-outlier":
        w, h = scene.image_size
        dets = []
        for k, det in enumerate(scene.detections):
            n = det.keypoints.shape[0]
            corrupt = rng.random(n) < fraction
            if np.any(corrupt):
                labels[k] = True
                kp = det.keypoints.copy()
                kp[corrupt, 0] = rng.uniform(0, w, int(corrupt.sum()))
                kp[corrupt, 1] = rng.uniform(0, h, int(corrupt.sum()))
                dets.append(Detection(keypoints=kp, scores=det.scores, id=det.id))
            else:
                dets.append(det)
        return replace(scene, detections=tuple(dets)), truth, labels

    raise InvalidArgumentError(f"unknown outlier mode {mode!r}")
