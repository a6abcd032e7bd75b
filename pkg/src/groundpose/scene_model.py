"""Core domain types: camera, shape atlas, detections, object states, planes.

All types are immutable value objects; numpy array fields are copied on
construction and marked read-only, so instances are safe to share between
workers.
"""

from dataclasses import dataclass, field
from math import radians

import numpy as np

from .errors import InvalidArgumentError

# Canonical object frame: +X forward, +Z up, origin at the keypoint centroid.
CANONICAL_UP = np.array([0.0, 0.0, 1.0])
CANONICAL_UP.setflags(write=False)


def _freeze(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


def _set(obj, name, value):
    object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole camera with square pixels, zero skew, single focal length."""

    focal: float
    principal_point: np.ndarray

    def __post_init__(self):
        _set(self, "focal", float(self.focal))
        _set(self, "principal_point", _freeze(self.principal_point))
        if not np.isfinite(self.focal) or self.focal <= 0:
            raise InvalidArgumentError(f"focal must be positive, got {self.focal}")
        if self.principal_point.shape != (2,) or not np.all(np.isfinite(self.principal_point)):
            raise InvalidArgumentError("principal_point must be a finite 2-vector")


@dataclass(frozen=True)
class ShapeAtlas:
    """Mean keypoint shape plus a linear deformation basis.

    mean_shape : (n, 3) keypoint positions, object units, canonical frame.
    basis      : (m, n, 3) displacement fields, mutually orthogonal as
                 flattened 3n-vectors.
    coeff_bounds : (m,) non-negative bounds on the deformation coefficients.
    diameter   : max pairwise distance among mean_shape points.
    """

    mean_shape: np.ndarray
    basis: np.ndarray
    coeff_bounds: np.ndarray
    diameter: float
    keypoint_names: tuple = ()

    def __post_init__(self):
        _set(self, "mean_shape", _freeze(self.mean_shape))
        _set(self, "basis", _freeze(self.basis))
        _set(self, "coeff_bounds", _freeze(self.coeff_bounds))
        _set(self, "diameter", float(self.diameter))
        _set(self, "keypoint_names", tuple(self.keypoint_names))
        if self.mean_shape.ndim != 2 or self.mean_shape.shape[1] != 3:
            raise InvalidArgumentError("mean_shape must be (n, 3)")
        n = self.mean_shape.shape[0]
        if self.basis.ndim != 3 or self.basis.shape[1:] != (n, 3):
            raise InvalidArgumentError("basis must be (m, n, 3) matching mean_shape")
        m = self.basis.shape[0]
        if self.coeff_bounds.shape != (m,):
            raise InvalidArgumentError("coeff_bounds must have one entry per component")
        if self.keypoint_names and len(self.keypoint_names) != n:
            raise InvalidArgumentError("keypoint_names length must match mean_shape")

    @property
    def n_keypoints(self):
        return self.mean_shape.shape[0]

    @property
    def n_components(self):
        return self.basis.shape[0]


@dataclass(frozen=True)
class Detection:
    """One object's 2D keypoints with per-keypoint confidence scores."""

    keypoints: np.ndarray
    scores: np.ndarray
    id: str = ""

    def __post_init__(self):
        _set(self, "keypoints", _freeze(self.keypoints))
        _set(self, "scores", _freeze(self.scores))
        _set(self, "id", str(self.id))
        if self.keypoints.ndim != 2 or self.keypoints.shape[1] != 2:
            raise InvalidArgumentError("keypoints must be (n, 2)")
        if self.scores.shape != (self.keypoints.shape[0],):
            raise InvalidArgumentError("scores must align with keypoints")
        if not np.all(np.isfinite(self.keypoints)):
            raise InvalidArgumentError("keypoints must be finite")
        if np.any(self.scores < 0) or np.any(self.scores > 1):
            raise InvalidArgumentError("scores must lie in [0, 1]")

    @property
    def n_usable(self):
        return int(np.count_nonzero(self.scores > 0))


@dataclass(frozen=True)
class ObjectState:
    """Rigid pose plus shape coefficients for one object, camera frame."""

    rotation: np.ndarray
    translation: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        _set(self, "rotation", _freeze(self.rotation))
        _set(self, "translation", _freeze(self.translation))
        _set(self, "coeffs", _freeze(self.coeffs))
        r = self.rotation
        if r.shape != (3, 3):
            raise InvalidArgumentError("rotation must be 3x3")
        if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-8:
            raise InvalidArgumentError("rotation is not orthonormal")
        if np.linalg.det(r) < 0:
            raise InvalidArgumentError("rotation must have det +1")
        if self.translation.shape != (3,):
            raise InvalidArgumentError("translation must be a 3-vector")
        if self.translation[2] <= 0:
            raise InvalidArgumentError(
                f"object must sit in front of the camera (z = {self.translation[2]})"
            )


@dataclass(frozen=True)
class Plane:
    """Plane v_a x + v_b y + v_c z + v_d = 0 in the camera frame."""

    coeffs: np.ndarray

    def __post_init__(self):
        _set(self, "coeffs", _freeze(self.coeffs))
        if self.coeffs.shape != (4,):
            raise InvalidArgumentError("plane needs 4 coefficients")

    @property
    def normal(self):
        return self.coeffs[:3]

    @property
    def offset(self):
        return float(self.coeffs[3])


@dataclass(frozen=True)
class Scene:
    """All detections of one image plus optional camera prior."""

    detections: tuple
    image_size: np.ndarray
    intrinsics_hint: CameraIntrinsics | None = None

    def __post_init__(self):
        _set(self, "detections", tuple(self.detections))
        _set(self, "image_size", _freeze(self.image_size))
        if self.image_size.shape != (2,) or np.any(self.image_size <= 0):
            raise InvalidArgumentError("image_size must be two positive numbers")


def validate_scene(scene, margin=100.0):
    """Report keypoints falling farther than `margin` outside the image."""
    report = []
    w, h = scene.image_size
    for i, det in enumerate(scene.detections):
        kp = det.keypoints[det.scores > 0]
        if kp.size == 0:
            continue
        if (
            np.any(kp[:, 0] < -margin)
            or np.any(kp[:, 0] > w + margin)
            or np.any(kp[:, 1] < -margin)
            or np.any(kp[:, 1] > h + margin)
        ):
            report.append(f"detection {i} ({det.id}): keypoints outside image bounds + margin")
    return report


@dataclass(frozen=True)
class SceneEstimate:
    """Solver output for one scene; `objects` aligns with scene.detections.

    Entries of `objects` may be None when the per-object solve failed; the
    matching `per_object_loss` entry is then None as well.
    """

    objects: tuple
    plane: Plane
    intrinsics: CameraIntrinsics
    per_object_loss: tuple
    converged: bool
    iterations: int
    flags: tuple = ()

    def __post_init__(self):
        _set(self, "objects", tuple(self.objects))
        _set(self, "per_object_loss", tuple(self.per_object_loss))
        _set(self, "flags", tuple(self.flags))
        if len(self.objects) != len(self.per_object_loss):
            raise InvalidArgumentError("objects and per_object_loss must align")


@dataclass(frozen=True)
class WeightSchedule:
    """Geometric weight growth: initial * growth^(t-1), capped."""

    initial: float
    growth: float
    cap: float


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 200
    distance_threshold: float | None = None  # None: 0.15 x atlas diameter
    angle_threshold: float = radians(10.0)
    seed: int = 0


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the per-object and joint solvers."""

    mu_shape: float = 1.0
    mu1_schedule: WeightSchedule = field(default_factory=lambda: WeightSchedule(1.0, 2.0, 400.0))
    mu2_schedule: WeightSchedule = field(default_factory=lambda: WeightSchedule(10.0, 2.0, 2000.0))
    max_iters: int = 30
    convergence_tol: float = 1e-6
    inner_max_iters: int = 50
    inner_tol: float = 1e-8
    ransac: RansacConfig = field(default_factory=RansacConfig)
    coeff_bound_mode: str = "symmetric"  # or "paper_literal"
    dlt_score_threshold: float = 0.05

    def __post_init__(self):
        if self.coeff_bound_mode not in ("symmetric", "paper_literal"):
            raise InvalidArgumentError(f"unknown coeff_bound_mode {self.coeff_bound_mode!r}")


def coeff_box(atlas, mode="symmetric"):
    """Lower/upper coefficient bounds for the configured box mode."""
    u = atlas.coeff_bounds
    if mode == "paper_literal":
        return np.zeros_like(u), u
    if mode == "symmetric":
        return -u, u
    raise InvalidArgumentError(f"unknown coeff_bound_mode {mode!r}")


def instantiate_shape(atlas, coeffs):
    """Return mean_shape + sum_j coeffs[j] * basis[j], shape (n, 3)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (atlas.n_components,):
        raise InvalidArgumentError(
            f"expected {atlas.n_components} coefficients, got shape {coeffs.shape}"
        )
    return atlas.mean_shape + np.einsum("j,jik->ik", coeffs, atlas.basis)


def validate_atlas(atlas, orth_tol=1e-6):
    """Check atlas invariants; returns a list of violation messages."""
    report = []
    n, m = atlas.n_keypoints, atlas.n_components
    if n < 6:
        report.append(f"need at least 6 keypoints, got {n}")
    if m < 1:
        report.append("need at least one basis component")
    flat = atlas.basis.reshape(m, -1)
    norms = np.linalg.norm(flat, axis=1)
    if np.any(norms < 1e-12):
        report.append("basis contains a zero component")
    else:
        gram = flat @ flat.T
        off = np.abs(gram - np.diag(np.diag(gram)))
        scale = np.outer(norms, norms)
        worst = np.max(off / scale) if m > 1 else 0.0
        if worst > orth_tol:
            report.append(f"basis components not orthogonal (relative off-diagonal {worst:.2e})")
    if np.any(atlas.coeff_bounds < 0):
        report.append("coeff_bounds must be non-negative")
    diffs = atlas.mean_shape[:, None, :] - atlas.mean_shape[None, :, :]
    true_diam = float(np.max(np.linalg.norm(diffs, axis=-1)))
    if not np.isclose(atlas.diameter, true_diam, rtol=1e-9, atol=1e-9):
        report.append(
            f"diameter field {atlas.diameter} != max pairwise distance {true_diam}"
        )
    return report


def object_up_axis(state):
    """Direction of the object's canonical up axis in the camera frame."""
    up = state.rotation @ CANONICAL_UP
    return up / np.linalg.norm(up)
