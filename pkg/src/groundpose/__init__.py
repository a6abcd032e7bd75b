"""Joint 6-DoF multi-object pose, ground-plane, and focal-length estimation
from 2D semantic keypoints of a single image."""

from .deformable_pose import lambda_step, object_loss, solve_object
from .errors import (
    BehindCameraError,
    DegenerateConfigurationError,
    EmptySceneError,
    GenerationError,
    GroundPoseError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidPlaneError,
    NoProgressError,
    SchemaError,
    UnderdeterminedError,
    ValidationError,
)
from .evaluation import (
    ADD_THRESHOLDS,
    VIEWPOINT_THRESHOLDS,
    add_accuracy,
    add_distance,
    viewpoint_precision,
)
from .joint_solver import IterationDiagnostics, solve_scene, total_loss, weight_schedule
from .plane_consensus import (
    normal_angle,
    normalize_plane,
    point_plane_distance,
    ransac_plane_from_rotations,
    ransac_plane_from_translations,
)
from .pnp_init import dlt_pose, refine_rigid
from .rotations import (
    exp_so3,
    geodesic_distance,
    project_to_so3,
    random_rotation,
    rotation_aligning,
    skew,
)
from .projection import (
    ResidualBlock,
    check_jacobian,
    project_point,
    project_points,
    project_weak,
    reprojection_residuals,
)
from .scene_model import (
    CANONICAL_UP,
    CameraIntrinsics,
    Detection,
    ObjectState,
    Plane,
    RansacConfig,
    Scene,
    SceneEstimate,
    ShapeAtlas,
    SolverConfig,
    WeightSchedule,
    coeff_box,
    instantiate_shape,
    object_up_axis,
    validate_atlas,
    validate_scene,
)
from .self_calibration import FocalUpdate, depth_rescale, focal_polish, focal_update
from .synth_oracle import (
    SynthConfig,
    car_atlas,
    drop_keypoints,
    generate_scene,
    perturb_keypoints,
    plant_outliers,
)

__version__ = "0.1.0"
