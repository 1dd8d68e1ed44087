"""Optical sensing pipeline for a soft, marker-lined jig.

Stereo images of the membrane's inner surface go in; the principal normal of
the pressed object's bottom face comes out. A synthetic membrane and stereo rig
simulator supplies images with exact ground truth.
"""
from .calibration import (
    CalibrationParams,
    CalibrationSamples,
    PipelineSetup,
    RmseGrid,
    SweepConfig,
    apply_calibration,
    compute_calibration,
    evaluate_rmse_grid,
    run_sweep,
    tilt_rmse,
)
from .detect import LoGParams, MarkerDetection, detect_markers, log_filter
from .errors import (
    ConfigError,
    DegenerateConfigurationError,
    DomainError,
    FrameMismatchError,
    InsufficientDataError,
    ProjectionError,
    SoftJigError,
    TriangulationError,
)
from .geometry import (
    RigidTransform,
    TiltAngles,
    angle_between_deg,
    compose,
    invert,
    normal_from_tilt_angles,
    principal_normal_from_rotation,
    relative_pose,
    tilt_angles_from_normal,
)
from .plane import CropSpec, PlaneFit, crop_point_cloud, estimate_principal_normal, fit_plane_svd
from .sim import ContactSpec, JigGeometry, SceneFrame, StereoRig, generate_scene
from .stereo import (
    PointCloud,
    StereoMatchParams,
    estimate_jig_pose_pnp,
    match_detections,
    transform_cloud,
    triangulate,
    triangulate_pairs,
)

__version__ = "0.1.0"
