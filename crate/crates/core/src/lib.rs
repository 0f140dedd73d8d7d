//! Context-based matching for cooperative perception: inter-agent object
//! association from bounding-box detections alone, robust SE(2) calibration
//! of the relative pose, detection fusion, and a synthetic scenario harness
//! with the evaluation metrics to go with it.

pub mod context;
pub mod error;
pub mod estimator;
pub mod fusion;
pub mod geometry;
pub mod icp;
pub mod io;
pub mod matcher;
pub mod metrics;
pub mod pipeline;
pub mod sim;

pub use context::{
    build_contexts, canonicalize_forward, to_ego_frame, ContextMatrix, DetectionSet,
};
pub use error::{FitError, IoFormatError, MatchError, SimError};
pub use estimator::{
    calibrate, calibrated_transform, robust_fit_se2, weighted_procrustes_se2, CalibrationResult,
    RobustFitParams,
};
pub use fusion::{fuse, FusionParams, ScorePolicy};
pub use geometry::{
    relative_transform_from_poses, rotated_box_iou, wrap_angle, BoxDims, ObjectBox, Pose2,
    RigidTransform2, Vec2,
};
pub use icp::{icp_associate, IcpParams};
pub use matcher::{
    angular_similarity, associate, associate_with_options, coarse_match, global_consensus,
    length_similarity, prune_one_to_many, select_best, CorrespondenceMatrix, MatchParams, MatchSet,
};
pub use metrics::{association_pr, average_distance, map_at_iou, rre, rte};
pub use pipeline::{run_frame, FrameOutcome, Method, PipelineParams};
pub use sim::{
    corrupt_view, generate_frame, generate_scene, split_covisible, LocOffsetMode, NoiseConfig,
    ScenarioFrame, SceneParams,
};
