//! End-to-end per-frame execution: association, transform estimation,
//! fusion and metric computation for one method on one frame.

use serde::{Deserialize, Serialize};

use crate::context::{to_ego_frame, transform_set, DetectionSet};
use crate::estimator::{calibrate, CalibrationResult, RobustFitParams};
use crate::fusion::{fuse, FusionParams};
use crate::geometry::{relative_transform_from_poses, ObjectBox, RigidTransform2};
use crate::icp::{icp_associate, IcpParams};
use crate::matcher::{associate_with_options, MatchParams, MatchSet};
use crate::metrics::{association_pr, average_distance, map_at_iou, rre, rte};
use crate::sim::ScenarioFrame;

/// Association and calibration methods runnable by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Context-based matching with global consensus, then robust fit.
    Cbm,
    /// Ablation: context matching without the global consensus module.
    CbmNoConsensus,
    /// Classic nearest-neighbor ICP on box centers.
    Icp,
    /// No calibration: use the localization-derived transform directly.
    Gnss,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cbm => "cbm",
            Method::CbmNoConsensus => "cbm_no_consensus",
            Method::Icp => "icp",
            Method::Gnss => "gnss",
        }
    }

    pub fn parse(name: &str) -> Option<Method> {
        match name {
            "cbm" => Some(Method::Cbm),
            "cbm_no_consensus" => Some(Method::CbmNoConsensus),
            "icp" => Some(Method::Icp),
            "gnss" => Some(Method::Gnss),
            _ => None,
        }
    }

    pub const ALL: [Method; 4] = [
        Method::Cbm,
        Method::CbmNoConsensus,
        Method::Icp,
        Method::Gnss,
    ];
}

/// Every knob of the per-frame pipeline.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    pub match_params: MatchParams,
    pub fit_params: RobustFitParams,
    pub fusion_params: FusionParams,
    pub icp_params: IcpParams,
    /// BEV IoU threshold of the perception metric.
    pub map_iou: f64,
}

impl PipelineParams {
    pub fn standard() -> Self {
        PipelineParams {
            map_iou: 0.7,
            ..Default::default()
        }
    }
}

/// Everything one method produced on one frame.
#[derive(Debug, Clone)]
pub struct FrameOutcome {
    pub method: Method,
    pub matches: MatchSet,
    pub calibration: CalibrationResult,
    pub fused: Vec<ObjectBox>,
    pub precision: f64,
    pub recall: f64,
    /// Mean matched ground-truth distance, when anything was matched.
    pub ad_m: Option<f64>,
    pub rre_deg: f64,
    pub rte_m: f64,
    pub map_07: f64,
}

/// Runs one method on one frame and evaluates it against ground truth.
pub fn run_frame(frame: &ScenarioFrame, method: Method, params: &PipelineParams) -> FrameOutcome {
    let t_tilde = relative_transform_from_poses(
        &frame.ego_view.pose_measurement,
        &frame.coop_view.pose_measurement,
    );
    let coop_in_ego = to_ego_frame(&frame.coop_view, &frame.ego_view.pose_measurement);

    let (matches, calibration) = match method {
        Method::Cbm | Method::CbmNoConsensus => {
            let use_consensus = method == Method::Cbm;
            let matches = associate_with_options(
                &frame.ego_view,
                &coop_in_ego,
                &params.match_params,
                use_consensus,
            )
            .unwrap_or_else(|_| MatchSet::empty());
            let calibration = calibrate(
                &matches,
                &frame.ego_view,
                &coop_in_ego,
                &t_tilde,
                &params.fit_params,
            );
            (matches, calibration)
        }
        Method::Icp => {
            let ego_pts = frame.ego_view.positions();
            let coop_pts = coop_in_ego.positions();
            let (correction, matches) = icp_associate(
                &ego_pts,
                &coop_pts,
                &RigidTransform2::identity(),
                &params.icp_params,
            );
            let calibration = CalibrationResult {
                refined: correction.compose(&t_tilde),
                residual_correction: correction,
                inlier_weights: vec![1.0; matches.len()],
                fallback: false,
            };
            (matches, calibration)
        }
        Method::Gnss => {
            let calibration = CalibrationResult {
                refined: t_tilde,
                residual_correction: RigidTransform2::identity(),
                inlier_weights: Vec::new(),
                fallback: false,
            };
            (MatchSet::empty(), calibration)
        }
    };

    // fuse ego detections with coop detections under the calibrated transform
    let coop_calibrated = transform_set(&coop_in_ego, &calibration.residual_correction);
    let fused = fuse(
        &frame.ego_view.objects,
        &coop_calibrated.objects,
        &params.fusion_params,
    );

    let (precision, recall) = association_pr(&matches, &frame.covisible_truth);
    let ego_truth = frame.ego_truth_boxes();
    let coop_truth = frame.coop_truth_boxes();
    let ad_m = average_distance(&matches, &ego_truth, &coop_truth);
    let rre_deg = rre(&frame.t_true, &calibration.refined);
    let rte_m = rte(&frame.t_true, &calibration.refined);

    // ground truth expressed in the ego body frame, where fused boxes live
    let world_to_ego = frame.ego_truth_pose.to_world_transform().invert();
    let truth_in_ego: Vec<ObjectBox> = frame
        .ground_truth
        .iter()
        .map(|b| ObjectBox::new(b.id, world_to_ego.apply_pose(&b.pose), b.dims, b.score))
        .collect();
    let map_07 = map_at_iou(&fused, &truth_in_ego, params.map_iou);

    FrameOutcome {
        method,
        matches,
        calibration,
        fused,
        precision,
        recall,
        ad_m,
        rre_deg,
        rte_m,
        map_07,
    }
}

/// The uncalibrated transform a frame's pose measurements imply.
pub fn t_tilde_of(frame: &ScenarioFrame) -> RigidTransform2 {
    relative_transform_from_poses(
        &frame.ego_view.pose_measurement,
        &frame.coop_view.pose_measurement,
    )
}

/// The cooperative view of a frame expressed in the ego frame.
pub fn coop_in_ego_of(frame: &ScenarioFrame) -> DetectionSet {
    to_ego_frame(&frame.coop_view, &frame.ego_view.pose_measurement)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_frame, LocOffsetMode, NoiseConfig, SceneParams};
    use approx::assert_abs_diff_eq;

    fn noise_free() -> NoiseConfig {
        NoiseConfig {
            sigma_p: 0.0,
            sigma_theta: 0.0,
            flip_prob: 0.0,
            loc_offset_mode: LocOffsetMode::Fixed {
                dx: 3.0,
                dy: 3.0,
                dtheta: 5f64.to_radians(),
            },
            seed: 11,
        }
    }

    #[test]
    fn cbm_perfect_information_round_trip() {
        let scene = SceneParams {
            n_objects: 12,
            eta: 1.0,
            ..SceneParams::default()
        };
        let frame = generate_frame(&scene, &noise_free(), 0).unwrap();
        let out = run_frame(&frame, Method::Cbm, &PipelineParams::standard());
        assert_eq!(out.precision, 1.0);
        assert_eq!(out.recall, 1.0);
        assert!(out.rte_m < 1e-9, "rte {}", out.rte_m);
        assert!(out.rre_deg < 1e-9, "rre {}", out.rre_deg);
        // perfectly calibrated co-visible scene fuses to the true object count
        assert_eq!(out.fused.len(), 12);
        assert_abs_diff_eq!(out.map_07, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gnss_fixed_offset_rte_is_offset_norm() {
        let scene = SceneParams {
            n_objects: 8,
            ..SceneParams::default()
        };
        for k in 0..5 {
            let frame = generate_frame(&scene, &noise_free(), k).unwrap();
            let out = run_frame(&frame, Method::Gnss, &PipelineParams::standard());
            assert_abs_diff_eq!(out.rte_m, 18f64.sqrt(), epsilon = 1e-9);
            assert_abs_diff_eq!(out.rre_deg, 5.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn icp_runs_and_reports() {
        let scene = SceneParams {
            n_objects: 15,
            eta: 0.8,
            ..SceneParams::default()
        };
        let frame = generate_frame(&scene, &noise_free(), 3).unwrap();
        let out = run_frame(&frame, Method::Icp, &PipelineParams::standard());
        assert!(out.precision >= 0.0 && out.precision <= 1.0);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()), Some(m));
        }
        assert_eq!(Method::parse("bogus"), None);
    }
}
