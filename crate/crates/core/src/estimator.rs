//! Robust SE(2) estimation from matched object pairs and composition into
//! the calibrated inter-agent transform.
//!
//! The residual correction is found by iteratively reweighted least squares
//! with a Welsch kernel and an annealed scale (graduated non-convexity): each
//! scale runs closed-form weighted Procrustes solves until the parameters
//! settle, then the scale tightens.

use serde::{Deserialize, Serialize};

use crate::context::DetectionSet;
use crate::error::FitError;
use crate::geometry::{wrap_angle, RigidTransform2, Vec2};
use crate::matcher::MatchSet;

/// Robust loss used for IRLS weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RobustKernel {
    #[default]
    Welsch,
}

impl RobustKernel {
    /// IRLS weight for a residual at the given kernel scale.
    pub fn weight(self, residual: f64, scale: f64) -> f64 {
        match self {
            RobustKernel::Welsch => (-(residual * residual) / (scale * scale)).exp(),
        }
    }

    /// Robust loss value for a residual at the given kernel scale.
    pub fn loss(self, residual: f64, scale: f64) -> f64 {
        match self {
            RobustKernel::Welsch => {
                let s2 = scale * scale;
                0.5 * s2 * (1.0 - (-(residual * residual) / s2).exp())
            }
        }
    }
}

/// Parameters of the robust fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobustFitParams {
    pub kernel: RobustKernel,
    /// Annealed kernel scales in meters, strictly decreasing. The floor must
    /// sit above the inlier residual noise or the terminal reweighting
    /// collapses onto the few nearest points.
    pub scale_schedule: Vec<f64>,
    pub max_iters_per_scale: usize,
    /// Parameter-change threshold (meters plus radians) that ends a scale.
    pub convergence_tol: f64,
}

impl Default for RobustFitParams {
    fn default() -> Self {
        RobustFitParams {
            kernel: RobustKernel::Welsch,
            scale_schedule: vec![5.0, 2.0, 1.0, 0.5],
            max_iters_per_scale: 20,
            convergence_tol: 1e-6,
        }
    }
}

/// Outcome of calibrating one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    /// The calibrated inter-agent transform.
    pub refined: RigidTransform2,
    /// Residual correction applied on top of the localization-derived
    /// transform; identity when `fallback` is set.
    pub residual_correction: RigidTransform2,
    /// Terminal IRLS weight per matched pair, empty on fallback.
    pub inlier_weights: Vec<f64>,
    /// True when too few pairs were available and the localization-derived
    /// transform was returned untouched.
    pub fallback: bool,
}

/// Per-scale objective trace of the IRLS, for diagnostics and tests.
#[derive(Debug, Clone, Default)]
pub struct FitTrace {
    pub scales: Vec<ScaleTrace>,
}

#[derive(Debug, Clone)]
pub struct ScaleTrace {
    pub scale: f64,
    /// Robust objective after each inner solve.
    pub objectives: Vec<f64>,
}

/// Closed-form weighted SE(2) Procrustes: the (R, t) minimizing
/// sum_i w_i * |ego_i - (R * coop_i + t)|^2 via weighted centroids and the
/// 2D cross/dot angle estimate.
pub fn weighted_procrustes_se2(
    ego_pts: &[Vec2],
    coop_pts: &[Vec2],
    weights: &[f64],
) -> Result<RigidTransform2, FitError> {
    if ego_pts.len() != coop_pts.len() || ego_pts.len() != weights.len() {
        return Err(FitError::LengthMismatch {
            ego: ego_pts.len(),
            coop: coop_pts.len(),
        });
    }
    let effective = weights.iter().filter(|&&w| w > 0.0).count();
    if effective < 2 {
        return Err(FitError::TooFewPoints { effective });
    }
    let w_sum: f64 = weights.iter().sum();
    let mut ego_c = Vec2::ZERO;
    let mut coop_c = Vec2::ZERO;
    for ((e, c), &w) in ego_pts.iter().zip(coop_pts).zip(weights) {
        ego_c = ego_c + e.scale(w);
        coop_c = coop_c + c.scale(w);
    }
    ego_c = ego_c.scale(1.0 / w_sum);
    coop_c = coop_c.scale(1.0 / w_sum);

    let mut dot = 0.0;
    let mut cross = 0.0;
    let mut coop_spread = 0.0;
    for ((e, c), &w) in ego_pts.iter().zip(coop_pts).zip(weights) {
        let de = *e - ego_c;
        let dc = *c - coop_c;
        dot += w * de.dot(dc);
        cross += w * dc.cross(de);
        coop_spread += w * dc.dot(dc);
    }
    if coop_spread / w_sum < 1e-18 {
        return Err(FitError::CoincidentPoints);
    }
    let angle = cross.atan2(dot);
    let rot = RigidTransform2::new(angle, Vec2::ZERO);
    let t = ego_c - rot.apply(coop_c);
    Ok(RigidTransform2::new(angle, t))
}

fn pair_points(
    pairs: &[(usize, usize)],
    ego: &DetectionSet,
    coop_in_ego: &DetectionSet,
) -> (Vec<Vec2>, Vec<Vec2>) {
    let ego_pts = pairs
        .iter()
        .map(|&(i, _)| ego.objects[i].position())
        .collect();
    let coop_pts = pairs
        .iter()
        .map(|&(_, j)| coop_in_ego.objects[j].position())
        .collect();
    (ego_pts, coop_pts)
}

/// Robust IRLS fit of the residual correction over matched pairs. Returns the
/// correction and the terminal weights.
pub fn robust_fit_se2(
    pairs: &MatchSet,
    ego: &DetectionSet,
    coop_in_ego: &DetectionSet,
    params: &RobustFitParams,
) -> Result<(RigidTransform2, Vec<f64>), FitError> {
    robust_fit_se2_traced(pairs, ego, coop_in_ego, params).map(|(t, w, _)| (t, w))
}

/// As [`robust_fit_se2`], also returning the per-scale objective trace.
pub fn robust_fit_se2_traced(
    pairs: &MatchSet,
    ego: &DetectionSet,
    coop_in_ego: &DetectionSet,
    params: &RobustFitParams,
) -> Result<(RigidTransform2, Vec<f64>, FitTrace), FitError> {
    if pairs.len() < 2 {
        return Err(FitError::TooFewPoints {
            effective: pairs.len(),
        });
    }
    let (ego_pts, coop_pts) = pair_points(&pairs.pairs, ego, coop_in_ego);
    robust_fit_points(&ego_pts, &coop_pts, params)
}

/// Robust IRLS fit between raw point lists.
pub fn robust_fit_points(
    ego_pts: &[Vec2],
    coop_pts: &[Vec2],
    params: &RobustFitParams,
) -> Result<(RigidTransform2, Vec<f64>, FitTrace), FitError> {
    if ego_pts.len() < 2 {
        return Err(FitError::TooFewPoints {
            effective: ego_pts.len(),
        });
    }
    let n = ego_pts.len();
    let mut current = RigidTransform2::identity();
    let mut weights = vec![1.0; n];
    let mut trace = FitTrace::default();

    for &scale in &params.scale_schedule {
        let mut scale_trace = ScaleTrace {
            scale,
            objectives: Vec::new(),
        };
        for _ in 0..params.max_iters_per_scale {
            for (k, w) in weights.iter_mut().enumerate() {
                let r = (ego_pts[k] - current.apply(coop_pts[k])).norm();
                *w = params.kernel.weight(r, scale);
            }
            let next = weighted_procrustes_se2(ego_pts, coop_pts, &weights)?;
            let objective: f64 = (0..n)
                .map(|k| {
                    params
                        .kernel
                        .loss((ego_pts[k] - next.apply(coop_pts[k])).norm(), scale)
                })
                .sum();
            scale_trace.objectives.push(objective);
            let delta = (next.translation() - current.translation()).norm()
                + wrap_angle(next.rotation() - current.rotation()).abs();
            current = next;
            if delta < params.convergence_tol {
                break;
            }
        }
        trace.scales.push(scale_trace);
    }
    // terminal weights at the final scale
    if let Some(&last_scale) = params.scale_schedule.last() {
        for (k, w) in weights.iter_mut().enumerate() {
            let r = (ego_pts[k] - current.apply(coop_pts[k])).norm();
            *w = params.kernel.weight(r, last_scale);
        }
    }
    Ok((current, weights, trace))
}

/// Composes the residual correction with the localization-derived transform:
/// the block-matrix product [R* t*; 0 1] * T_tilde.
pub fn calibrated_transform(
    correction: &RigidTransform2,
    t_tilde: &RigidTransform2,
) -> RigidTransform2 {
    correction.compose(t_tilde)
}

/// Convenience wrapper running the robust fit and handling the degenerate
/// fallback: with fewer than two matched pairs the localization-derived
/// transform is returned untouched.
pub fn calibrate(
    pairs: &MatchSet,
    ego: &DetectionSet,
    coop_in_ego: &DetectionSet,
    t_tilde: &RigidTransform2,
    params: &RobustFitParams,
) -> CalibrationResult {
    match robust_fit_se2(pairs, ego, coop_in_ego, params) {
        Ok((correction, weights)) => CalibrationResult {
            refined: calibrated_transform(&correction, t_tilde),
            residual_correction: correction,
            inlier_weights: weights,
            fallback: false,
        },
        Err(_) => CalibrationResult {
            refined: *t_tilde,
            residual_correction: RigidTransform2::identity(),
            inlier_weights: Vec::new(),
            fallback: true,
        },
    }
}
