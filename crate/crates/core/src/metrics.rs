//! Evaluation metrics: association precision/recall, average matched
//! distance, relative rotation/translation error, and BEV average precision
//! at an IoU threshold.

use std::collections::HashSet;

use crate::geometry::{rotated_box_iou, wrap_angle, ObjectBox, RigidTransform2};
use crate::matcher::MatchSet;

/// Precision and recall of a predicted match set against the true
/// correspondence list. An empty prediction scores precision 1.0 against an
/// empty truth and 0.0 otherwise; an empty truth scores recall 1.0.
pub fn association_pr(predicted: &MatchSet, truth: &[(usize, usize)]) -> (f64, f64) {
    let truth_set: HashSet<(usize, usize)> = truth.iter().copied().collect();
    let hits = predicted
        .pairs
        .iter()
        .filter(|p| truth_set.contains(p))
        .count();
    let precision = if predicted.is_empty() {
        if truth.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        hits as f64 / predicted.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        hits as f64 / truth.len() as f64
    };
    (precision, recall)
}

/// Mean Euclidean distance between the ground-truth world positions of the
/// matched pairs. Correct pairs contribute zero (same physical object);
/// mismatches contribute the true separation of the two objects. `None` when
/// nothing was matched.
pub fn average_distance(
    predicted: &MatchSet,
    ego_truth: &[ObjectBox],
    coop_truth: &[ObjectBox],
) -> Option<f64> {
    if predicted.is_empty() {
        return None;
    }
    let total: f64 = predicted
        .pairs
        .iter()
        .map(|&(ei, cj)| (ego_truth[ei].position() - coop_truth[cj].position()).norm())
        .sum();
    Some(total / predicted.len() as f64)
}

/// Relative rotation error in degrees: the absolute wrapped angle difference,
/// which is what the SO(3) trace formula reduces to for planar rotations.
pub fn rre(truth: &RigidTransform2, estimate: &RigidTransform2) -> f64 {
    wrap_angle(estimate.rotation() - truth.rotation())
        .abs()
        .to_degrees()
}

/// Relative translation error in meters.
pub fn rte(truth: &RigidTransform2, estimate: &RigidTransform2) -> f64 {
    (estimate.translation() - truth.translation()).norm()
}

/// All-point average precision of the fused boxes against ground truth at
/// the given BEV IoU threshold. Predictions are visited by descending score
/// (stable under ties) and greedily matched one-to-one to the best
/// still-unmatched truth box with IoU above the threshold; the area under
/// the monotone precision-recall envelope is returned.
pub fn map_at_iou(fused: &[ObjectBox], truth: &[ObjectBox], iou_thr: f64) -> f64 {
    if truth.is_empty() {
        return if fused.is_empty() { 1.0 } else { 0.0 };
    }
    if fused.is_empty() {
        return 0.0;
    }

    let mut order: Vec<usize> = (0..fused.len()).collect();
    order.sort_by(|&a, &b| {
        fused[b]
            .score
            .partial_cmp(&fused[a].score)
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut matched = vec![false; truth.len()];
    let mut tp_flags = Vec::with_capacity(fused.len());
    for &k in &order {
        let mut best: Option<(usize, f64)> = None;
        for (t, tb) in truth.iter().enumerate() {
            if matched[t] {
                continue;
            }
            let iou = rotated_box_iou(&fused[k], tb);
            if iou > iou_thr && best.is_none_or(|(_, bi)| iou > bi) {
                best = Some((t, iou));
            }
        }
        match best {
            Some((t, _)) => {
                matched[t] = true;
                tp_flags.push(true);
            }
            None => tp_flags.push(false),
        }
    }

    // precision-recall points after each prediction
    let n_truth = truth.len() as f64;
    let mut tp = 0usize;
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(tp_flags.len());
    for (k, &is_tp) in tp_flags.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        let recall = tp as f64 / n_truth;
        let precision = tp as f64 / (k + 1) as f64;
        points.push((recall, precision));
    }

    // monotone envelope, integrated over recall
    let mut envelope = points.clone();
    let mut best = 0.0f64;
    for p in envelope.iter_mut().rev() {
        best = best.max(p.1);
        p.1 = best;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in envelope {
        if recall > prev_recall {
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
    }
    ap
}
