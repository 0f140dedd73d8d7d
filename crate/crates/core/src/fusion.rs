//! Fusion of ego and calibrated cooperative detections into one deduplicated
//! set via hard non-maximum suppression.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::geometry::{rotated_box_iou, ObjectBox};

/// How exact score ties order the suppression queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorePolicy {
    /// Score alone decides; ties fall back to id order.
    KeepMax,
    /// Score ties prefer the ego box, which carries no transform error.
    #[default]
    PreferEgo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionParams {
    pub iou_threshold: f64,
    pub score_policy: ScorePolicy,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            iou_threshold: 0.15,
            score_policy: ScorePolicy::PreferEgo,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Origin {
    Ego,
    Coop,
}

/// Hard NMS over the concatenated detection lists: boxes are visited by
/// descending score (ties broken by the score policy, then id, then origin)
/// and each kept box suppresses every remaining box overlapping it beyond
/// the IoU threshold. Boxes pass through unmodified.
pub fn fuse(
    ego_boxes: &[ObjectBox],
    coop_boxes_calibrated: &[ObjectBox],
    params: &FusionParams,
) -> Vec<ObjectBox> {
    let mut queue: Vec<(ObjectBox, Origin)> = ego_boxes
        .iter()
        .map(|b| (*b, Origin::Ego))
        .chain(coop_boxes_calibrated.iter().map(|b| (*b, Origin::Coop)))
        .collect();

    queue.sort_by(|(a, oa), (b, ob)| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| match params.score_policy {
                ScorePolicy::PreferEgo => origin_rank(*oa).cmp(&origin_rank(*ob)),
                ScorePolicy::KeepMax => Ordering::Equal,
            })
            .then_with(|| a.id.cmp(&b.id))
            .then_with(|| origin_rank(*oa).cmp(&origin_rank(*ob)))
    });

    let mut kept: Vec<ObjectBox> = Vec::new();
    let mut suppressed = vec![false; queue.len()];
    for k in 0..queue.len() {
        if suppressed[k] {
            continue;
        }
        let (keep, _) = queue[k];
        kept.push(keep);
        for (j, (cand, _)) in queue.iter().enumerate().skip(k + 1) {
            if !suppressed[j] && rotated_box_iou(&keep, cand) > params.iou_threshold {
                suppressed[j] = true;
            }
        }
    }
    kept
}

fn origin_rank(o: Origin) -> u8 {
    match o {
        Origin::Ego => 0,
        Origin::Coop => 1,
    }
}
