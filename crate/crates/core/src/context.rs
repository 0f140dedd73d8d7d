//! Per-frame detections and intra-agent geometric context construction.
//!
//! A context matrix holds, for one center object, the relative position of
//! every other detection expressed in the center's heading-aligned local
//! frame. Because both columns and headings move together under any rigid
//! motion of the whole set, contexts are invariant to the inter-agent
//! localization error that matching has to survive.

use serde::{Deserialize, Serialize};

use crate::error::MatchError;
use crate::geometry::{relative_transform_from_poses, ObjectBox, Pose2, RigidTransform2, Vec2};

/// One agent's detections for a frame plus its (noisy) pose measurement.
/// Objects are expressed in the agent's body frame unless stated otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSet {
    pub agent_id: u64,
    pub pose_measurement: Pose2,
    pub objects: Vec<ObjectBox>,
}

impl DetectionSet {
    pub fn new(agent_id: u64, pose_measurement: Pose2, objects: Vec<ObjectBox>) -> Self {
        DetectionSet {
            agent_id,
            pose_measurement,
            objects,
        }
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.objects.iter().map(|o| o.position()).collect()
    }
}

/// Relative position vectors from one center object to every neighbor,
/// expressed in the center's local frame. The self column is excluded: a zero
/// vector has no direction so the angular similarity term would be undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextMatrix {
    pub owner_index: usize,
    pub columns: Vec<Vec2>,
    pub neighbor_indices: Vec<usize>,
}

impl ContextMatrix {
    /// Column holding the vector toward `object_index`, if it is a neighbor.
    pub fn column_of(&self, object_index: usize) -> Option<Vec2> {
        if object_index == self.owner_index {
            return None;
        }
        let col = if object_index < self.owner_index {
            object_index
        } else {
            object_index - 1
        };
        self.columns.get(col).copied()
    }
}

/// Re-expresses a cooperative detection set in the ego frame through the
/// transform computed from both agents' pose measurements. Headings are
/// composed with the transform's rotation and re-wrapped.
pub fn to_ego_frame(coop: &DetectionSet, ego_pose: &Pose2) -> DetectionSet {
    let t = relative_transform_from_poses(ego_pose, &coop.pose_measurement);
    transform_set(coop, &t)
}

/// Applies a rigid transform to every object of a detection set.
pub fn transform_set(set: &DetectionSet, t: &RigidTransform2) -> DetectionSet {
    let objects = set
        .objects
        .iter()
        .map(|o| ObjectBox::new(o.id, t.apply_pose(&o.pose), o.dims, o.score))
        .collect();
    DetectionSet::new(set.agent_id, set.pose_measurement, objects)
}

/// Re-adopts object directions so every heading points toward the front of
/// the ego frame: any heading with cos < 0 is flipped by pi. Applied
/// identically to both agents' sets before context construction.
pub fn canonicalize_forward(objects: &mut [ObjectBox]) {
    for obj in objects.iter_mut() {
        if obj.pose.heading.cos() < 0.0 {
            obj.pose = Pose2::new(obj.pose.position, obj.pose.heading + std::f64::consts::PI);
        }
    }
}

/// Builds the context matrix of every object in a common frame. Needs at
/// least two objects; with fewer there is no context to compare.
pub fn build_contexts(objects: &[ObjectBox]) -> Result<Vec<ContextMatrix>, MatchError> {
    let n = objects.len();
    if n < 2 {
        return Err(MatchError::SceneTooSparse { objects: n });
    }
    let mut contexts = Vec::with_capacity(n);
    for (i, center) in objects.iter().enumerate() {
        let (s, c) = center.pose.heading.sin_cos();
        let p = center.position();
        let mut columns = Vec::with_capacity(n - 1);
        let mut neighbor_indices = Vec::with_capacity(n - 1);
        for (k, other) in objects.iter().enumerate() {
            if k == i {
                continue;
            }
            let d = other.position() - p;
            // R^T(theta) * d
            columns.push(Vec2::new(c * d.x + s * d.y, -s * d.x + c * d.y));
            neighbor_indices.push(k);
        }
        contexts.push(ContextMatrix {
            owner_index: i,
            columns,
            neighbor_indices,
        });
    }
    Ok(contexts)
}
