//! Classic point-to-point ICP on box centers, the comparison baseline.

use serde::{Deserialize, Serialize};

use crate::estimator::weighted_procrustes_se2;
use crate::geometry::{wrap_angle, RigidTransform2, Vec2};
use crate::matcher::MatchSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcpParams {
    pub max_iters: usize,
    /// Parameter-change threshold (meters plus radians) that stops iterating.
    pub tol: f64,
    /// Correspondences farther than this are rejected, meters.
    pub reject_radius: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams {
            max_iters: 50,
            tol: 1e-6,
            reject_radius: 5.0,
        }
    }
}

/// Alternates nearest-neighbor correspondence (with rejection beyond the
/// radius) and a closed-form SE(2) refit until the parameters settle. Returns
/// the final transform mapping coop points onto ego points and the final
/// correspondence set, reduced to a partial injection by keeping the nearest
/// coop point per ego point.
pub fn icp_associate(
    ego_pts: &[Vec2],
    coop_pts: &[Vec2],
    init: &RigidTransform2,
    params: &IcpParams,
) -> (RigidTransform2, MatchSet) {
    let mut current = *init;
    let mut correspondences: Vec<(usize, usize, f64)> = Vec::new();

    for _ in 0..params.max_iters {
        correspondences.clear();
        for (cj, cp) in coop_pts.iter().enumerate() {
            let moved = current.apply(*cp);
            let mut best: Option<(usize, f64)> = None;
            for (ei, ep) in ego_pts.iter().enumerate() {
                let d = (*ep - moved).norm();
                if d <= params.reject_radius && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((ei, d));
                }
            }
            if let Some((ei, d)) = best {
                correspondences.push((ei, cj, d));
            }
        }
        if correspondences.is_empty() {
            return (*init, MatchSet::empty());
        }
        if correspondences.len() < 2 {
            break;
        }
        let ego_matched: Vec<Vec2> = correspondences
            .iter()
            .map(|&(ei, _, _)| ego_pts[ei])
            .collect();
        let coop_matched: Vec<Vec2> = correspondences
            .iter()
            .map(|&(_, cj, _)| coop_pts[cj])
            .collect();
        let weights = vec![1.0; correspondences.len()];
        let Ok(next) = weighted_procrustes_se2(&ego_matched, &coop_matched, &weights) else {
            break;
        };
        let delta = (next.translation() - current.translation()).norm()
            + wrap_angle(next.rotation() - current.rotation()).abs();
        current = next;
        if delta < params.tol {
            break;
        }
    }

    (current, dedupe_to_injection(&correspondences))
}

/// Nearest-neighbor correspondences can map several coop points onto one ego
/// point; keep the closest per ego index so the reported match set is a
/// partial injection like the other methods'.
fn dedupe_to_injection(correspondences: &[(usize, usize, f64)]) -> MatchSet {
    let mut best_per_ego: std::collections::BTreeMap<usize, (usize, f64)> =
        std::collections::BTreeMap::new();
    for &(ei, cj, d) in correspondences {
        match best_per_ego.get(&ei) {
            Some(&(_, bd)) if bd <= d => {}
            _ => {
                best_per_ego.insert(ei, (cj, d));
            }
        }
    }
    let pairs: Vec<(usize, usize)> = best_per_ego
        .iter()
        .map(|(&ei, &(cj, _))| (ei, cj))
        .collect();
    let support = pairs.len();
    MatchSet {
        pairs,
        anchor: None,
        support,
    }
}
