//! Context-based matching: per-pair coarse matching of context columns,
//! global consensus maximization, one-to-many pruning and selection of the
//! final co-visible correspondence set.
//!
//! The pipeline, given detections already in a common ego frame:
//!
//! 1. For every candidate center pair (i, j), threshold the similarity of
//!    their context columns to obtain a local correspondence matrix `L_ij`.
//! 2. Filter each `L_ij` by cross-endorsement: an entry survives only if
//!    enough other entries of `L_ij`, interpreted as center pairs themselves,
//!    also list it in their own local matrices.
//! 3. Drop one-to-many correspondences.
//! 4. Keep the center pair whose filtered matrix has the most entries.

use crate::context::{build_contexts, canonicalize_forward, ContextMatrix, DetectionSet};
use crate::error::MatchError;
use crate::geometry::Vec2;

/// Tuning knobs of the matcher.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MatchParams {
    /// Angular tolerance in radians; a column pair passes the angular gate
    /// when their folded angle is at most `sigma1`.
    pub sigma1: f64,
    /// Length tolerance in meters for the second gate.
    pub sigma2: f64,
    /// Weight of the angular term in the combined similarity.
    pub alpha: f64,
    /// Weight of the length term in the combined similarity.
    pub beta: f64,
    /// A local matrix with fewer entries than this is cleared outright.
    pub min_local_support: usize,
    /// Minimum endorsement count (including the entry's own vote) an entry
    /// needs to survive the global consensus filter.
    pub consensus_min_votes: usize,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            sigma1: 0.35,
            sigma2: 1.5,
            alpha: 1.0,
            beta: 1.0,
            min_local_support: 2,
            consensus_min_votes: 2,
        }
    }
}

/// Processing stage of a correspondence matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Raw thresholded local correspondences.
    Local,
    /// After the global consensus filter.
    Filtered,
    /// After one-to-many pruning; row and column sums are at most one.
    Pruned,
}

/// Binary correspondence matrix between the ego and cooperative index sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
    stage: Stage,
}

impl CorrespondenceMatrix {
    pub fn zeros(rows: usize, cols: usize, stage: Stage) -> Self {
        CorrespondenceMatrix {
            rows,
            cols,
            data: vec![false; rows * cols],
            stage,
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.cols + col] = value;
    }

    /// Number of nonzero entries (the l0 "norm").
    pub fn card(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn clear(&mut self) {
        self.data.fill(false);
    }

    /// Set entries in row-major order.
    pub fn entries(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    out.push((r, c));
                }
            }
        }
        out
    }

    pub fn row_sum(&self, row: usize) -> usize {
        (0..self.cols).filter(|&c| self.get(row, c)).count()
    }

    pub fn col_sum(&self, col: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, col)).count()
    }
}

/// The estimated co-visible correspondence set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchSet {
    /// Matched (ego_index, coop_index) pairs, sorted by ego index.
    pub pairs: Vec<(usize, usize)>,
    /// The winning center pair, when any matrix had support.
    pub anchor: Option<(usize, usize)>,
    /// Cardinality of the winning pruned matrix (excluding the anchor).
    pub support: usize,
}

impl MatchSet {
    pub fn empty() -> Self {
        MatchSet::default()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Angular distance between two context columns, scaled by `sigma1`. The
/// absolute value folds opposite directions together, so a heading flipped by
/// pi cannot break the gate. Zero-norm inputs are rejected with +infinity.
///
/// Computed as atan2(|cross|, |dot|), the line-angle form of
/// arccos(|u.v| / (|u| |v|)): exact for (anti)parallel inputs and well
/// conditioned near 0 and pi/2.
pub fn angular_similarity(u: Vec2, v: Vec2, sigma1: f64) -> f64 {
    if u.norm() <= f64::EPSILON || v.norm() <= f64::EPSILON {
        return f64::INFINITY;
    }
    u.cross(v).abs().atan2(u.dot(v).abs()) / sigma1
}

/// Length distance between two context columns, scaled by `sigma2`: the
/// absolute difference of the column lengths. Rotation of a whole context
/// (center heading error) moves every column direction but no column length,
/// so this gate stays informative at any neighbor distance.
pub fn length_similarity(u: Vec2, v: Vec2, sigma2: f64) -> f64 {
    (u.norm() - v.norm()).abs() / sigma2
}

/// The combined weighted similarity of two context columns.
pub fn similarity(u: Vec2, v: Vec2, params: &MatchParams) -> f64 {
    params.alpha * angular_similarity(u, v, params.sigma1)
        + params.beta * length_similarity(u, v, params.sigma2)
}

/// Thresholds the similarity of every column pair of two contexts into a
/// local correspondence matrix: an entry is set when both gates pass, i.e.
/// `angular_similarity <= 1` and `length_similarity <= 1`. A matrix with
/// fewer than `min_local_support` entries is cleared.
///
/// Column norms are computed once per context and the cheap length test
/// rejects most pairs before the atan2 of the angular test runs. The entry
/// outcomes are bit-identical to calling the two similarity functions.
pub fn coarse_match(
    pi: &ContextMatrix,
    qj: &ContextMatrix,
    n_ego: usize,
    n_coop: usize,
    params: &MatchParams,
) -> CorrespondenceMatrix {
    let mut m = CorrespondenceMatrix::zeros(n_ego, n_coop, Stage::Local);
    let p_norms: Vec<f64> = pi.columns.iter().map(|u| u.norm()).collect();
    let q_norms: Vec<f64> = qj.columns.iter().map(|v| v.norm()).collect();
    for ((uc, &nu), &i_prime) in pi.columns.iter().zip(&p_norms).zip(&pi.neighbor_indices) {
        if nu <= f64::EPSILON {
            continue;
        }
        for ((vc, &nv), &j_prime) in qj.columns.iter().zip(&q_norms).zip(&qj.neighbor_indices) {
            if nv <= f64::EPSILON || (nu - nv).abs() / params.sigma2 > 1.0 {
                continue;
            }
            if uc.cross(*vc).abs().atan2(uc.dot(*vc).abs()) / params.sigma1 <= 1.0 {
                m.set(i_prime, j_prime, true);
            }
        }
    }
    if m.card() < params.min_local_support {
        m.clear();
    }
    m
}

/// All local correspondence matrices of a frame, indexed by center pair.
#[derive(Debug, Clone)]
pub struct LocalMatrices {
    pub n_ego: usize,
    pub n_coop: usize,
    mats: Vec<CorrespondenceMatrix>,
}

impl LocalMatrices {
    pub fn build(
        ego_contexts: &[ContextMatrix],
        coop_contexts: &[ContextMatrix],
        params: &MatchParams,
    ) -> Self {
        let n_ego = ego_contexts.len();
        let n_coop = coop_contexts.len();
        let mut mats = Vec::with_capacity(n_ego * n_coop);
        for pi in ego_contexts {
            for qj in coop_contexts {
                mats.push(coarse_match(pi, qj, n_ego, n_coop, params));
            }
        }
        LocalMatrices {
            n_ego,
            n_coop,
            mats,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &CorrespondenceMatrix {
        &self.mats[i * self.n_coop + j]
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &CorrespondenceMatrix)> {
        self.mats
            .iter()
            .enumerate()
            .map(|(k, m)| ((k / self.n_coop, k % self.n_coop), m))
    }
}

/// Global consensus filter: an entry of `L_ij` survives when the entries of
/// `L_ij`, read as center pairs, endorse it often enough through their own
/// local matrices. The entry's own membership counts as one vote, so the
/// default threshold of two asks for at least one independent endorsement.
pub fn global_consensus(local: &LocalMatrices, params: &MatchParams) -> Vec<CorrespondenceMatrix> {
    let mut out = Vec::with_capacity(local.n_ego * local.n_coop);
    for ((_, _), l_ij) in local.iter() {
        let entries = l_ij.entries();
        let mut filtered = CorrespondenceMatrix::zeros(local.n_ego, local.n_coop, Stage::Filtered);
        for &(ip, jp) in &entries {
            let mut votes = 0usize;
            for &(kp, hp) in &entries {
                // an entry votes for itself; every other entry votes through
                // its own local matrix
                if (kp, hp) == (ip, jp) || local.get(kp, hp).get(ip, jp) {
                    votes += 1;
                }
            }
            if votes >= params.consensus_min_votes {
                filtered.set(ip, jp, true);
            }
        }
        out.push(filtered);
    }
    out
}

/// Removes one-to-many correspondences: every entry whose row sum or column
/// sum exceeds one is zeroed, the rest pass through.
pub fn prune_one_to_many(l1: &CorrespondenceMatrix) -> CorrespondenceMatrix {
    let rows = (0..l1.rows).map(|r| l1.row_sum(r)).collect::<Vec<_>>();
    let cols = (0..l1.cols).map(|c| l1.col_sum(c)).collect::<Vec<_>>();
    let mut out = CorrespondenceMatrix::zeros(l1.rows, l1.cols, Stage::Pruned);
    for (r, c) in l1.entries() {
        if rows[r] <= 1 && cols[c] <= 1 {
            out.set(r, c, true);
        }
    }
    out
}

/// Picks the center pair whose matrix keeps the most correspondences and
/// returns its pair set with the center itself appended. Ties break on the
/// smaller summed length distance over matched pairs, then on the
/// lexicographically smaller center pair, so output is deterministic.
pub fn select_best(
    matrices: &[CorrespondenceMatrix],
    ego_contexts: &[ContextMatrix],
    coop_contexts: &[ContextMatrix],
    params: &MatchParams,
) -> MatchSet {
    let n_coop = coop_contexts.len();
    let mut best: Option<(usize, f64, usize, usize)> = None;
    for (k, m) in matrices.iter().enumerate() {
        let card = m.card();
        if card == 0 {
            continue;
        }
        let (i, j) = (k / n_coop, k % n_coop);
        let residual: f64 = m
            .entries()
            .iter()
            .map(|&(ip, jp)| {
                let u = ego_contexts[i].column_of(ip);
                let v = coop_contexts[j].column_of(jp);
                match (u, v) {
                    (Some(u), Some(v)) => length_similarity(u, v, params.sigma2),
                    _ => 0.0,
                }
            })
            .sum();
        let better = match best {
            None => true,
            Some((bc, br, bi, bj)) => {
                card > bc
                    || (card == bc && (residual < br || (residual == br && (i, j) < (bi, bj))))
            }
        };
        if better {
            best = Some((card, residual, i, j));
        }
    }

    let Some((card, _, i, j)) = best else {
        return MatchSet::empty();
    };
    let winner = &matrices[i * n_coop + j];
    let mut pairs = winner.entries();
    if !pairs.contains(&(i, j)) {
        pairs.push((i, j));
    }
    pairs.sort_unstable();
    MatchSet {
        pairs,
        anchor: Some((i, j)),
        support: card,
    }
}

/// End-to-end association between an ego detection set and a cooperative set
/// already expressed in the ego frame.
pub fn associate(
    ego: &DetectionSet,
    coop_in_ego: &DetectionSet,
    params: &MatchParams,
) -> Result<MatchSet, MatchError> {
    associate_with_options(ego, coop_in_ego, params, true)
}

/// Association with the global consensus module switchable, for the ablation
/// study: with `use_consensus` off, the cross-endorsement filter is skipped
/// and selection runs on the one-to-many-pruned local matrices directly, so
/// the output stays a partial injection.
pub fn associate_with_options(
    ego: &DetectionSet,
    coop_in_ego: &DetectionSet,
    params: &MatchParams,
    use_consensus: bool,
) -> Result<MatchSet, MatchError> {
    if ego.objects.len() < 3 {
        return Err(MatchError::InsufficientContext {
            side: "ego",
            objects: ego.objects.len(),
        });
    }
    if coop_in_ego.objects.len() < 3 {
        return Err(MatchError::InsufficientContext {
            side: "cooperative",
            objects: coop_in_ego.objects.len(),
        });
    }

    let mut ego_objects = ego.objects.clone();
    let mut coop_objects = coop_in_ego.objects.clone();
    canonicalize_forward(&mut ego_objects);
    canonicalize_forward(&mut coop_objects);

    let ego_contexts = build_contexts(&ego_objects)?;
    let coop_contexts = build_contexts(&coop_objects)?;

    let local = LocalMatrices::build(&ego_contexts, &coop_contexts, params);
    let pruned: Vec<CorrespondenceMatrix> = if use_consensus {
        global_consensus(&local, params)
            .iter()
            .map(prune_one_to_many)
            .collect()
    } else {
        local.iter().map(|(_, m)| prune_one_to_many(m)).collect()
    };
    Ok(select_best(&pruned, &ego_contexts, &coop_contexts, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoxDims, ObjectBox, Pose2};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn obj(id: u64, x: f64, y: f64, heading: f64) -> ObjectBox {
        ObjectBox::new(
            id,
            Pose2::xyh(x, y, heading),
            BoxDims::new(1.5, 1.8, 4.5),
            1.0,
        )
    }

    fn set(objects: Vec<ObjectBox>) -> DetectionSet {
        DetectionSet::new(0, Pose2::xyh(0.0, 0.0, 0.0), objects)
    }

    #[test]
    fn angular_similarity_examples() {
        let s1 = 0.35;
        assert_abs_diff_eq!(
            angular_similarity(Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0), s1),
            0.0,
            epsilon = 1e-12
        );
        // the absolute value cancels a heading flip
        assert_eq!(
            angular_similarity(Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), s1),
            0.0
        );
        assert_abs_diff_eq!(
            angular_similarity(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), FRAC_PI_2),
            1.0,
            epsilon = 1e-12
        );
        assert!(angular_similarity(Vec2::ZERO, Vec2::new(1.0, 0.0), s1).is_infinite());
    }

    #[test]
    fn length_similarity_examples() {
        // identical columns have zero distance
        assert_eq!(
            length_similarity(Vec2::new(2.0, 1.0), Vec2::new(2.0, 1.0), 3.0),
            0.0
        );
        // |(1,2)| = sqrt(5) against the zero vector, scaled by 3
        assert_abs_diff_eq!(
            length_similarity(Vec2::new(1.0, 2.0), Vec2::ZERO, 3.0),
            5f64.sqrt() / 3.0,
            epsilon = 1e-12
        );
        // a flipped column has the same length, so the gate cannot reject it
        assert_eq!(
            length_similarity(Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), 1.0),
            0.0
        );
    }

    #[test]
    fn combined_similarity_weights_both_terms() {
        let params = MatchParams {
            sigma1: FRAC_PI_2,
            sigma2: 2.0,
            alpha: 2.0,
            beta: 0.5,
            ..MatchParams::default()
        };
        // perpendicular unit vs length-3: angular term 1.0, length term 1.0
        let u = Vec2::new(1.0, 0.0);
        let v = Vec2::new(0.0, 3.0);
        assert_abs_diff_eq!(similarity(u, v, &params), 2.0 * 1.0 + 0.5 * 1.0, epsilon = 1e-12);
    }

    #[test]
    fn coarse_match_identical_contexts() {
        let objects = vec![
            obj(0, 0.0, 0.0, 0.1),
            obj(1, 8.0, 1.0, 1.0),
            obj(2, -4.0, 6.0, 2.0),
            obj(3, 3.0, -9.0, 0.5),
        ];
        let ctx = build_contexts(&objects).unwrap();
        let params = MatchParams::default();
        let m = coarse_match(&ctx[0], &ctx[0], 4, 4, &params);
        // every true neighbor pair present on the diagonal
        for k in 1..4 {
            assert!(m.get(k, k), "missing diagonal entry {k}");
        }
    }

    #[test]
    fn coarse_match_all_gaps_beyond_sigma2() {
        // neighbor radii differ by far more than sigma2 and directions differ
        // beyond sigma1, so nothing survives
        let a = vec![obj(0, 0.0, 0.0, 0.0), obj(1, 5.0, 0.0, 0.0)];
        let b = vec![obj(2, 0.0, 0.0, 0.0), obj(3, 0.0, 50.0, 0.0)];
        let ca = build_contexts(&a).unwrap();
        let cb = build_contexts(&b).unwrap();
        let params = MatchParams::default();
        let m = coarse_match(&ca[0], &cb[0], 2, 2, &params);
        assert_eq!(m.card(), 0);
    }

    /// Hand-built 5-object scene with one non-co-visible object per side:
    /// exactly the three true neighbor pairs survive the gates.
    #[test]
    fn coarse_match_five_object_scene() {
        // Shared objects 0..4 (world frame). Index 4 of the ego view is an
        // ego-only object; index 4 of the coop view is coop-only, with a
        // radius and direction (from center 0) far from everything else.
        let shared = vec![
            obj(0, 0.0, 0.0, 0.3),
            obj(1, 10.0, 2.0, 1.2),
            obj(2, -6.0, 7.0, 2.0),
            obj(3, 4.0, -11.0, 5.0),
        ];
        let mut ego_objects = shared.clone();
        ego_objects.push(obj(10, 25.0, 25.0, 0.0));
        let mut coop_objects = shared;
        coop_objects.push(obj(20, -12.0, -5.0, 0.0));

        let ce = build_contexts(&ego_objects).unwrap();
        let cc = build_contexts(&coop_objects).unwrap();
        let params = MatchParams::default();
        let m = coarse_match(&ce[0], &cc[0], 5, 5, &params);

        let mut expected = CorrespondenceMatrix::zeros(5, 5, Stage::Local);
        expected.set(1, 1, true);
        expected.set(2, 2, true);
        expected.set(3, 3, true);
        assert_eq!(m.entries(), expected.entries());
    }

    #[test]
    fn consensus_noise_free_keeps_everything() {
        let objects = vec![
            obj(0, 0.0, 0.0, 0.1),
            obj(1, 9.0, 1.0, 1.0),
            obj(2, -5.0, 7.0, 2.0),
            obj(3, 2.0, -8.0, 0.5),
            obj(4, -11.0, -4.0, 3.0),
        ];
        let ctx = build_contexts(&objects).unwrap();
        let params = MatchParams::default();
        let local = LocalMatrices::build(&ctx, &ctx, &params);
        let filtered = global_consensus(&local, &params);
        for i in 0..5 {
            let l = local.get(i, i);
            let f = &filtered[i * 5 + i];
            assert_eq!(
                l.entries(),
                f.entries(),
                "true center {i} lost entries to consensus"
            );
        }
    }

    #[test]
    fn consensus_rejects_lone_endorsement() {
        // Construct local matrices directly. L_00 holds entries (1,1) and
        // (2,2); the matrix of center pair (1,1) endorses (2,2), but nothing
        // endorses (1,1), so (1,1) is left with only its own vote and dies.
        let params = MatchParams::default();
        let mut local = LocalMatrices {
            n_ego: 3,
            n_coop: 3,
            mats: vec![CorrespondenceMatrix::zeros(3, 3, Stage::Local); 9],
        };
        local.mats[0].set(1, 1, true);
        local.mats[0].set(2, 2, true);
        local.mats[4].set(2, 2, true); // L_11 endorses (2,2)
        let filtered = global_consensus(&local, &params);
        assert!(!filtered[0].get(1, 1), "lone entry must not survive");
        assert!(filtered[0].get(2, 2), "endorsed entry must survive");
    }

    #[test]
    fn consensus_empty_stays_empty() {
        let params = MatchParams::default();
        let local = LocalMatrices {
            n_ego: 2,
            n_coop: 2,
            mats: vec![CorrespondenceMatrix::zeros(2, 2, Stage::Local); 4],
        };
        let filtered = global_consensus(&local, &params);
        assert!(filtered.iter().all(|m| m.card() == 0));
    }

    #[test]
    fn prune_keeps_permutation() {
        let mut m = CorrespondenceMatrix::zeros(3, 3, Stage::Filtered);
        m.set(0, 1, true);
        m.set(1, 0, true);
        m.set(2, 2, true);
        let p = prune_one_to_many(&m);
        assert_eq!(p.entries(), m.entries());
    }

    #[test]
    fn prune_zeroes_double_rows() {
        let mut m = CorrespondenceMatrix::zeros(2, 3, Stage::Filtered);
        m.set(0, 0, true);
        m.set(0, 1, true);
        m.set(1, 2, true);
        let p = prune_one_to_many(&m);
        assert_eq!(p.entries(), vec![(1, 2)]);
    }

    #[test]
    fn select_best_prefers_cardinality_then_residual() {
        let objects = vec![
            obj(0, 0.0, 0.0, 0.0),
            obj(1, 7.0, 0.0, 0.0),
            obj(2, 0.0, 9.0, 0.0),
        ];
        let ctx = build_contexts(&objects).unwrap();
        let params = MatchParams::default();

        let mut a = CorrespondenceMatrix::zeros(3, 3, Stage::Pruned);
        a.set(1, 1, true);
        let mut b = CorrespondenceMatrix::zeros(3, 3, Stage::Pruned);
        b.set(1, 1, true);
        b.set(2, 2, true);
        let mut mats = vec![CorrespondenceMatrix::zeros(3, 3, Stage::Pruned); 9];
        mats[0] = a; // center (0,0)
        mats[4] = b; // center (1,1)
        let ms = select_best(&mats, &ctx, &ctx, &params);
        assert_eq!(ms.anchor, Some((1, 1)));
        assert_eq!(ms.support, 2);
        assert_eq!(ms.pairs, vec![(1, 1), (2, 2)]);
    }

    #[test]
    fn select_best_breaks_card_ties_on_length_residual() {
        // two centers with equal support; the context of center 1 matches the
        // coop columns exactly while center 0's differ in length, so the
        // winner is (1, 1) by the smaller summed length distance
        let ego_objects = vec![
            obj(0, 0.0, 0.0, 0.0),
            obj(1, 100.0, 0.0, 0.0),
            obj(2, 7.0, 0.0, 0.0),
            obj(3, 0.0, 9.0, 0.0),
        ];
        let mut coop_objects = ego_objects.clone();
        // move the coop twin of object 0 so its context columns change length
        coop_objects[0] = obj(0, 0.6, 0.0, 0.0);
        let ce = build_contexts(&ego_objects).unwrap();
        let cc = build_contexts(&coop_objects).unwrap();
        let params = MatchParams::default();

        let mut a = CorrespondenceMatrix::zeros(4, 4, Stage::Pruned);
        a.set(2, 2, true);
        a.set(3, 3, true);
        let b = a.clone();
        let mut mats = vec![CorrespondenceMatrix::zeros(4, 4, Stage::Pruned); 16];
        mats[0] = a; // center (0,0): columns differ by the 0.6 m shift
        mats[5] = b; // center (1,1): identical contexts, zero residual
        let ms = select_best(&mats, &ce, &cc, &params);
        assert_eq!(ms.anchor, Some((1, 1)));

        // with equal residuals the lexicographically smaller center wins
        let ms = select_best(&mats, &ce, &ce, &params);
        assert_eq!(ms.anchor, Some((0, 0)));
    }

    #[test]
    fn select_best_empty_matrices() {
        let objects = vec![obj(0, 0.0, 0.0, 0.0), obj(1, 7.0, 0.0, 0.0)];
        let ctx = build_contexts(&objects).unwrap();
        let params = MatchParams::default();
        let mats = vec![CorrespondenceMatrix::zeros(2, 2, Stage::Pruned); 4];
        let ms = select_best(&mats, &ctx, &ctx, &params);
        assert!(ms.is_empty());
        assert_eq!(ms.anchor, None);
    }

    #[test]
    fn associate_identical_sets_recovers_identity() {
        let objects: Vec<ObjectBox> = (0..10)
            .map(|k| {
                let a = k as f64 * 0.61;
                obj(
                    k,
                    20.0 * a.cos() * (1.0 + 0.07 * k as f64),
                    17.0 * a.sin() + k as f64,
                    a,
                )
            })
            .collect();
        let ego = set(objects.clone());
        let coop = set(objects);
        let ms = associate(&ego, &coop, &MatchParams::default()).unwrap();
        let expected: Vec<(usize, usize)> = (0..10).map(|k| (k, k)).collect();
        assert_eq!(ms.pairs, expected);
    }

    #[test]
    fn associate_rejects_tiny_sets() {
        let ego = set(vec![obj(0, 0.0, 0.0, 0.0), obj(1, 5.0, 0.0, 0.0)]);
        let coop = set(vec![
            obj(0, 0.0, 0.0, 0.0),
            obj(1, 5.0, 0.0, 0.0),
            obj(2, 0.0, 5.0, 0.0),
        ]);
        match associate(&ego, &coop, &MatchParams::default()) {
            Err(MatchError::InsufficientContext {
                side: "ego",
                objects: 2,
            }) => {}
            other => panic!("expected insufficient-context error, got {other:?}"),
        }
    }

    #[test]
    fn associate_output_is_partial_injection() {
        let objects: Vec<ObjectBox> = (0..8)
            .map(|k| {
                obj(
                    k,
                    (k as f64 * 13.7) % 29.0 - 14.0,
                    (k as f64 * 7.3) % 23.0 - 11.0,
                    k as f64,
                )
            })
            .collect();
        let mut coop_objects = objects.clone();
        coop_objects.rotate_left(3);
        let ms = associate(&set(objects), &set(coop_objects), &MatchParams::default()).unwrap();
        let mut rows: Vec<usize> = ms.pairs.iter().map(|p| p.0).collect();
        let mut cols: Vec<usize> = ms.pairs.iter().map(|p| p.1).collect();
        rows.sort_unstable();
        cols.sort_unstable();
        rows.dedup();
        cols.dedup();
        assert_eq!(rows.len(), ms.pairs.len());
        assert_eq!(cols.len(), ms.pairs.len());
    }

    #[test]
    fn flipped_center_heading_does_not_break_matching() {
        // same physical scene, but the coop view measures one heading flipped
        // by pi (a detector front/back confusion)
        let objects: Vec<ObjectBox> = (0..6)
            .map(|k| {
                obj(
                    k,
                    (k as f64 * 11.3) % 31.0 - 15.0,
                    (k as f64 * 17.9) % 27.0 - 13.0,
                    k as f64 * 0.9,
                )
            })
            .collect();
        let mut coop_objects = objects.clone();
        coop_objects[2].pose = Pose2::new(
            coop_objects[2].pose.position,
            coop_objects[2].pose.heading + PI,
        );
        let ms = associate(&set(objects), &set(coop_objects), &MatchParams::default()).unwrap();
        let expected: Vec<(usize, usize)> = (0..6).map(|k| (k, k)).collect();
        assert_eq!(ms.pairs, expected);
    }
}
