//! Property tests over the geometry, context, matcher and metric invariants.

use proptest::prelude::*;

use cbm_core::*;

fn arb_vec2(span: f64) -> impl Strategy<Value = Vec2> {
    (-span..span, -span..span).prop_map(|(x, y)| Vec2::new(x, y))
}

fn arb_transform() -> impl Strategy<Value = RigidTransform2> {
    ((-6.4..6.4), arb_vec2(50.0)).prop_map(|(r, t)| RigidTransform2::new(r, t))
}

fn arb_box(id_base: u64) -> impl Strategy<Value = ObjectBox> {
    (arb_vec2(40.0), 0.0..std::f64::consts::TAU, 0u64..1000).prop_map(move |(p, h, id)| {
        ObjectBox::new(
            id_base + id,
            Pose2::new(p, h),
            BoxDims::new(1.5, 1.8, 4.5),
            1.0,
        )
    })
}

proptest! {
    #[test]
    fn compose_is_associative(a in arb_transform(), b in arb_transform(), c in arb_transform(), p in arb_vec2(30.0)) {
        let left = a.compose(&b).compose(&c).apply(p);
        let right = a.compose(&b.compose(&c)).apply(p);
        prop_assert!((left - right).norm() < 1e-12);
    }

    #[test]
    fn identity_is_two_sided_unit(t in arb_transform(), p in arb_vec2(30.0)) {
        let id = RigidTransform2::identity();
        prop_assert!((id.compose(&t).apply(p) - t.apply(p)).norm() < 1e-12);
        prop_assert!((t.compose(&id).apply(p) - t.apply(p)).norm() < 1e-12);
        prop_assert!((t.compose(&t.invert()).apply(p) - p).norm() < 1e-12);
    }

    #[test]
    fn apply_preserves_distances(t in arb_transform(), p in arb_vec2(30.0), q in arb_vec2(30.0)) {
        let moved = (t.apply(p) - t.apply(q)).norm();
        prop_assert!((moved - (p - q).norm()).abs() < 1e-9);
    }

    #[test]
    fn wrap_angle_is_idempotent_and_congruent(a in -50.0..50.0f64) {
        let w = wrap_angle(a);
        prop_assert!(w > -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
        prop_assert!((wrap_angle(w) - w).abs() < 1e-12);
        let k = ((a - w) / std::f64::consts::TAU).round();
        prop_assert!((a - w - k * std::f64::consts::TAU).abs() < 1e-9);
    }

    #[test]
    fn rotation_matrix_is_special_orthogonal(t in arb_transform()) {
        let m = t.rotation_matrix();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        prop_assert!((det - 1.0).abs() < 1e-12);
        let dot = m[0][0] * m[0][1] + m[1][0] * m[1][1];
        prop_assert!(dot.abs() < 1e-12);
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in arb_box(0), b in arb_box(2000)) {
        let ab = rotated_box_iou(&a, &b);
        let ba = rotated_box_iou(&b, &a);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!((rotated_box_iou(&a, &a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn context_counts_and_rigid_invariance(
        boxes in proptest::collection::vec(arb_box(0), 3..9),
        g in arb_transform(),
    ) {
        // make ids unique so the scene is a valid detection list
        let scene: Vec<ObjectBox> = boxes
            .iter()
            .enumerate()
            .map(|(k, b)| ObjectBox::new(k as u64, b.pose, b.dims, b.score))
            .collect();
        let n = scene.len();
        let moved: Vec<ObjectBox> =
            scene.iter().map(|o| ObjectBox::new(o.id, g.apply_pose(&o.pose), o.dims, o.score)).collect();
        let before = build_contexts(&scene).unwrap();
        let after = build_contexts(&moved).unwrap();
        for (ca, cb) in before.iter().zip(after.iter()) {
            prop_assert_eq!(ca.columns.len(), n - 1);
            for (u, v) in ca.columns.iter().zip(cb.columns.iter()) {
                prop_assert!((*u - *v).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn similarity_gates_fold_direction(u in arb_vec2(30.0), v in arb_vec2(30.0), s1 in 0.1..1.0f64, s2 in 0.5..3.0f64) {
        prop_assume!(u.norm() > 1e-6 && v.norm() > 1e-6);
        let a1 = angular_similarity(u, v, s1);
        let a2 = angular_similarity(u, -v, s1);
        prop_assert!((a1 - a2).abs() < 1e-9);
        let l1 = length_similarity(u, v, s2);
        let l2 = length_similarity(-u, v, s2);
        prop_assert!((l1 - l2).abs() < 1e-12);
    }

    #[test]
    fn prune_output_is_injective(entries in proptest::collection::vec((0usize..8, 0usize..8), 0..20)) {
        let mut m = CorrespondenceMatrix::zeros(8, 8, cbm_core::matcher::Stage::Filtered);
        for (r, c) in entries {
            m.set(r, c, true);
        }
        let p = prune_one_to_many(&m);
        for r in 0..8 {
            prop_assert!(p.row_sum(r) <= 1);
        }
        for c in 0..8 {
            prop_assert!(p.col_sum(c) <= 1);
        }
        // surviving entries existed before
        for (r, c) in p.entries() {
            prop_assert!(m.get(r, c));
        }
    }

    #[test]
    fn metric_ranges(
        pairs in proptest::collection::vec((0usize..10, 0usize..10), 0..10),
        truth in proptest::collection::vec((0usize..10, 0usize..10), 0..10),
        t1 in arb_transform(),
        t2 in arb_transform(),
    ) {
        let ms = MatchSet { pairs: pairs.clone(), anchor: None, support: pairs.len() };
        let (p, r) = association_pr(&ms, &truth);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!((0.0..=180.0).contains(&rre(&t1, &t2)));
        prop_assert!(rte(&t1, &t2) >= 0.0);
        prop_assert!((rre(&t1, &t2) - rre(&t2, &t1)).abs() < 1e-9);
        prop_assert!((rte(&t1, &t2) - rte(&t2, &t1)).abs() < 1e-12);
    }
}

#[test]
fn fuse_output_is_subset_of_inputs() {
    // keep the strategy small: a deterministic grid plus jitter is enough
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let ego: Vec<ObjectBox> = (0..8)
            .map(|k| {
                ObjectBox::new(
                    k,
                    Pose2::xyh(
                        rng.gen_range(-20.0..20.0),
                        rng.gen_range(-20.0..20.0),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    ),
                    BoxDims::new(1.5, 1.8, 4.5),
                    rng.gen_range(0.5..1.0),
                )
            })
            .collect();
        let coop: Vec<ObjectBox> = (8..14)
            .map(|k| {
                ObjectBox::new(
                    k,
                    Pose2::xyh(
                        rng.gen_range(-20.0..20.0),
                        rng.gen_range(-20.0..20.0),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    ),
                    BoxDims::new(1.5, 1.8, 4.5),
                    rng.gen_range(0.5..1.0),
                )
            })
            .collect();
        let fused = fuse(&ego, &coop, &FusionParams::default());
        for f in &fused {
            assert!(
                ego.iter().chain(coop.iter()).any(|b| b == f),
                "box not from inputs"
            );
        }
        assert!(fused.len() <= ego.len() + coop.len());
    }
}
