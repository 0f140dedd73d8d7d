//! Synthetic scenario generation and the corruption protocol of the
//! experiments: co-visible sampling, perception noise, heading flips and
//! localization offsets.
//!
//! Randomness comes from a seeded ChaCha8 stream. Frame k of a suite uses the
//! base seed with stream id k, so frames are independent, reproducible across
//! platforms and freely parallelizable. Within a frame the draw order is
//! fixed: scene placement, agent poses, co-visible split, ego view noise,
//! coop view noise, coop localization offset.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::DetectionSet;
use crate::error::SimError;
use crate::geometry::{
    relative_transform_from_poses, BoxDims, ObjectBox, Pose2, RigidTransform2, Vec2,
};

/// Car-like dimension ranges (length, width, height) in meters.
const LENGTH_RANGE: (f64, f64) = (3.8, 5.2);
const WIDTH_RANGE: (f64, f64) = (1.6, 2.1);
const HEIGHT_RANGE: (f64, f64) = (1.4, 1.8);

/// Placement attempts per object before generation fails.
const PLACEMENT_TRIES: usize = 1000;

/// How the cooperative agent's pose measurement deviates from its truth.
/// The perturbation composes on the body-frame side, so a fixed offset moves
/// the transformed detections by exactly that offset regardless of where the
/// agents sit in the world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LocOffsetMode {
    Fixed { dx: f64, dy: f64, dtheta: f64 },
    Gaussian { sigma_p_l: f64, sigma_theta_l: f64 },
}

impl LocOffsetMode {
    pub fn none() -> Self {
        LocOffsetMode::Fixed {
            dx: 0.0,
            dy: 0.0,
            dtheta: 0.0,
        }
    }
}

/// Noise configuration of one synthetic suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Perception position noise std per axis, meters.
    pub sigma_p: f64,
    /// Perception heading noise std, radians.
    pub sigma_theta: f64,
    /// Probability of flipping a detected heading by pi.
    pub flip_prob: f64,
    pub loc_offset_mode: LocOffsetMode,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma_p: 0.3,
            sigma_theta: 10f64.to_radians(),
            flip_prob: 0.5,
            loc_offset_mode: LocOffsetMode::Fixed {
                dx: 3.0,
                dy: 3.0,
                dtheta: 5f64.to_radians(),
            },
            seed: 7,
        }
    }
}

/// Scene-shape parameters of one synthetic suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneParams {
    pub n_objects: usize,
    /// Scene extent (width, height) in meters, centered on the origin.
    pub area: (f64, f64),
    /// Minimum pairwise center distance between objects, meters.
    pub min_gap: f64,
    /// Co-visible rate: fraction of objects detected by both agents.
    pub eta: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            n_objects: 30,
            area: (100.0, 100.0),
            min_gap: 4.0,
            eta: 0.6,
        }
    }
}

/// One generated frame: ground truth plus both corrupted views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFrame {
    /// All objects in the world frame, noise free. Object ids equal their
    /// index in this list.
    pub ground_truth: Vec<ObjectBox>,
    pub ego_truth_pose: Pose2,
    pub coop_truth_pose: Pose2,
    pub ego_view: DetectionSet,
    pub coop_view: DetectionSet,
    /// True correspondences as (ego view index, coop view index).
    pub covisible_truth: Vec<(usize, usize)>,
    /// The true inter-agent transform.
    pub t_true: RigidTransform2,
}

impl ScenarioFrame {
    /// Ground-truth world box behind a view object (ids index ground truth).
    pub fn truth_of(&self, view_object: &ObjectBox) -> &ObjectBox {
        &self.ground_truth[view_object.id as usize]
    }

    /// Ground-truth world boxes for every object of the ego view, in view order.
    pub fn ego_truth_boxes(&self) -> Vec<ObjectBox> {
        self.ego_view
            .objects
            .iter()
            .map(|o| *self.truth_of(o))
            .collect()
    }

    /// Ground-truth world boxes for every object of the coop view, in view order.
    pub fn coop_truth_boxes(&self) -> Vec<ObjectBox> {
        self.coop_view
            .objects
            .iter()
            .map(|o| *self.truth_of(o))
            .collect()
    }
}

/// One zero-mean Gaussian draw via Box-Muller. Lives here so every module
/// shares the exact same sampling scheme.
pub fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    // u1 in (0, 1] avoids ln(0)
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniformly places `n` car-like boxes with pairwise center distance at least
/// `min_gap`, uniform headings and car-like dimensions.
pub fn generate_scene<R: Rng + ?Sized>(
    n: usize,
    area: (f64, f64),
    min_gap: f64,
    rng: &mut R,
) -> Result<Vec<ObjectBox>, SimError> {
    let (w, h) = area;
    let mut boxes: Vec<ObjectBox> = Vec::with_capacity(n);
    for id in 0..n {
        let mut placed = false;
        for _ in 0..PLACEMENT_TRIES {
            let p = Vec2::new(
                rng.gen_range(-w / 2.0..=w / 2.0),
                rng.gen_range(-h / 2.0..=h / 2.0),
            );
            if boxes.iter().all(|b| (b.position() - p).norm() >= min_gap) {
                let heading = rng.gen_range(0.0..std::f64::consts::TAU);
                let length = rng.gen_range(LENGTH_RANGE.0..=LENGTH_RANGE.1);
                let width = rng.gen_range(WIDTH_RANGE.0..=WIDTH_RANGE.1);
                let height = rng.gen_range(HEIGHT_RANGE.0..=HEIGHT_RANGE.1);
                boxes.push(ObjectBox::new(
                    id as u64,
                    Pose2::new(p, heading),
                    BoxDims::new(height, width, length),
                    1.0,
                ));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SimError::PlacementFailed {
                requested: n,
                placed: boxes.len(),
                min_gap,
                width: w,
                height: h,
            });
        }
    }
    Ok(boxes)
}

/// Result of sampling the co-visible set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CovisibleSplit {
    /// Scene indices visible to the ego agent, ascending.
    pub ego_indices: Vec<usize>,
    /// Scene indices visible to the cooperative agent, ascending.
    pub coop_indices: Vec<usize>,
    /// Scene indices visible to both, ascending.
    pub covisible_indices: Vec<usize>,
}

/// Samples the co-visible object set: card(covisible) = round(eta * n), the
/// remaining objects split evenly between the agents with an odd remainder
/// going to the ego side.
pub fn split_covisible<R: Rng + ?Sized>(
    scene: &[ObjectBox],
    eta: f64,
    rng: &mut R,
) -> CovisibleSplit {
    let n = scene.len();
    let n_covis = ((eta * n as f64).round() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    // Fisher-Yates, spelled out so the draw sequence is pinned by this crate
    // rather than by the rand crate's shuffle implementation.
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let covisible: Vec<usize> = order[..n_covis].to_vec();
    let rest = &order[n_covis..];
    let ego_only = rest.len().div_ceil(2);
    let mut ego_indices: Vec<usize> = covisible
        .iter()
        .copied()
        .chain(rest[..ego_only].iter().copied())
        .collect();
    let mut coop_indices: Vec<usize> = covisible
        .iter()
        .copied()
        .chain(rest[ego_only..].iter().copied())
        .collect();
    let mut covisible_indices = covisible;
    ego_indices.sort_unstable();
    coop_indices.sort_unstable();
    covisible_indices.sort_unstable();
    CovisibleSplit {
        ego_indices,
        coop_indices,
        covisible_indices,
    }
}

/// Re-expresses the given world-frame objects in the agent body frame, then
/// applies perception noise: iid Gaussian position noise per axis, Gaussian
/// heading noise, and a heading flip by pi with the configured probability.
/// The set's pose measurement is the truth pose perturbed per the offset
/// mode, composed on the body-frame side.
pub fn corrupt_view<R: Rng + ?Sized>(
    objects: &[ObjectBox],
    agent_id: u64,
    agent_truth_pose: &Pose2,
    cfg: &NoiseConfig,
    rng: &mut R,
) -> DetectionSet {
    let world_to_body = agent_truth_pose.to_world_transform().invert();
    let mut detections = Vec::with_capacity(objects.len());
    for obj in objects {
        let body = world_to_body.apply_pose(&obj.pose);
        let dx = sample_gaussian(rng, cfg.sigma_p);
        let dy = sample_gaussian(rng, cfg.sigma_p);
        let dtheta = sample_gaussian(rng, cfg.sigma_theta);
        let flip = if cfg.flip_prob > 0.0 && rng.gen::<f64>() < cfg.flip_prob {
            std::f64::consts::PI
        } else {
            0.0
        };
        let pose = Pose2::new(
            body.position + Vec2::new(dx, dy),
            body.heading + dtheta + flip,
        );
        detections.push(ObjectBox::new(obj.id, pose, obj.dims, obj.score));
    }

    let offset = match cfg.loc_offset_mode {
        LocOffsetMode::Fixed { dx, dy, dtheta } => RigidTransform2::new(dtheta, Vec2::new(dx, dy)),
        LocOffsetMode::Gaussian {
            sigma_p_l,
            sigma_theta_l,
        } => {
            let dx = sample_gaussian(rng, sigma_p_l);
            let dy = sample_gaussian(rng, sigma_p_l);
            let dtheta = sample_gaussian(rng, sigma_theta_l);
            RigidTransform2::new(dtheta, Vec2::new(dx, dy))
        }
    };
    let measured_world = agent_truth_pose.to_world_transform().compose(&offset);
    let pose_measurement = Pose2::new(measured_world.translation(), measured_world.rotation());

    DetectionSet::new(agent_id, pose_measurement, detections)
}

/// Generates one complete frame from the base seed and the frame index
/// (the ChaCha stream id).
pub fn generate_frame(
    scene: &SceneParams,
    noise: &NoiseConfig,
    frame_index: u64,
) -> Result<ScenarioFrame, SimError> {
    if !(0.0..=1.0).contains(&scene.eta) {
        return Err(SimError::InvalidParameter {
            name: "eta",
            message: format!("{} not in [0, 1]", scene.eta),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(frame_index);

    let ground_truth = generate_scene(scene.n_objects, scene.area, scene.min_gap, &mut rng)?;

    let (w, h) = scene.area;
    let agent_pose = |rng: &mut ChaCha8Rng| {
        Pose2::new(
            Vec2::new(
                rng.gen_range(-w / 2.0..=w / 2.0),
                rng.gen_range(-h / 2.0..=h / 2.0),
            ),
            rng.gen_range(0.0..std::f64::consts::TAU),
        )
    };
    let ego_truth_pose = agent_pose(&mut rng);
    let coop_truth_pose = agent_pose(&mut rng);

    let split = split_covisible(&ground_truth, scene.eta, &mut rng);

    let ego_objects: Vec<ObjectBox> = split.ego_indices.iter().map(|&s| ground_truth[s]).collect();
    let coop_objects: Vec<ObjectBox> = split
        .coop_indices
        .iter()
        .map(|&s| ground_truth[s])
        .collect();

    // the localization offset applies to the cooperative agent only; the ego
    // agent is the reference frame
    let ego_cfg = NoiseConfig {
        loc_offset_mode: LocOffsetMode::none(),
        ..*noise
    };
    let ego_view = corrupt_view(&ego_objects, 0, &ego_truth_pose, &ego_cfg, &mut rng);
    let coop_view = corrupt_view(&coop_objects, 1, &coop_truth_pose, noise, &mut rng);

    let covisible_truth = split
        .covisible_indices
        .iter()
        .map(|s| {
            let ei = split
                .ego_indices
                .binary_search(s)
                .expect("covisible in ego view");
            let ci = split
                .coop_indices
                .binary_search(s)
                .expect("covisible in coop view");
            (ei, ci)
        })
        .collect();

    let t_true = relative_transform_from_poses(&ego_truth_pose, &coop_truth_pose);

    Ok(ScenarioFrame {
        ground_truth,
        ego_truth_pose,
        coop_truth_pose,
        ego_view,
        coop_view,
        covisible_truth,
        t_true,
    })
}
