//! Experiment harness: run configuration, suite execution across a worker
//! pool, parameter sweeps, and summary tables.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use cbm_core::io::MetricRecord;
use cbm_core::{
    generate_frame, run_frame, LocOffsetMode, Method, NoiseConfig, PipelineParams, ScenarioFrame,
    SceneParams,
};

/// Every knob of an experiment in one serializable record. A config file may
/// specify any subset of fields; the rest take these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Frames per suite (per sweep setting for sweeps).
    pub n_frames: u64,
    pub scene: SceneParams,
    pub noise: NoiseConfig,
    pub pipeline: PipelineParams,
    /// Methods to run, in output order.
    pub methods: Vec<String>,
    /// Record wall-clock per frame; disable for byte-reproducible output.
    pub record_runtime: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_frames: 200,
            scene: SceneParams::default(),
            noise: NoiseConfig::default(),
            pipeline: PipelineParams::standard(),
            methods: vec!["cbm".to_string()],
            record_runtime: true,
        }
    }
}

impl RunConfig {
    /// Rejects the first invalid field by name.
    pub fn validate(&self) -> Result<(), String> {
        if self.scene.eta < 0.0 || self.scene.eta > 1.0 {
            return Err(format!("eta: {} not in [0, 1]", self.scene.eta));
        }
        if self.scene.area.0 <= 0.0 || self.scene.area.1 <= 0.0 {
            return Err(format!("area: {:?} must be positive", self.scene.area));
        }
        if self.scene.min_gap < 0.0 {
            return Err(format!(
                "min_gap: {} must be non-negative",
                self.scene.min_gap
            ));
        }
        if self.noise.sigma_p < 0.0 {
            return Err(format!(
                "sigma_p: {} must be non-negative",
                self.noise.sigma_p
            ));
        }
        if self.noise.sigma_theta < 0.0 {
            return Err(format!(
                "sigma_theta: {} must be non-negative",
                self.noise.sigma_theta
            ));
        }
        if !(0.0..=1.0).contains(&self.noise.flip_prob) {
            return Err(format!("flip_prob: {} not in [0, 1]", self.noise.flip_prob));
        }
        if let LocOffsetMode::Gaussian {
            sigma_p_l,
            sigma_theta_l,
        } = self.noise.loc_offset_mode
        {
            if sigma_p_l < 0.0 || sigma_theta_l < 0.0 {
                return Err("loc_offset_mode: gaussian stds must be non-negative".to_string());
            }
        }
        let mp = &self.pipeline.match_params;
        if mp.sigma1 <= 0.0 {
            return Err(format!("sigma1: {} must be positive", mp.sigma1));
        }
        if mp.sigma2 <= 0.0 {
            return Err(format!("sigma2: {} must be positive", mp.sigma2));
        }
        if mp.alpha < 0.0 || mp.beta < 0.0 {
            return Err("alpha/beta: must be non-negative".to_string());
        }
        let fit = &self.pipeline.fit_params;
        if fit.scale_schedule.is_empty() {
            return Err("scale_schedule: must not be empty".to_string());
        }
        if fit.scale_schedule.iter().any(|&s| s <= 0.0)
            || fit.scale_schedule.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(format!(
                "scale_schedule: {:?} must be strictly decreasing and positive",
                fit.scale_schedule
            ));
        }
        let fp = &self.pipeline.fusion_params;
        if fp.iou_threshold <= 0.0 || fp.iou_threshold >= 1.0 {
            return Err(format!("iou_threshold: {} not in (0, 1)", fp.iou_threshold));
        }
        if self.methods.is_empty() {
            return Err("methods: must not be empty".to_string());
        }
        for name in &self.methods {
            if Method::parse(name).is_none() {
                return Err(format!(
                    "methods: unknown method {name:?} (known: cbm, cbm_no_consensus, icp, gnss)"
                ));
            }
        }
        Ok(())
    }

    pub fn parsed_methods(&self) -> Vec<Method> {
        self.methods
            .iter()
            .map(|m| Method::parse(m).expect("validated"))
            .collect()
    }

    /// The localization noise levels echoed into result rows.
    fn loc_sigmas(&self) -> (f64, f64) {
        match self.noise.loc_offset_mode {
            LocOffsetMode::Gaussian {
                sigma_p_l,
                sigma_theta_l,
            } => (sigma_p_l, sigma_theta_l),
            LocOffsetMode::Fixed { .. } => (0.0, 0.0),
        }
    }
}

/// Generates the suite a config describes: frame k uses stream k of the
/// configured seed.
pub fn generate_suite(config: &RunConfig) -> Result<Vec<ScenarioFrame>, cbm_core::SimError> {
    (0..config.n_frames)
        .map(|k| generate_frame(&config.scene, &config.noise, k))
        .collect()
}

/// Runs every configured method over the given frames. Frames are dispatched
/// to the rayon worker pool and results are gathered in frame order, methods
/// in config order within a frame, so output is deterministic regardless of
/// worker count. The `seed` column carries each frame's stream id (its index).
pub fn run_methods(config: &RunConfig, frames: &[ScenarioFrame]) -> Vec<MetricRecord> {
    let methods = config.parsed_methods();
    let (sigma_p_l, sigma_theta_l) = config.loc_sigmas();
    frames
        .par_iter()
        .enumerate()
        .map(|(k, frame)| {
            let mut rows = Vec::with_capacity(methods.len());
            for &method in &methods {
                let start = Instant::now();
                let out = run_frame(frame, method, &config.pipeline);
                let runtime_ms = if config.record_runtime {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                rows.push(MetricRecord {
                    method: method.name().to_string(),
                    seed: k as u64,
                    eta: config.scene.eta,
                    sigma_p: config.noise.sigma_p,
                    sigma_theta: config.noise.sigma_theta,
                    sigma_p_l,
                    sigma_theta_l,
                    precision: out.precision,
                    recall: out.recall,
                    ad_m: out.ad_m.unwrap_or(0.0),
                    rre_deg: out.rre_deg,
                    rte_m: out.rte_m,
                    map_07: out.map_07,
                    runtime_ms,
                });
            }
            rows
        })
        .flatten_iter()
        .collect()
}

/// Axes a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Eta,
    SigmaP,
    SigmaTheta,
    SigmaPL,
    SigmaThetaL,
}

impl SweepAxis {
    pub fn parse(name: &str) -> Option<SweepAxis> {
        match name {
            "eta" => Some(SweepAxis::Eta),
            "sigma-p" | "sigma_p" => Some(SweepAxis::SigmaP),
            "sigma-theta" | "sigma_theta" => Some(SweepAxis::SigmaTheta),
            "sigma-p-l" | "sigma_p_l" => Some(SweepAxis::SigmaPL),
            "sigma-theta-l" | "sigma_theta_l" => Some(SweepAxis::SigmaThetaL),
            _ => None,
        }
    }

    pub fn apply(self, config: &RunConfig, value: f64) -> RunConfig {
        let mut out = config.clone();
        match self {
            SweepAxis::Eta => out.scene.eta = value,
            SweepAxis::SigmaP => out.noise.sigma_p = value,
            SweepAxis::SigmaTheta => out.noise.sigma_theta = value,
            SweepAxis::SigmaPL => {
                let sigma_theta_l = match config.noise.loc_offset_mode {
                    LocOffsetMode::Gaussian { sigma_theta_l, .. } => sigma_theta_l,
                    LocOffsetMode::Fixed { .. } => 0.0,
                };
                out.noise.loc_offset_mode = LocOffsetMode::Gaussian {
                    sigma_p_l: value,
                    sigma_theta_l,
                };
            }
            SweepAxis::SigmaThetaL => {
                let sigma_p_l = match config.noise.loc_offset_mode {
                    LocOffsetMode::Gaussian { sigma_p_l, .. } => sigma_p_l,
                    LocOffsetMode::Fixed { .. } => 0.0,
                };
                out.noise.loc_offset_mode = LocOffsetMode::Gaussian {
                    sigma_p_l,
                    sigma_theta_l: value,
                };
            }
        }
        out
    }
}

/// Cross-product sweep: one regenerated suite per value (same base seed
/// stream), all rows in one list, settings in value order.
pub fn run_sweep(
    base: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<MetricRecord>, cbm_core::SimError> {
    let mut rows = Vec::new();
    for &value in values {
        let config = axis.apply(base, value);
        let frames = generate_suite(&config)?;
        rows.extend(run_methods(&config, &frames));
    }
    Ok(rows)
}

/// One aggregate line of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub method: String,
    pub eta: f64,
    pub sigma_p: f64,
    pub sigma_theta: f64,
    pub sigma_p_l: f64,
    pub sigma_theta_l: f64,
    pub frames: usize,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_ad: f64,
    pub median_rre: f64,
    pub median_rte: f64,
    pub mean_map: f64,
    pub mean_runtime_ms: f64,
}

/// Aggregates rows per (method, setting) in first-appearance order: means of
/// precision/recall/mAP/runtime, mean AD over frames with matches, medians of
/// RRE and RTE.
pub fn summarize(rows: &[MetricRecord]) -> Vec<Summary> {
    let key_of = |r: &MetricRecord| {
        (
            r.method.clone(),
            [
                r.eta.to_bits(),
                r.sigma_p.to_bits(),
                r.sigma_theta.to_bits(),
                r.sigma_p_l.to_bits(),
                r.sigma_theta_l.to_bits(),
            ],
        )
    };
    let mut keys: Vec<(String, [u64; 5])> = Vec::new();
    for r in rows {
        let k = key_of(r);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.iter()
        .map(|k| {
            let group: Vec<&MetricRecord> = rows.iter().filter(|r| &key_of(r) == k).collect();
            let mean = |f: fn(&MetricRecord) -> f64| {
                group.iter().map(|r| f(r)).sum::<f64>() / group.len() as f64
            };
            let median = |f: fn(&MetricRecord) -> f64| {
                let mut v: Vec<f64> = group.iter().map(|r| f(r)).collect();
                v.sort_by(|a, b| a.total_cmp(b));
                v[v.len() / 2]
            };
            // frames where something was matched contribute to the distance
            let matched: Vec<f64> = group
                .iter()
                .filter(|r| r.precision > 0.0 || r.ad_m > 0.0)
                .map(|r| r.ad_m)
                .collect();
            let mean_ad = if matched.is_empty() {
                0.0
            } else {
                matched.iter().sum::<f64>() / matched.len() as f64
            };
            let first = group[0];
            Summary {
                method: first.method.clone(),
                eta: first.eta,
                sigma_p: first.sigma_p,
                sigma_theta: first.sigma_theta,
                sigma_p_l: first.sigma_p_l,
                sigma_theta_l: first.sigma_theta_l,
                frames: group.len(),
                mean_precision: mean(|r| r.precision),
                mean_recall: mean(|r| r.recall),
                mean_ad,
                median_rre: median(|r| r.rre_deg),
                median_rte: median(|r| r.rte_m),
                mean_map: mean(|r| r.map_07),
                mean_runtime_ms: mean(|r| r.runtime_ms),
            }
        })
        .collect()
}

/// Renders summaries as an aligned text table.
pub fn summary_table(summaries: &[Summary]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:>5} {:>7} {:>8} {:>8} {:>8} {:>7} {:>7} {:>7} {:>8} {:>8} {:>7} {:>8}\n",
        "method",
        "eta",
        "sig_p",
        "sig_th",
        "sig_pL",
        "sig_thL",
        "frames",
        "prec",
        "recall",
        "AD_m",
        "RRE_deg",
        "RTE_m",
        "mAP@.7"
    ));
    for s in summaries {
        out.push_str(&format!(
            "{:<16} {:>5.2} {:>7.3} {:>8.4} {:>8.3} {:>8.4} {:>7} {:>7.3} {:>7.3} {:>8.3} {:>8.3} {:>7.3} {:>8.3}\n",
            s.method,
            s.eta,
            s.sigma_p,
            s.sigma_theta,
            s.sigma_p_l,
            s.sigma_theta_l,
            s.frames,
            s.mean_precision,
            s.mean_recall,
            s.mean_ad,
            s.median_rre,
            s.median_rte,
            s.mean_map
        ));
    }
    out
}

/// Loads a config file (JSON, any subset of fields) and validates it.
pub fn load_config(path: &Path) -> Result<RunConfig, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| format!("parsing {}: {e}", path.display()))?;
    config.validate()?;
    Ok(config)
}

/// Pretty-prints one frame for inspection.
pub fn describe_frame(frame: &ScenarioFrame, index: usize) -> String {
    let mut out = String::new();
    out.push_str(&format!("frame {index}\n"));
    out.push_str(&format!(
        "  objects: {} total, ego view {}, coop view {}, co-visible {}\n",
        frame.ground_truth.len(),
        frame.ego_view.objects.len(),
        frame.coop_view.objects.len(),
        frame.covisible_truth.len()
    ));
    let pose_line = |name: &str, p: &cbm_core::Pose2| {
        format!(
            "  {name}: ({:.3}, {:.3}) heading {:.4} rad\n",
            p.position.x, p.position.y, p.heading
        )
    };
    out.push_str(&pose_line("ego truth pose ", &frame.ego_truth_pose));
    out.push_str(&pose_line("coop truth pose", &frame.coop_truth_pose));
    out.push_str(&pose_line(
        "ego measured   ",
        &frame.ego_view.pose_measurement,
    ));
    out.push_str(&pose_line(
        "coop measured  ",
        &frame.coop_view.pose_measurement,
    ));
    out.push_str(&format!(
        "  true transform: rotation {:.6} rad, translation ({:.4}, {:.4})\n",
        frame.t_true.rotation(),
        frame.t_true.translation().x,
        frame.t_true.translation().y
    ));
    out.push_str(&format!(
        "  co-visible pairs (ego idx, coop idx): {:?}\n",
        frame.covisible_truth
    ));
    out
}
