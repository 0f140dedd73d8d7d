//! Frame-suite persistence and results export.
//!
//! Frame files are line-delimited JSON: a header line carrying the format
//! version followed by one frame per line. Angles are stored in radians and
//! lengths in meters; floats serialize as shortest round-trip decimals so
//! files are byte-identical across platforms. See FORMAT.md for the full
//! field-by-field schema.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::IoFormatError;
use crate::sim::ScenarioFrame;

pub const FRAME_FILE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
}

/// Writes a frame suite: header line, then one frame per line.
pub fn write_frames(frames: &[ScenarioFrame], path: &Path) -> Result<(), IoFormatError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "{}",
        serde_json::to_string(&Header {
            version: FRAME_FILE_VERSION
        })
        .expect("header")
    )?;
    for frame in frames {
        let line = serde_json::to_string(frame).map_err(|e| IoFormatError::Malformed {
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a frame suite back. Malformed records report their file line number
/// and the offending field; a version mismatch is rejected up front.
pub fn read_frames(path: &Path) -> Result<Vec<ScenarioFrame>, IoFormatError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header_line = match lines.next() {
        Some(l) => l?,
        None => return Err(IoFormatError::MissingHeader),
    };
    let header: Header =
        serde_json::from_str(&header_line).map_err(|e| IoFormatError::Malformed {
            line: 1,
            message: e.to_string(),
        })?;
    if header.version != FRAME_FILE_VERSION {
        return Err(IoFormatError::VersionMismatch {
            found: header.version,
            expected: FRAME_FILE_VERSION,
        });
    }
    let mut frames = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: ScenarioFrame =
            serde_json::from_str(&line).map_err(|e| IoFormatError::Malformed {
                line: k + 2,
                message: e.to_string(),
            })?;
        validate_frame(&frame).map_err(|message| IoFormatError::Malformed { line: k + 2, message })?;
        frames.push(frame);
    }
    Ok(frames)
}

/// Structural invariants a frame must satisfy before the pipeline may touch
/// it; violations in hand-authored files would otherwise surface as panics
/// far from their cause.
fn validate_frame(frame: &ScenarioFrame) -> Result<(), String> {
    let n = frame.ground_truth.len();
    for (k, obj) in frame.ground_truth.iter().enumerate() {
        if obj.id as usize != k {
            return Err(format!("ground_truth[{k}]: id {} must equal its index", obj.id));
        }
    }
    for (name, view) in [("ego_view", &frame.ego_view), ("coop_view", &frame.coop_view)] {
        let mut seen = std::collections::HashSet::new();
        for obj in &view.objects {
            if obj.id as usize >= n {
                return Err(format!("{name}: object id {} outside ground_truth (len {n})", obj.id));
            }
            if !seen.insert(obj.id) {
                return Err(format!("{name}: duplicate object id {}", obj.id));
            }
        }
    }
    for &(ei, ci) in &frame.covisible_truth {
        if ei >= frame.ego_view.objects.len() || ci >= frame.coop_view.objects.len() {
            return Err(format!(
                "covisible_truth: pair ({ei}, {ci}) outside views ({} x {})",
                frame.ego_view.objects.len(),
                frame.coop_view.objects.len()
            ));
        }
        if frame.ego_view.objects[ei].id != frame.coop_view.objects[ci].id {
            return Err(format!(
                "covisible_truth: pair ({ei}, {ci}) links different objects ({} vs {})",
                frame.ego_view.objects[ei].id, frame.coop_view.objects[ci].id
            ));
        }
    }
    Ok(())
}

/// One row of the results CSV: one frame evaluated by one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub method: String,
    /// Per-frame RNG stream id within the base seed.
    pub seed: u64,
    pub eta: f64,
    pub sigma_p: f64,
    pub sigma_theta: f64,
    pub sigma_p_l: f64,
    pub sigma_theta_l: f64,
    pub precision: f64,
    pub recall: f64,
    /// Mean matched ground-truth distance; 0.0 when nothing was matched.
    pub ad_m: f64,
    pub rre_deg: f64,
    pub rte_m: f64,
    pub map_07: f64,
    pub runtime_ms: f64,
}

pub const RESULTS_HEADER: &str = "method,seed,eta,sigma_p,sigma_theta,sigma_p_L,sigma_theta_L,precision,recall,ad_m,rre_deg,rte_m,map_07,runtime_ms";

/// Renders result rows as CSV text with the fixed header.
pub fn results_to_csv(rows: &[MetricRecord]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.method,
            r.seed,
            r.eta,
            r.sigma_p,
            r.sigma_theta,
            r.sigma_p_l,
            r.sigma_theta_l,
            r.precision,
            r.recall,
            r.ad_m,
            r.rre_deg,
            r.rte_m,
            r.map_07,
            r.runtime_ms
        ));
    }
    out
}

/// Writes result rows to a CSV file with the fixed header.
pub fn export_results(rows: &[MetricRecord], path: &Path) -> Result<(), IoFormatError> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(results_to_csv(rows).as_bytes())?;
    out.flush()?;
    Ok(())
}
