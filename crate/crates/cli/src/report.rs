//! Per-image `report.json`, entropy-profile exports and the batch summary.

use std::path::Path;

use chromanorm_core::cii::EntropyProfile;
use chromanorm_core::pipeline::PipelineOutput;
use chromanorm_core::recover::SolverStats;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::io::{write_atomic, IoError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warnings {
    /// Pixels clamped when writing the recovered image.
    pub clamped_recovered: usize,
    /// Pixels with no usable chromaticity, written as the fill value.
    pub invalid_chromaticity: usize,
    pub nmf_not_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightSummary {
    pub pixels: usize,
    pub threshold: Option<f64>,
    pub nmf_iterations: Option<usize>,
    pub reconstruction_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSummary {
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub entropy_min_nats: f64,
    pub entropy_max_nats: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSolve {
    pub channel: String,
    #[serde(flatten)]
    pub stats: SolverStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub schema_version: u32,
    /// The only field that changes between identical runs.
    pub timestamp: String,
    pub input: String,
    pub width: usize,
    pub height: usize,
    pub highlight: HighlightSummary,
    pub angles: AngleSummary,
    pub edge_pixels: usize,
    pub solver: Vec<ChannelSolve>,
    pub warnings: Warnings,
    pub parameters: PipelineConfig,
}

pub fn timestamp_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl ImageReport {
    pub fn new(
        input: &Path,
        out: &PipelineOutput,
        warnings: Warnings,
        parameters: PipelineConfig,
    ) -> Self {
        let (width, height) = out.cii.cii.dims();
        let profile = &out.cii.profile;
        let fact = out.highlight.factorization.as_ref();
        Self {
            schema_version: SCHEMA_VERSION,
            timestamp: timestamp_now(),
            input: input.display().to_string(),
            width,
            height,
            highlight: HighlightSummary {
                pixels: out.highlight.mask.count(),
                threshold: out.highlight.threshold,
                nmf_iterations: fact.map(|f| f.iterations),
                reconstruction_error: fact.map(|f| f.reconstruction_error),
            },
            angles: AngleSummary {
                theta_min_deg: profile.theta_min.to_degrees(),
                theta_max_deg: profile.theta_max.to_degrees(),
                entropy_min_nats: profile.min_entropy(),
                entropy_max_nats: profile.max_entropy(),
            },
            edge_pixels: out.edges.mask.count(),
            solver: ["r", "g", "b"]
                .iter()
                .zip(out.recovery.stats.iter())
                .map(|(c, s)| ChannelSolve {
                    channel: c.to_string(),
                    stats: *s,
                })
                .collect(),
            warnings,
            parameters,
        }
    }
}

/// Entropy profile export with angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileExport {
    pub theta_deg: Vec<f64>,
    pub entropy_nats: Vec<f64>,
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
}

impl From<&EntropyProfile> for ProfileExport {
    fn from(p: &EntropyProfile) -> Self {
        Self {
            theta_deg: p.thetas.iter().map(|t| t.to_degrees()).collect(),
            entropy_nats: p.entropies.clone(),
            theta_min_deg: p.theta_min.to_degrees(),
            theta_max_deg: p.theta_max.to_degrees(),
        }
    }
}

pub fn profile_csv(p: &EntropyProfile) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["theta_deg", "entropy_nats"])?;
    for (t, e) in p.thetas.iter().zip(&p.entropies) {
        w.write_record([t.to_degrees().to_string(), e.to_string()])?;
    }
    Ok(w.into_inner()?)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FileOutcome {
    Ok { input: String, output_dir: String },
    Failed { input: String, error: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchReport {
    pub schema_version: u32,
    pub timestamp: String,
    pub succeeded: usize,
    pub failed: usize,
    pub files: Vec<FileOutcome>,
}
