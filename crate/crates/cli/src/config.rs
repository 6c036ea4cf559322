//! Batch configuration: JSON file first, command-line flags on top.

use std::path::{Path, PathBuf};

use chromanorm_core::cii::{CiiParams, RobustMean};
use chromanorm_core::edge::EdgeDetectParams;
use chromanorm_core::highlight::NmfParams;
use chromanorm_core::pipeline::PipelineParams;
use chromanorm_core::recover::RecoverParams;
use serde::{Deserialize, Serialize};

/// Which artifacts `normalize` writes. The report is always written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    #[default]
    All,
    Cii,
    Recovered,
    /// Everything in `all` plus the raw field, entropy profile and gradient maps.
    Debug,
}

impl Emit {
    pub fn highlight(self) -> bool {
        matches!(self, Emit::All | Emit::Debug)
    }
    pub fn cii(self) -> bool {
        !matches!(self, Emit::Recovered)
    }
    pub fn edges(self) -> bool {
        matches!(self, Emit::All | Emit::Debug)
    }
    pub fn recovered(self) -> bool {
        !matches!(self, Emit::Cii)
    }
    pub fn debug(self) -> bool {
        self == Emit::Debug
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub emit: Emit,
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    pub decode_gamma: bool,
    pub seed: u64,
    pub sparsity_target: f64,
    pub nmf_max_iters: usize,
    pub nmf_tol: f64,
    pub theta_step_deg: f64,
    pub trim: f64,
    pub exponent: f64,
    pub robust_mean: RobustMean,
    pub tau1: f64,
    pub tau2: f64,
    pub guided_radius: usize,
    pub guided_eps: f64,
    pub dilate_radius: usize,
    pub poisson_tol: f64,
    pub poisson_max_iters: Option<usize>,
    pub log_floor: f64,
    pub brightness_quantile: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let nmf = NmfParams::default();
        let cii = CiiParams::default();
        let edges = EdgeDetectParams::default();
        let rec = RecoverParams::default();
        Self {
            inputs: Vec::new(),
            out: None,
            emit: Emit::All,
            jobs: 0,
            decode_gamma: true,
            seed: nmf.seed,
            sparsity_target: nmf.sparsity_target,
            nmf_max_iters: nmf.max_iters,
            nmf_tol: nmf.tol,
            theta_step_deg: cii.grid_step.to_degrees(),
            trim: cii.trim,
            exponent: cii.exponent,
            robust_mean: cii.robust_mean,
            tau1: edges.tau1,
            tau2: edges.tau2,
            guided_radius: edges.guided_radius,
            guided_eps: edges.guided_eps,
            dilate_radius: edges.dilate_radius,
            poisson_tol: rec.tol,
            poisson_max_iters: rec.max_iters,
            log_floor: rec.floor,
            brightness_quantile: rec.brightness_quantile,
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("bad config {}: {e}", path.display()))
    }

    pub fn params(&self) -> anyhow::Result<PipelineParams> {
        let params = PipelineParams {
            highlight: NmfParams {
                sparsity_target: self.sparsity_target,
                max_iters: self.nmf_max_iters,
                tol: self.nmf_tol,
                seed: self.seed,
            },
            cii: CiiParams {
                grid_step: self.theta_step_deg.to_radians(),
                trim: self.trim,
                exponent: self.exponent,
                robust_mean: self.robust_mean,
            },
            edges: EdgeDetectParams {
                tau1: self.tau1,
                tau2: self.tau2,
                guided_radius: self.guided_radius,
                guided_eps: self.guided_eps,
                dilate_radius: self.dilate_radius,
            },
            recover: RecoverParams {
                tol: self.poisson_tol,
                max_iters: self.poisson_max_iters,
                floor: self.log_floor,
                brightness_quantile: self.brightness_quantile,
            },
        };
        params.validate()?;
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_core() {
        let p = PipelineConfig::default().params().unwrap();
        let d = PipelineParams::default();
        assert_eq!(p.highlight, d.highlight);
        assert_eq!(p.edges, d.edges);
        assert_eq!(p.recover, d.recover);
        assert!((p.cii.grid_step - d.cii.grid_step).abs() < 1e-15);
    }

    #[test]
    fn partial_json_keeps_defaults() {
        let c: PipelineConfig = serde_json::from_str(r#"{"tau1": 0.05, "emit": "cii"}"#).unwrap();
        assert_eq!(c.tau1, 0.05);
        assert_eq!(c.emit, Emit::Cii);
        assert_eq!(c.tau2, PipelineConfig::default().tau2);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"tua1": 1}"#).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let c = PipelineConfig {
            theta_step_deg: 0.0,
            ..Default::default()
        };
        assert!(c.params().is_err());
        let c = PipelineConfig {
            tau1: -1.0,
            ..Default::default()
        };
        assert!(c.params().is_err());
    }
}
