//! The full chain: highlight mask, invariant image, shadow edges, colour recovery.

use serde::{Deserialize, Serialize};

use crate::cii::{generate_cii, CiiOutput, CiiParams};
use crate::edge::{detect_shadow_edges, EdgeDetectParams, ShadowEdges};
use crate::error::Result;
use crate::highlight::{detect_highlight, HighlightDetection, NmfParams};
use crate::image::{BinaryMask, LinearRgbImage};
use crate::recover::{recover_color, RecoverParams, Recovery};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    pub highlight: NmfParams,
    pub cii: CiiParams,
    pub edges: EdgeDetectParams,
    pub recover: RecoverParams,
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        self.cii.validate()?;
        self.edges.validate()?;
        self.highlight.validate()?;
        self.recover.validate()
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub highlight: HighlightDetection,
    pub cii: CiiOutput,
    pub edges: ShadowEdges,
    pub recovery: Recovery,
}

pub fn run_pipeline(img: &LinearRgbImage, params: &PipelineParams) -> Result<PipelineOutput> {
    params.validate()?;
    let highlight = detect_highlight(img, &params.highlight)?;
    let (cii, edges, recovery) = run_from_highlight(img, &highlight.mask, params)?;
    Ok(PipelineOutput {
        highlight,
        cii,
        edges,
        recovery,
    })
}

/// Everything after highlight detection, with a caller-supplied highlight mask.
pub fn run_from_highlight(
    img: &LinearRgbImage,
    highlight: &BinaryMask,
    params: &PipelineParams,
) -> Result<(CiiOutput, ShadowEdges, Recovery)> {
    let cii = generate_cii(img, highlight, &params.cii)?;
    let edges = detect_shadow_edges(
        &cii.field,
        cii.profile.theta_min,
        cii.profile.theta_max,
        &params.edges,
    )?;
    let recovery = recover_color(img, &edges.mask, &params.recover)?;
    Ok((cii, edges, recovery))
}
