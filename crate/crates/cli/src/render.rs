//! The `render` command: synthetic scene description to image file.

use std::path::Path;

use anyhow::Context;
use chromanorm_core::scene::{render_scene, SceneSpec};

use crate::io::{save_mask, save_rgb, BitDepth};

/// Render `scene` to `out`; with `encode_gamma` the file holds sRGB codes.
/// Returns the number of clamped pixels.
pub fn render_to_file(
    scene: &Path,
    out: &Path,
    encode_gamma: bool,
    truth: Option<&Path>,
) -> anyhow::Result<usize> {
    let text = std::fs::read_to_string(scene)
        .with_context(|| format!("cannot read {}", scene.display()))?;
    let spec: SceneSpec =
        serde_json::from_str(&text).with_context(|| format!("bad scene {}", scene.display()))?;
    let rendered = render_scene(&spec)?;
    let clamped = save_rgb(&rendered.image, out, encode_gamma, BitDepth::Sixteen)?;
    if let Some(t) = truth {
        save_mask(&rendered.light_boundary(), t)?;
    }
    Ok(clamped)
}
