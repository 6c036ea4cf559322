//! The `normalize` batch command.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use chromanorm_core::pipeline::{run_pipeline, PipelineParams};
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::io::{
    field_bytes, is_image_path, load_image, save_gray, save_mask, save_rgb, write_atomic, BitDepth,
};
use crate::report::{
    profile_csv, timestamp_now, write_json, BatchReport, FileOutcome, ImageReport, ProfileExport,
    Warnings, SCHEMA_VERSION,
};

/// Expand directories into their image files, sorted by name.
pub fn expand_inputs(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("cannot list {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && is_image_path(f))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// One output directory per input, named after the file stem.
fn output_dirs(inputs: &[PathBuf], out: &Path) -> Vec<PathBuf> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    inputs
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "image".into());
            let n = seen.entry(stem.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                out.join(stem)
            } else {
                out.join(format!("{stem}_{n}"))
            }
        })
        .collect()
}

pub fn process_one(
    input: &Path,
    dir: &Path,
    config: &PipelineConfig,
    params: &PipelineParams,
) -> anyhow::Result<ImageReport> {
    let img = load_image(input, config.decode_gamma)?;
    let out =
        run_pipeline(&img, params).with_context(|| format!("processing {}", input.display()))?;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let emit = config.emit;
    let mut warnings = Warnings {
        invalid_chromaticity: out
            .cii
            .field
            .valid()
            .values()
            .iter()
            .filter(|v| !**v)
            .count(),
        nmf_not_converged: out
            .highlight
            .factorization
            .as_ref()
            .is_some_and(|f| !f.converged),
        ..Default::default()
    };
    if emit.highlight() {
        save_mask(&out.highlight.mask, &dir.join("highlight_mask.png"))?;
    }
    if emit.cii() {
        save_gray(&out.cii.cii, &dir.join("cii.png"), false, BitDepth::Sixteen)?;
    }
    if emit.edges() {
        save_mask(&out.edges.mask, &dir.join("edge_mask.png"))?;
    }
    if emit.recovered() {
        warnings.clamped_recovered = save_rgb(
            &out.recovery.image,
            &dir.join("recovered.png"),
            config.decode_gamma,
            BitDepth::Sixteen,
        )?;
    }
    if emit.debug() {
        write_atomic(&dir.join("field.bin"), &field_bytes(&out.cii.field))?;
        write_json(
            &ProfileExport::from(&out.cii.profile),
            &dir.join("entropy_profile.json"),
        )?;
        write_atomic(
            &dir.join("entropy_profile.csv"),
            &profile_csv(&out.cii.profile)?,
        )?;
        let peak =
            |g: &chromanorm_core::image::GrayImage| g.values().iter().cloned().fold(0.0, f64::max);
        let scale = peak(&out.edges.grad_min)
            .max(peak(&out.edges.grad_max))
            .max(f64::MIN_POSITIVE);
        save_gray(
            &out.edges.grad_min.map(|v| v / scale)?,
            &dir.join("grad_min.png"),
            false,
            BitDepth::Sixteen,
        )?;
        save_gray(
            &out.edges.grad_max.map(|v| v / scale)?,
            &dir.join("grad_max.png"),
            false,
            BitDepth::Sixteen,
        )?;
    }
    let mut echo = config.clone();
    echo.inputs.clear();
    echo.out = None;
    echo.jobs = 0;
    let report = ImageReport::new(input, &out, warnings, echo);
    write_json(&report, &dir.join("report.json"))?;
    Ok(report)
}

/// Process every input; failures are collected rather than aborting the batch.
pub fn run_batch(config: &PipelineConfig) -> anyhow::Result<BatchReport> {
    let params = config.params()?;
    let out = config.out.as_deref().context("no output directory given")?;
    let inputs = expand_inputs(&config.inputs)?;
    if inputs.is_empty() {
        anyhow::bail!("no input images");
    }
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let dirs = output_dirs(&inputs, out);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("cannot start worker pool")?;
    let files: Vec<FileOutcome> = pool.install(|| {
        inputs
            .par_iter()
            .zip(dirs.par_iter())
            .map(|(input, dir)| {
                let start = Instant::now();
                match process_one(input, dir, config, &params) {
                    Ok(r) => {
                        eprintln!(
                            "ok   {} ({:.2}s, theta {:.1} deg, {} edge px)",
                            input.display(),
                            start.elapsed().as_secs_f64(),
                            r.angles.theta_min_deg,
                            r.edge_pixels
                        );
                        FileOutcome::Ok {
                            input: input.display().to_string(),
                            output_dir: dir.display().to_string(),
                        }
                    }
                    Err(e) => {
                        eprintln!("FAIL {}: {e:#}", input.display());
                        FileOutcome::Failed {
                            input: input.display().to_string(),
                            error: format!("{e:#}"),
                        }
                    }
                }
            })
            .collect()
    });
    let failed = files
        .iter()
        .filter(|f| matches!(f, FileOutcome::Failed { .. }))
        .count();
    let batch = BatchReport {
        schema_version: SCHEMA_VERSION,
        timestamp: timestamp_now(),
        succeeded: files.len() - failed,
        failed,
        files,
    };
    write_json(&batch, &out.join("batch_report.json"))?;
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_stems_get_suffixes() {
        let inputs = vec![
            PathBuf::from("a/x.png"),
            PathBuf::from("b/x.png"),
            PathBuf::from("y.ppm"),
        ];
        let dirs = output_dirs(&inputs, Path::new("out"));
        assert_eq!(dirs[0], Path::new("out/x"));
        assert_eq!(dirs[1], Path::new("out/x_2"));
        assert_eq!(dirs[2], Path::new("out/y"));
    }
}
