//! The `match` command: rank-1 identification between two image folders.

use std::path::{Path, PathBuf};

use anyhow::Context;
use chromanorm_core::features::{
    chi_square, compute_histogram, rank1_identify, FeatureHistogram, FeatureKind,
};

use crate::io::{load_image, write_atomic};
use crate::normalize::expand_inputs;

/// Identity label: file name up to the first `_`.
pub fn identity_of(path: &Path) -> anyhow::Result<String> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .with_context(|| format!("{}: file name is not valid UTF-8", path.display()))?;
    match name.split_once('_') {
        Some((id, _)) if !id.is_empty() => Ok(id.to_string()),
        _ => anyhow::bail!("{}: no identity prefix before '_'", path.display()),
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub path: PathBuf,
    pub identity: String,
    pub histogram: FeatureHistogram,
}

fn load_entry(path: &Path, kind: FeatureKind, decode_gamma: bool) -> anyhow::Result<Entry> {
    let identity = identity_of(path)?;
    let img = load_image(path, decode_gamma)?;
    let histogram = compute_histogram(&img.luma(), kind)
        .with_context(|| format!("{}", path.display()))?
        .normalized();
    Ok(Entry {
        path: path.to_path_buf(),
        identity,
        histogram,
    })
}

/// Load every image in `dir`; returns the usable entries and the per-file errors.
pub fn load_folder(
    dir: &Path,
    kind: FeatureKind,
    decode_gamma: bool,
) -> anyhow::Result<(Vec<Entry>, Vec<String>)> {
    let files = expand_inputs(&[dir.to_path_buf()])?;
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for f in files {
        match load_entry(&f, kind, decode_gamma) {
            Ok(e) => entries.push(e),
            Err(e) => errors.push(format!("{e:#}")),
        }
    }
    Ok((entries, errors))
}

#[derive(Debug, Clone)]
pub struct MatchResult {
    pub gallery: Vec<Entry>,
    pub queries: Vec<Entry>,
    /// `distances[q][g]`.
    pub distances: Vec<Vec<f64>>,
    pub predictions: Vec<String>,
    pub errors: Vec<String>,
}

impl MatchResult {
    pub fn accuracy(&self) -> f64 {
        let hits = self
            .queries
            .iter()
            .zip(&self.predictions)
            .filter(|(q, p)| q.identity == **p)
            .count();
        hits as f64 / self.queries.len() as f64
    }

    pub fn distance_csv(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "query".to_string(),
            "identity".to_string(),
            "predicted".to_string(),
        ];
        header.extend(self.gallery.iter().map(|g| file_name(&g.path)));
        w.write_record(&header)?;
        for ((q, row), pred) in self
            .queries
            .iter()
            .zip(&self.distances)
            .zip(&self.predictions)
        {
            let mut rec = vec![file_name(&q.path), q.identity.clone(), pred.clone()];
            rec.extend(row.iter().map(|d| d.to_string()));
            w.write_record(&rec)?;
        }
        Ok(w.into_inner()?)
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Rows of `file, identity, bin...` for every gallery and query entry.
pub fn histogram_csv(entries: &[&Entry]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in entries {
        let mut rec = vec![file_name(&e.path), e.identity.clone()];
        rec.extend(e.histogram.bins().iter().map(|b| b.to_string()));
        w.write_record(&rec)?;
    }
    Ok(w.into_inner()?)
}

pub fn run_match(
    gallery_dir: &Path,
    query_dir: &Path,
    kind: FeatureKind,
    decode_gamma: bool,
) -> anyhow::Result<MatchResult> {
    let (gallery, mut errors) = load_folder(gallery_dir, kind, decode_gamma)?;
    let (queries, q_errors) = load_folder(query_dir, kind, decode_gamma)?;
    errors.extend(q_errors);
    if gallery.is_empty() {
        anyhow::bail!("gallery {} has no usable images", gallery_dir.display());
    }
    if queries.is_empty() {
        anyhow::bail!("query folder {} has no usable images", query_dir.display());
    }
    let labelled: Vec<(String, FeatureHistogram)> = gallery
        .iter()
        .map(|g| (g.identity.clone(), g.histogram.clone()))
        .collect();
    let mut distances = Vec::with_capacity(queries.len());
    let mut predictions = Vec::with_capacity(queries.len());
    for q in &queries {
        let row = gallery
            .iter()
            .map(|g| chi_square(&q.histogram, &g.histogram))
            .collect::<Result<Vec<_>, _>>()?;
        distances.push(row);
        predictions.push(rank1_identify(&q.histogram, &labelled)?.clone());
    }
    Ok(MatchResult {
        gallery,
        queries,
        distances,
        predictions,
        errors,
    })
}

pub fn write_outputs(
    result: &MatchResult,
    out: &Path,
    histograms: Option<&Path>,
) -> anyhow::Result<()> {
    write_atomic(out, &result.distance_csv()?)?;
    if let Some(h) = histograms {
        let all: Vec<&Entry> = result.gallery.iter().chain(&result.queries).collect();
        write_atomic(h, &histogram_csv(&all)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_prefix() {
        assert_eq!(identity_of(Path::new("dir/07_front.png")).unwrap(), "07");
        assert_eq!(identity_of(Path::new("a_b_c.png")).unwrap(), "a");
        assert!(identity_of(Path::new("noprefix.png")).is_err());
        assert!(identity_of(Path::new("_x.png")).is_err());
    }
}
