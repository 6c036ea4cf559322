//! Chromaticity-invariant gray image.
//!
//! Points of one surface under varying Planckian light fall on parallel lines
//! in the log-chromaticity plane. Projecting onto the direction perpendicular
//! to those lines collapses each line to a point, which shows up as a minimum
//! of the Shannon entropy of the projected values. The search runs over
//! `[pi/2, pi]` because the line slope is positive for every plausible sensor.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use serde::{Deserialize, Serialize};

use crate::chroma::{compute_chroma_field, LogChromaticityField};
use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayImage, LinearRgbImage};
use crate::stats;

/// Value written where no chromaticity is available.
pub const FILL_VALUE: f64 = 0.5;

/// Minimum number of valid pixels for the angle search.
pub const MIN_SEARCH_PIXELS: usize = 16;

/// How the reference intensity is formed from `mean(chi^m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustMean {
    /// `mean(chi^m)^(1/m)`, a power mean.
    #[default]
    PowerMean,
    /// `mean(chi^m)^m`, the exponent applied twice.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CiiParams {
    /// Angle grid step in radians.
    pub grid_step: f64,
    /// Quantile trimmed from each tail before binning.
    pub trim: f64,
    /// Exponent of the robust mean.
    pub exponent: f64,
    pub robust_mean: RobustMean,
}

impl Default for CiiParams {
    fn default() -> Self {
        Self {
            grid_step: 1f64.to_radians(),
            trim: 0.05,
            exponent: 0.1,
            robust_mean: RobustMean::PowerMean,
        }
    }
}

impl CiiParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0 && self.grid_step <= FRAC_PI_2) {
            return Err(Error::InvalidParameter("grid step must lie in (0, pi/2]"));
        }
        if !(0.0..0.5).contains(&self.trim) {
            return Err(Error::InvalidParameter("trim must lie in [0, 0.5)"));
        }
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return Err(Error::InvalidParameter("exponent must be positive"));
        }
        Ok(())
    }
}

/// Entropy as a function of projection angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub thetas: Vec<f64>,
    pub entropies: Vec<f64>,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl EntropyProfile {
    pub fn min_entropy(&self) -> f64 {
        self.entropies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entropy(&self) -> f64 {
        self.entropies
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Outcome of the Freedman-Diaconis rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinWidth {
    Width(f64),
    /// All values coincide; entropy is zero.
    Degenerate,
}

/// `chi = phi1 cos(theta) + phi2 sin(theta)`; invalid pixels hold 0.
pub fn project_1d(field: &LogChromaticityField, theta: f64) -> GrayImage {
    let (c, s) = (theta.cos(), theta.sin());
    let data = field
        .phi()
        .iter()
        .zip(field.valid().values())
        .map(|(p, &ok)| if ok { p[0] * c + p[1] * s } else { 0.0 })
        .collect();
    GrayImage::new(field.width(), field.height(), data).expect("finite projection")
}

fn valid_projection(field: &LogChromaticityField, theta: f64) -> Vec<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    field.valid_points().map(|p| p[0] * c + p[1] * s).collect()
}

fn fd_bin_width_sorted(sorted: &[f64]) -> Result<BinWidth> {
    let n = sorted.len();
    if n < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            actual: n,
        });
    }
    let iqr = stats::quantile_sorted(sorted, 0.75) - stats::quantile_sorted(sorted, 0.25);
    if iqr > 0.0 {
        return Ok(BinWidth::Width(2.0 * iqr / (n as f64).cbrt()));
    }
    let range = sorted[n - 1] - sorted[0];
    if range > 0.0 {
        Ok(BinWidth::Width(range / (n as f64).sqrt()))
    } else {
        Ok(BinWidth::Degenerate)
    }
}

/// Freedman-Diaconis width `2 IQR / n^(1/3)`, falling back to `range / sqrt(n)`
/// when the interquartile range vanishes.
pub fn fd_bin_width(values: &[f64]) -> Result<BinWidth> {
    fd_bin_width_sorted(&stats::sorted(values))
}

fn entropy_sorted(sorted: &[f64], width: BinWidth) -> f64 {
    let h = match width {
        BinWidth::Width(h) if h > 0.0 && !sorted.is_empty() => h,
        _ => return 0.0,
    };
    let lo = sorted[0];
    let n = sorted.len() as f64;
    // sorted input gives non-decreasing bin indices, so counts are run lengths
    let mut counts = Vec::new();
    let mut current = None;
    for &v in sorted {
        let bin = ((v - lo) / h).floor() as u64;
        if current == Some(bin) {
            *counts.last_mut().unwrap() += 1u64;
        } else {
            counts.push(1);
            current = Some(bin);
        }
    }
    // summing in a canonical order makes equal histograms give equal entropies
    counts.sort_unstable();
    counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Shannon entropy in nats of the histogram with bins of `width` starting at
/// the minimum value.
pub fn shannon_entropy(values: &[f64], width: BinWidth) -> f64 {
    entropy_sorted(&stats::sorted(values), width)
}

fn trimmed(sorted: &[f64], trim: f64) -> &[f64] {
    if trim <= 0.0 {
        return sorted;
    }
    let lo = stats::quantile_sorted(sorted, trim);
    let hi = stats::quantile_sorted(sorted, 1.0 - trim);
    let start = sorted.partition_point(|&v| v < lo);
    let end = sorted.partition_point(|&v| v <= hi);
    &sorted[start..end.max(start)]
}

/// Entropy of the projection at one angle after tail trimming.
pub fn entropy_at(field: &LogChromaticityField, theta: f64, trim: f64) -> f64 {
    let mut chi = valid_projection(field, theta);
    chi.sort_by(f64::total_cmp);
    let kept = trimmed(&chi, trim);
    match fd_bin_width_sorted(kept) {
        Ok(w) => entropy_sorted(kept, w),
        Err(_) => 0.0,
    }
}

/// Angle grid over `[pi/2, pi]` inclusive.
pub fn angle_grid(step: f64) -> Vec<f64> {
    let count = (FRAC_PI_2 / step).round() as usize;
    (0..=count)
        .map(|i| (FRAC_PI_2 + i as f64 * step).min(PI))
        .collect()
}

/// Sweep the angle grid and record entropy minimum and maximum.
///
/// Ties resolve toward the smaller angle for both extremes.
pub fn find_projection_angles(
    field: &LogChromaticityField,
    grid_step: f64,
    trim: f64,
) -> Result<EntropyProfile> {
    let n = field.valid_count();
    if n < MIN_SEARCH_PIXELS {
        return Err(Error::TooFewValidPixels {
            required: MIN_SEARCH_PIXELS,
            actual: n,
        });
    }
    if !(grid_step > 0.0) {
        return Err(Error::InvalidParameter("grid step must be positive"));
    }
    let thetas = angle_grid(grid_step);
    let entropies: Vec<f64> = thetas.iter().map(|&t| entropy_at(field, t, trim)).collect();
    let (mut imin, mut imax) = (0, 0);
    for (i, &e) in entropies.iter().enumerate() {
        if e < entropies[imin] {
            imin = i;
        }
        if e > entropies[imax] {
            imax = i;
        }
    }
    Ok(EntropyProfile {
        theta_min: thetas[imin],
        theta_max: thetas[imax],
        thetas,
        entropies,
    })
}

fn reference_intensity(values: &[f64], m: f64, conv: RobustMean) -> f64 {
    let mean = values.iter().map(|&v| v.powf(m)).sum::<f64>() / values.len() as f64;
    match conv {
        RobustMean::PowerMean => mean.powf(1.0 / m),
        RobustMean::Printed => mean.powf(m),
    }
}

/// Scale a nonnegative image so its robust reference intensity maps to 0.5,
/// clipping the result to `[0, 1]`.
pub fn regularize_intensity(chi: &GrayImage, m: f64, conv: RobustMean) -> Result<GrayImage> {
    if !(m > 0.0) {
        return Err(Error::InvalidParameter("exponent must be positive"));
    }
    if chi.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter("values must be nonnegative"));
    }
    let mu = reference_intensity(chi.values(), m, conv);
    if !(mu > 0.0) {
        return Err(Error::BlankImage);
    }
    chi.map(|v| (v * FILL_VALUE / mu).clamp(0.0, 1.0))
}

/// Gray image at a given angle: project, shift by the 1st percentile of valid
/// values, then regularize. Invalid pixels and images with no chromatic
/// spread take `FILL_VALUE`.
pub fn cii_at_angle(field: &LogChromaticityField, theta: f64, params: &CiiParams) -> GrayImage {
    let (w, h) = field.dims();
    let valid = field.valid().values();
    let chi = project_1d(field, theta);
    let vals = valid_projection(field, theta);
    let shift = stats::quantile(&vals, 0.01);
    let shifted: Vec<f64> = vals.iter().map(|&v| (v - shift).max(0.0)).collect();
    let mu = reference_intensity(&shifted, params.exponent, params.robust_mean);
    let data = chi
        .values()
        .iter()
        .zip(valid)
        .map(|(&v, &ok)| {
            if ok && mu > 0.0 {
                ((v - shift).max(0.0) * FILL_VALUE / mu).clamp(0.0, 1.0)
            } else {
                FILL_VALUE
            }
        })
        .collect();
    GrayImage::new(w, h, data).expect("finite gray values")
}

/// Result of invariant-image generation.
#[derive(Debug, Clone)]
pub struct CiiOutput {
    pub cii: GrayImage,
    pub profile: EntropyProfile,
    pub field: LogChromaticityField,
}

/// Full invariant-image stage with highlight pixels excluded from all
/// chromaticity statistics.
pub fn generate_cii(
    img: &LinearRgbImage,
    highlight: &BinaryMask,
    params: &CiiParams,
) -> Result<CiiOutput> {
    params.validate()?;
    let field = compute_chroma_field(img, highlight)?;
    let profile = find_projection_angles(&field, params.grid_step, params.trim)?;
    let cii = cii_at_angle(&field, profile.theta_min, params);
    Ok(CiiOutput {
        cii,
        profile,
        field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn field_from(points: Vec<[f64; 2]>, w: usize, h: usize) -> LogChromaticityField {
        LogChromaticityField::new(points, BinaryMask::full(w, h)).unwrap()
    }

    #[test]
    fn projection_examples() {
        let f = field_from(vec![[0.0, 0.0]; 4], 2, 2);
        assert!(project_1d(&f, 1.0).values().iter().all(|&v| v == 0.0));

        let f = field_from(vec![[1.0, 2.0], [-3.0, 0.5]], 2, 1);
        assert_eq!(project_1d(&f, 0.0).values(), &[1.0, -3.0]);

        let f = field_from(vec![[1.0, 1.0]], 1, 1);
        assert!(project_1d(&f, 3.0 * PI / 4.0).values()[0].abs() < 1e-15);
    }

    #[test]
    fn fd_examples() {
        // evenly spaced sample of 1000 values with IQR 1.5
        let mut v: Vec<f64> = (0..1000).map(|i| i as f64 * 1.5 / 499.5).collect();
        v.sort_by(f64::total_cmp);
        let iqr = stats::quantile_sorted(&v, 0.75) - stats::quantile_sorted(&v, 0.25);
        assert!((iqr - 1.5).abs() < 1e-12);
        match fd_bin_width(&v).unwrap() {
            BinWidth::Width(h) => assert!((h - 0.3).abs() < 1e-12),
            _ => panic!(),
        }

        assert_eq!(fd_bin_width(&[2.0; 10]).unwrap(), BinWidth::Degenerate);
        assert!(fd_bin_width(&[1.0]).is_err());

        let v: Vec<f64> = (0..8).map(|i| i as f64).collect();
        // linear-interpolation quartiles 1.75 and 5.25, cube root of 8 is 2
        assert_eq!(fd_bin_width(&v).unwrap(), BinWidth::Width(3.5));
    }

    #[test]
    fn fd_falls_back_to_range() {
        let mut v = vec![1.0; 99];
        v.push(2.0);
        assert_eq!(fd_bin_width(&v).unwrap(), BinWidth::Width(0.1));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&[3.0; 7], BinWidth::Degenerate), 0.0);
        let v: Vec<f64> = (0..400).map(|i| (i % 4) as f64).collect();
        assert!((shannon_entropy(&v, BinWidth::Width(1.0)) - 4f64.ln()).abs() < 1e-12);
        let mut v = vec![0.0; 900];
        v.extend(vec![5.0; 100]);
        let oracle = -0.9 * 0.9f64.ln() - 0.1 * 0.1f64.ln();
        assert!((shannon_entropy(&v, BinWidth::Width(1.0)) - oracle).abs() < 1e-12);
        assert!((oracle - 0.3251).abs() < 1e-4);
    }

    #[test]
    fn grid_has_91_samples_at_one_degree() {
        let g = angle_grid(1f64.to_radians());
        assert_eq!(g.len(), 91);
        assert_eq!(g[0], FRAC_PI_2);
        assert!((g[90] - PI).abs() < 1e-12);
    }

    #[test]
    fn regularize_examples() {
        let c = GrayImage::filled(3, 3, 0.37).unwrap();
        let out = regularize_intensity(&c, 0.1, RobustMean::PowerMean).unwrap();
        assert!(out.values().iter().all(|&v| (v - 0.5).abs() < 1e-12));

        let img = GrayImage::from_fn(10, 10, |x, y| 0.05 + 0.01 * (x + y) as f64).unwrap();
        let twice = img.map(|v| 2.0 * v).unwrap();
        let a = regularize_intensity(&img, 0.1, RobustMean::PowerMean).unwrap();
        let b = regularize_intensity(&twice, 0.1, RobustMean::PowerMean).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }

        // 90 % at 0.2, 10 % at 0.9
        let img = GrayImage::from_fn(10, 10, |x, _| if x == 0 { 0.9 } else { 0.2 }).unwrap();
        let mean_pow = 0.9 * 0.2f64.powf(0.1) + 0.1 * 0.9f64.powf(0.1);
        let mu = mean_pow.powf(10.0);
        let out = regularize_intensity(&img, 0.1, RobustMean::PowerMean).unwrap();
        assert!((out.get(1, 0) - 0.2 * 0.5 / mu).abs() < 1e-12);
        assert!((out.get(0, 0) - (0.9 * 0.5 / mu).min(1.0)).abs() < 1e-12);
        let mu_printed = mean_pow.powf(0.1);
        let out = regularize_intensity(&img, 0.1, RobustMean::Printed).unwrap();
        assert!((out.get(1, 0) - 0.2 * 0.5 / mu_printed).abs() < 1e-12);

        let zero = GrayImage::filled(2, 2, 0.0).unwrap();
        assert_eq!(
            regularize_intensity(&zero, 0.1, RobustMean::PowerMean).unwrap_err(),
            Error::BlankImage
        );
    }

    #[test]
    fn constant_field_profile_is_flat() {
        let f = field_from(vec![[0.3, -0.2]; 64], 8, 8);
        let p = find_projection_angles(&f, 1f64.to_radians(), 0.05).unwrap();
        assert!(p.entropies.iter().all(|&e| e == 0.0));
        assert_eq!(p.theta_min, FRAC_PI_2);
        assert_eq!(p.theta_max, FRAC_PI_2);
    }

    #[test]
    fn too_few_pixels_rejected() {
        let f = field_from(vec![[0.0, 0.0]; 9], 3, 3);
        assert!(matches!(
            find_projection_angles(&f, 0.1, 0.05),
            Err(Error::TooFewValidPixels { .. })
        ));
    }

    #[test]
    fn uniform_gray_gives_fill() {
        let img = LinearRgbImage::filled(6, 6, [0.4; 3]).unwrap();
        let out = generate_cii(&img, &BinaryMask::empty(6, 6), &CiiParams::default()).unwrap();
        assert!(out.cii.values().iter().all(|&v| v == FILL_VALUE));
    }
}
