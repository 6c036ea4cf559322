//! Texture descriptors for identity matching: uniform LBP and LPQ histograms,
//! chi-square distance and nearest-neighbour identification.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{SMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const LBP_BINS: usize = 59;
pub const LPQ_BINS: usize = 256;

const LBP_POINTS: usize = 8;
const LBP_RADIUS: f64 = 2.0;
const LPQ_WINDOW: usize = 5;
const LPQ_RHO: f64 = 0.9;
const LPQ_ALPHA: f64 = 1.0 / LPQ_WINDOW as f64;
/// Both operators need a 5x5 footprint.
pub const MIN_FEATURE_SIZE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Lbp,
    Lpq,
}

impl FeatureKind {
    pub fn bin_count(self) -> usize {
        match self {
            FeatureKind::Lbp => LBP_BINS,
            FeatureKind::Lpq => LPQ_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHistogram {
    kind: FeatureKind,
    bins: Vec<f64>,
}

impl FeatureHistogram {
    pub fn new(kind: FeatureKind, bins: Vec<f64>) -> Result<Self> {
        if bins.len() != kind.bin_count() {
            return Err(Error::LengthMismatch {
                expected: kind.bin_count(),
                actual: bins.len(),
            });
        }
        if let Some((i, &v)) = bins
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(Error::InvalidPixel { index: i, value: v });
        }
        Ok(Self { kind, bins })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }

    /// Frequencies summing to one; an all-zero histogram is returned as is.
    pub fn normalized(&self) -> Self {
        let t = self.total();
        if t <= 0.0 {
            return self.clone();
        }
        Self {
            kind: self.kind,
            bins: self.bins.iter().map(|b| b / t).collect(),
        }
    }
}

fn check_size(gray: &GrayImage) -> Result<()> {
    let (w, h) = gray.dims();
    if w < MIN_FEATURE_SIZE || h < MIN_FEATURE_SIZE {
        return Err(Error::ImageTooSmall {
            min: MIN_FEATURE_SIZE,
            width: w,
            height: h,
        });
    }
    Ok(())
}

/// Number of 0/1 changes around the circular 8-bit pattern.
pub fn lbp_transitions(code: u8) -> u32 {
    (code ^ code.rotate_right(1)).count_ones()
}

/// Maps each 8-bit code to its histogram bin: uniform codes get labels
/// 0..58 in increasing code order, everything else lands in bin 58.
pub fn lbp_uniform_table() -> [u8; 256] {
    let mut table = [(LBP_BINS - 1) as u8; 256];
    let mut next = 0u8;
    for code in 0..=255u8 {
        if lbp_transitions(code) <= 2 {
            table[code as usize] = next;
            next += 1;
        }
    }
    table
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

struct Tap {
    dx: isize,
    dy: isize,
    weight: f64,
}

/// Bilinear taps for each circular sample, relative to the centre pixel.
fn lbp_taps() -> Vec<Vec<Tap>> {
    (0..LBP_POINTS)
        .map(|p| {
            let a = 2.0 * PI * p as f64 / LBP_POINTS as f64;
            let sx = snap(LBP_RADIUS * a.cos());
            let sy = snap(-LBP_RADIUS * a.sin());
            let (x0, y0) = (sx.floor(), sy.floor());
            let (fx, fy) = (sx - x0, sy - y0);
            let mut taps = Vec::new();
            for (ox, wx) in [(0, 1.0 - fx), (1, fx)] {
                for (oy, wy) in [(0, 1.0 - fy), (1, fy)] {
                    let weight = wx * wy;
                    if weight > 0.0 {
                        taps.push(Tap {
                            dx: x0 as isize + ox,
                            dy: y0 as isize + oy,
                            weight,
                        });
                    }
                }
            }
            taps
        })
        .collect()
}

/// Per-pixel 8-bit LBP codes over the interior (pixels at least 2 from the border),
/// row-major with dimensions `(w - 4, h - 4)`.
pub fn lbp_codes(gray: &GrayImage) -> Result<Vec<u8>> {
    check_size(gray)?;
    let (w, h) = gray.dims();
    let v = gray.values();
    let r = LBP_RADIUS as usize;
    let taps = lbp_taps();
    let mut codes = Vec::with_capacity((w - 2 * r) * (h - 2 * r));
    for y in r..h - r {
        for x in r..w - r {
            let c = v[y * w + x];
            let mut code = 0u8;
            for (p, sample) in taps.iter().enumerate() {
                // interpolating differences keeps flat neighbourhoods exactly at zero
                let d: f64 = sample
                    .iter()
                    .map(|t| {
                        let q = (y as isize + t.dy) as usize * w + (x as isize + t.dx) as usize;
                        t.weight * (v[q] - c)
                    })
                    .sum();
                if d >= 0.0 {
                    code |= 1 << p;
                }
            }
            codes.push(code);
        }
    }
    Ok(codes)
}

/// 59-bin uniform LBP histogram of raw counts.
pub fn lbp_uniform_histogram(gray: &GrayImage) -> Result<FeatureHistogram> {
    let table = lbp_uniform_table();
    let mut bins = vec![0.0; LBP_BINS];
    for code in lbp_codes(gray)? {
        bins[table[code as usize] as usize] += 1.0;
    }
    FeatureHistogram::new(FeatureKind::Lbp, bins)
}

type Transform = SMatrix<f64, 8, 25>;

/// Window offsets in row-major order.
fn lpq_offsets() -> [(f64, f64); 25] {
    let half = (LPQ_WINDOW / 2) as isize;
    let mut out = [(0.0, 0.0); 25];
    let mut k = 0;
    for dy in -half..=half {
        for dx in -half..=half {
            out[k] = (dx as f64, dy as f64);
            k += 1;
        }
    }
    out
}

/// Rows: real parts then imaginary parts of the STFT at the four low frequencies.
pub fn lpq_frequency_matrix() -> Transform {
    let freqs = [
        (LPQ_ALPHA, 0.0),
        (0.0, LPQ_ALPHA),
        (LPQ_ALPHA, LPQ_ALPHA),
        (LPQ_ALPHA, -LPQ_ALPHA),
    ];
    let offsets = lpq_offsets();
    let mut m = Transform::zeros();
    for (i, (ux, uy)) in freqs.iter().enumerate() {
        for (j, (dx, dy)) in offsets.iter().enumerate() {
            let phase = -2.0 * PI * (ux * dx + uy * dy);
            m[(i, j)] = phase.cos();
            m[(i + 4, j)] = phase.sin();
        }
    }
    m
}

/// Small distinct diagonal scaling so the decorrelation has no repeated eigenvalues.
pub const LPQ_TIE_BREAK: [f64; 8] = [
    1.000007, 1.000005, 1.000003, 1.000001, 1.000008, 1.000006, 1.000004, 1.000002,
];

/// Covariance of the eight coefficients under the `rho^distance` pixel model.
pub fn lpq_coefficient_covariance() -> SMatrix<f64, 8, 8> {
    let offsets = lpq_offsets();
    let c = SMatrix::<f64, 25, 25>::from_fn(|i, j| {
        let (ex, ey) = (offsets[i].0 - offsets[j].0, offsets[i].1 - offsets[j].1);
        LPQ_RHO.powf((ex * ex + ey * ey).sqrt())
    });
    let m = lpq_frequency_matrix();
    let d = m * c * m.transpose();
    let a = SMatrix::<f64, 8, 8>::from_diagonal(&LPQ_TIE_BREAK.into());
    a * d * a
}

/// Decorrelating basis: eigenvectors in descending eigenvalue order, each
/// signed so its largest-magnitude entry is positive. Columns are eigenvectors.
pub fn lpq_whitening_basis() -> SMatrix<f64, 8, 8> {
    let eig = SymmetricEigen::new(lpq_coefficient_covariance());
    let mut order: [usize; 8] = core::array::from_fn(|i| i);
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut v = SMatrix::<f64, 8, 8>::zeros();
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let lead = col
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            col = -col;
        }
        v.set_column(dst, &col);
    }
    v
}

/// Combined STFT + decorrelation operator applied to an offset-removed window.
pub fn lpq_transform() -> Transform {
    lpq_whitening_basis().transpose() * lpq_frequency_matrix()
}

/// Codewords for every window that fits inside the image (`(w - 4, h - 4)` grid).
pub fn lpq_codes(gray: &GrayImage) -> Result<Vec<u8>> {
    check_size(gray)?;
    let (w, h) = gray.dims();
    let v = gray.values();
    let t = lpq_transform();
    let n = LPQ_WINDOW;
    let mut codes = Vec::with_capacity((w - n + 1) * (h - n + 1));
    let mut window = SMatrix::<f64, 25, 1>::zeros();
    for y in 0..=h - n {
        for x in 0..=w - n {
            for dy in 0..n {
                for dx in 0..n {
                    window[dy * n + dx] = v[(y + dy) * w + x + dx];
                }
            }
            // the frequencies are nonzero so any common offset carries no signal;
            // removing the centre value makes flat windows exactly zero
            let centre = window[n * n / 2];
            window.iter_mut().for_each(|s| *s -= centre);
            let g = t * window;
            let mut code = 0u8;
            for (k, &gk) in g.iter().enumerate() {
                if gk > 0.0 {
                    code |= 1 << k;
                }
            }
            codes.push(code);
        }
    }
    Ok(codes)
}

/// 256-bin normalized LPQ codeword histogram.
pub fn lpq_histogram(gray: &GrayImage) -> Result<FeatureHistogram> {
    let mut bins = vec![0.0; LPQ_BINS];
    for code in lpq_codes(gray)? {
        bins[code as usize] += 1.0;
    }
    Ok(FeatureHistogram::new(FeatureKind::Lpq, bins)?.normalized())
}

pub fn compute_histogram(gray: &GrayImage, kind: FeatureKind) -> Result<FeatureHistogram> {
    match kind {
        FeatureKind::Lbp => lbp_uniform_histogram(gray),
        FeatureKind::Lpq => lpq_histogram(gray),
    }
}

pub fn chi_square(a: &FeatureHistogram, b: &FeatureHistogram) -> Result<f64> {
    if a.kind != b.kind {
        return Err(Error::FeatureKindMismatch);
    }
    Ok(a.bins
        .iter()
        .zip(&b.bins)
        .filter(|(x, y)| **x + **y > 0.0)
        .map(|(x, y)| (x - y) * (x - y) / (x + y))
        .sum())
}

/// Gallery identity with the smallest chi-square distance; the first entry wins ties.
pub fn rank1_identify<'a, I>(
    query: &FeatureHistogram,
    gallery: &'a [(I, FeatureHistogram)],
) -> Result<&'a I> {
    let mut best: Option<(&I, f64)> = None;
    for (id, h) in gallery {
        let d = chi_square(query, h)?;
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((id, d));
        }
    }
    best.map(|(id, _)| id).ok_or(Error::EmptyGallery)
}
