//! Shadow-free colour reconstruction in the gradient domain.
//!
//! Log-RGB gradients that touch a shadow edge are zeroed, the divergence of
//! the remaining field becomes the right-hand side of a Poisson equation, and
//! each channel is integrated back with zero-flux (Neumann) boundaries.
//!
//! The discrete operator is the 5-point Laplacian restricted to neighbours
//! inside the image: `(L u)(p) = sum over in-image neighbours q of u(q) - u(p)`.
//! Border rows therefore have diagonal -3 and corners -2, every row sums to
//! zero, and the constants span the null space. Forward-difference gradients
//! followed by backward-difference divergence reproduce this operator exactly.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, LinearRgbImage};
use crate::stats;

/// Per-pixel natural log of each channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRgbImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl LogRgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("log values must be finite"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.iter().map(|p| p[c]).collect()
    }

    pub fn exp(&self) -> Result<LinearRgbImage> {
        LinearRgbImage::new(
            self.width,
            self.height,
            self.data
                .iter()
                .map(|p| [p[0].exp(), p[1].exp(), p[2].exp()])
                .collect(),
        )
    }
}

pub fn log_rgb(img: &LinearRgbImage, floor: f64) -> Result<LogRgbImage> {
    if !(floor > 0.0) {
        return Err(Error::InvalidParameter("log floor must be positive"));
    }
    LogRgbImage::new(
        img.width(),
        img.height(),
        img.pixels()
            .iter()
            .map(|p| {
                [
                    p[0].max(floor).ln(),
                    p[1].max(floor).ln(),
                    p[2].max(floor).ln(),
                ]
            })
            .collect(),
    )
}

/// Forward-difference gradients per channel. `gx` at the last column and `gy`
/// at the last row are zero (no outward flux).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<[f64; 3]>,
    pub gy: Vec<[f64; 3]>,
}

/// Gradients of `log_img` with every difference touching a mask pixel removed.
pub fn masked_gradients(log_img: &LogRgbImage, mask: &BinaryMask) -> Result<GradientField> {
    mask.check_matches(log_img.dims())?;
    let (w, h) = log_img.dims();
    let l = log_img.pixels();
    let m = mask.values();
    let mut gx = vec![[0.0; 3]; w * h];
    let mut gy = vec![[0.0; 3]; w * h];
    for y in 0..h {
        for x in 0..w {
            let k = y * w + x;
            if x + 1 < w && !m[k] && !m[k + 1] {
                for c in 0..3 {
                    gx[k][c] = l[k + 1][c] - l[k][c];
                }
            }
            if y + 1 < h && !m[k] && !m[k + w] {
                for c in 0..3 {
                    gy[k][c] = l[k + w][c] - l[k][c];
                }
            }
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
    })
}

/// Backward-difference divergence of a gradient field, one vector per channel.
pub fn laplacian_from_gradients(g: &GradientField) -> [Vec<f64>; 3] {
    let (w, h) = (g.width, g.height);
    let mut nu = [vec![0.0; w * h], vec![0.0; w * h], vec![0.0; w * h]];
    for y in 0..h {
        for x in 0..w {
            let k = y * w + x;
            for c in 0..3 {
                let mut v = g.gx[k][c] + g.gy[k][c];
                if x > 0 {
                    v -= g.gx[k - 1][c];
                }
                if y > 0 {
                    v -= g.gy[k - w][c];
                }
                nu[c][k] = v;
            }
        }
    }
    nu
}

/// `out = L u` for the Neumann 5-point operator.
pub fn apply_neumann_laplacian(u: &[f64], width: usize, height: usize, out: &mut [f64]) {
    let (w, h) = (width, height);
    for y in 0..h {
        for x in 0..w {
            let k = y * w + x;
            let c = u[k];
            let mut s = 0.0;
            if x > 0 {
                s += u[k - 1] - c;
            }
            if x + 1 < w {
                s += u[k + 1] - c;
            }
            if y > 0 {
                s += u[k - w] - c;
            }
            if y + 1 < h {
                s += u[k + w] - c;
            }
            out[k] = s;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: usize,
    /// `||L x - nu|| / ||nu||` after mean projection of `nu`.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_mean_zero(v: &mut [f64]) {
    let m = stats::mean(v);
    v.iter_mut().for_each(|x| *x -= m);
}

fn true_residual(x: &[f64], rhs: &[f64], w: usize, h: usize, scratch: &mut [f64]) -> f64 {
    apply_neumann_laplacian(x, w, h, scratch);
    scratch
        .iter()
        .zip(rhs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Solve `L x = nu` for one channel and shift `x` to the requested mean.
///
/// Conjugate gradients on `-L`, which is symmetric positive semidefinite;
/// with a mean-zero right-hand side the Krylov space stays orthogonal to the
/// constant null space.
pub fn solve_poisson_channel(
    nu: &[f64],
    width: usize,
    height: usize,
    mean_target: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, SolverStats)> {
    let n = width * height;
    if nu.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: nu.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("solver tolerance must be positive"));
    }
    let mut rhs = nu.to_vec();
    project_mean_zero(&mut rhs);
    let rhs_norm = dot(&rhs, &rhs).sqrt();
    let mut x = vec![0.0; n];
    let mut iterations = 0;
    let mut scratch = vec![0.0; n];
    let mut relative = 0.0;
    if rhs_norm > 0.0 {
        // residual of -L x = -rhs
        let mut r: Vec<f64> = rhs.iter().map(|v| -v).collect();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(&r, &r);
        let target = tol * rhs_norm;
        loop {
            if rr.sqrt() <= target {
                relative = true_residual(&x, &rhs, width, height, &mut scratch) / rhs_norm;
                if relative <= tol {
                    break;
                }
                // recurrence drifted from the true residual; restart from it
                apply_neumann_laplacian(&x, width, height, &mut scratch);
                for k in 0..n {
                    r[k] = scratch[k] - rhs[k];
                }
                project_mean_zero(&mut r);
                p.copy_from_slice(&r);
                rr = dot(&r, &r);
            }
            if iterations >= max_iters {
                relative = true_residual(&x, &rhs, width, height, &mut scratch) / rhs_norm;
                return Err(Error::NotConverged {
                    iterations,
                    residual: relative,
                });
            }
            apply_neumann_laplacian(&p, width, height, &mut ap);
            ap.iter_mut().for_each(|v| *v = -*v);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                relative = true_residual(&x, &rhs, width, height, &mut scratch) / rhs_norm;
                if relative <= tol {
                    break;
                }
                return Err(Error::NotConverged {
                    iterations,
                    residual: relative,
                });
            }
            let alpha = rr / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for k in 0..n {
                p[k] = r[k] + beta * p[k];
            }
            iterations += 1;
        }
    }
    let shift = mean_target - stats::mean(&x);
    x.iter_mut().for_each(|v| *v += shift);
    Ok((
        x,
        SolverStats {
            iterations,
            relative_residual: relative,
        },
    ))
}

/// Integrate all three channels.
pub fn solve_poisson(
    nu: &[Vec<f64>; 3],
    width: usize,
    height: usize,
    mean_target: [f64; 3],
    tol: f64,
    max_iters: usize,
) -> Result<(LogRgbImage, [SolverStats; 3])> {
    let mut channels: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut stats_out = [SolverStats {
        iterations: 0,
        relative_residual: 0.0,
    }; 3];
    for c in 0..3 {
        let (x, s) = solve_poisson_channel(&nu[c], width, height, mean_target[c], tol, max_iters)?;
        channels[c] = x;
        stats_out[c] = s;
    }
    let data = (0..width * height)
        .map(|k| [channels[0][k], channels[1][k], channels[2][k]])
        .collect();
    Ok((LogRgbImage::new(width, height, data)?, stats_out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoverParams {
    pub tol: f64,
    /// Iteration cap; `None` means ten times the pixel count.
    pub max_iters: Option<usize>,
    pub floor: f64,
    /// Quantile matched between input and output per channel.
    pub brightness_quantile: f64,
}

impl Default for RecoverParams {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: None,
            floor: 1e-3,
            brightness_quantile: 0.995,
        }
    }
}

impl RecoverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("solver tolerance must be positive"));
        }
        if !(self.floor > 0.0) {
            return Err(Error::InvalidParameter("log floor must be positive"));
        }
        if !(0.0..=1.0).contains(&self.brightness_quantile) {
            return Err(Error::InvalidParameter(
                "brightness quantile must lie in [0, 1]",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Recovery {
    pub image: LinearRgbImage,
    pub stats: [SolverStats; 3],
}

/// Rebuild the image from its log gradients with the masked ones removed,
/// then rescale each channel so its bright quantile matches the input's.
pub fn recover_color(
    img: &LinearRgbImage,
    mask: &BinaryMask,
    params: &RecoverParams,
) -> Result<Recovery> {
    mask.check_matches(img.dims())?;
    params.validate()?;
    let (w, h) = img.dims();
    let log_img = log_rgb(img, params.floor)?;
    let grads = masked_gradients(&log_img, mask)?;
    let nu = laplacian_from_gradients(&grads);
    let means = [
        stats::mean(&log_img.channel(0)),
        stats::mean(&log_img.channel(1)),
        stats::mean(&log_img.channel(2)),
    ];
    let max_iters = params.max_iters.unwrap_or(10 * w * h);
    let (solved, solver_stats) = solve_poisson(&nu, w, h, means, params.tol, max_iters)?;
    let raw = solved.exp()?;

    let mut scale = [1.0; 3];
    for (c, s) in scale.iter_mut().enumerate() {
        let target = stats::quantile(&img.channel(c).into_values(), params.brightness_quantile);
        let got = stats::quantile(&raw.channel(c).into_values(), params.brightness_quantile);
        if got > 0.0 {
            *s = target / got;
        }
    }
    let data = raw
        .pixels()
        .iter()
        .map(|p| {
            [
                (p[0] * scale[0]).clamp(0.0, 1.0),
                (p[1] * scale[1]).clamp(0.0, 1.0),
                (p[2] * scale[2]).clamp(0.0, 1.0),
            ]
        })
        .collect();
    Ok(Recovery {
        image: LinearRgbImage::new(w, h, data)?,
        stats: solver_stats,
    })
}
