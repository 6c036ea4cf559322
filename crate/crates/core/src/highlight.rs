//! Specular highlight detection by sparse non-negative factorization.
//!
//! Each pixel is modelled as a non-negative mix of one diffuse colour and one
//! specular colour, `V = W H` with `W` 3x2 and `H` 2xN. The coefficient row of
//! one component is held at a prescribed Hoyer sparsity (unit L2 norm, fixed
//! L1 norm) so that it can only explain a small part of the image. The other
//! row is updated with Lee-Seung multiplicative steps, as is `W`.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, LinearRgbImage};
use crate::stats;

pub const DEFAULT_SEED: u64 = 0x5eed_2016;

/// Relative per-channel variance below which an image is treated as uniform.
const UNIFORM_FLOOR: f64 = 1e-12;
/// Variance floor of the RMS-normalized specular row.
const SPECULAR_VARIANCE_FLOOR: f64 = 1e-6;
const MAX_STEP_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmfParams {
    /// Hoyer sparsity imposed on the constrained coefficient row, in (0, 1).
    pub sparsity_target: f64,
    pub max_iters: usize,
    /// Relative objective change that counts as converged.
    pub tol: f64,
    pub seed: u64,
}

impl Default for NmfParams {
    fn default() -> Self {
        Self {
            sparsity_target: 0.8,
            max_iters: 500,
            tol: 1e-6,
            seed: DEFAULT_SEED,
        }
    }
}

impl NmfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sparsity_target > 0.0 && self.sparsity_target < 1.0) {
            return Err(Error::InvalidParameter(
                "sparsity target must lie in (0, 1)",
            ));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter(
                "factorization tolerance must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Diffuse/specular factorization of the pixel matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectanceFactorization {
    /// Columns of the 3x2 basis: `[diffuse, specular]`.
    pub basis: [[f64; 3]; 2],
    /// Rows `k_d` and `k_s`, each of unit L2 norm.
    pub coefficients: [Vec<f64>; 2],
    /// `||V - W H||_F / ||V||_F`.
    pub reconstruction_error: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Half squared Frobenius residual after each iteration, in the
    /// normalized units the solver works in. The first entry is the
    /// initial objective.
    pub objective_history: Vec<f64>,
}

impl ReflectanceFactorization {
    pub fn diffuse(&self) -> &[f64] {
        &self.coefficients[0]
    }

    pub fn specular(&self) -> &[f64] {
        &self.coefficients[1]
    }
}

/// Hoyer sparsity `(sqrt(n) - L1/L2) / (sqrt(n) - 1)`; 0 for dense, 1 for one-hot.
pub fn hoyer_sparsity(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    let l2 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if l2 == 0.0 || n <= 1.0 {
        return 0.0;
    }
    (n.sqrt() - l1 / l2) / (n.sqrt() - 1.0)
}

/// L1 norm of a unit-L2 vector of length `n` with the given sparsity.
fn target_l1(n: usize, sparsity: f64) -> f64 {
    let rn = (n as f64).sqrt();
    rn - sparsity * (rn - 1.0)
}

/// Closest non-negative vector (Euclidean) with the given L1 and L2 norms.
pub fn project_sparse(s: &[f64], l1: f64, l2: f64) -> Vec<f64> {
    let n = s.len();
    let k2 = l2 * l2;
    let sum: f64 = s.iter().sum();
    let mut v: Vec<f64> = s.iter().map(|x| x + (l1 - sum) / n as f64).collect();
    let mut zero = vec![false; n];
    for _ in 0..n + 1 {
        let nz = zero.iter().filter(|&&z| !z).count();
        if nz == 0 {
            break;
        }
        let mid = l1 / nz as f64;
        let mut a = 0.0;
        let mut b = 0.0;
        let mut c = 0.0;
        for i in 0..n {
            let w = if zero[i] { 0.0 } else { v[i] - mid };
            a += w * w;
            b += 2.0 * w * v[i];
            c += v[i] * v[i];
        }
        c -= k2;
        if a <= f64::MIN_POSITIVE {
            break;
        }
        let disc = (b * b - 4.0 * a * c).max(0.0);
        let alpha = (-b + disc.sqrt()) / (2.0 * a);
        for i in 0..n {
            if !zero[i] {
                v[i] += alpha * (v[i] - mid);
            }
        }
        if v.iter().all(|&x| x >= 0.0) {
            break;
        }
        for i in 0..n {
            if v[i] <= 0.0 {
                zero[i] = true;
                v[i] = 0.0;
            }
        }
        let nz = zero.iter().filter(|&&z| !z).count();
        if nz == 0 {
            break;
        }
        let tsum: f64 = v.iter().sum();
        let shift = (l1 - tsum) / nz as f64;
        for i in 0..n {
            if !zero[i] {
                v[i] += shift;
            }
        }
    }
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    v
}

struct Model<'a> {
    v: &'a [[f64; 3]],
    w: [[f64; 3]; 2],
    h: [Vec<f64>; 2],
}

impl Model<'_> {
    fn objective_with(&self, w: &[[f64; 3]; 2], h0: &[f64], h1: &[f64]) -> f64 {
        let mut f = 0.0;
        for (x, col) in self.v.iter().enumerate() {
            for c in 0..3 {
                let r = w[0][c] * h0[x] + w[1][c] * h1[x] - col[c];
                f += r * r;
            }
        }
        0.5 * f
    }

    fn objective(&self) -> f64 {
        self.objective_with(&self.w, &self.h[0], &self.h[1])
    }

    /// Projected gradient step on the sparse row with backtracking, so the
    /// objective never increases.
    fn sparse_step(&mut self, step: &mut f64, l1: f64, current: f64) -> f64 {
        let n = self.v.len();
        let w = self.w;
        let mut grad = vec![0.0; n];
        for (x, col) in self.v.iter().enumerate() {
            let mut g = 0.0;
            for c in 0..3 {
                let r = w[0][c] * self.h[0][x] + w[1][c] * self.h[1][x] - col[c];
                g += w[1][c] * r;
            }
            grad[x] = g;
        }
        for _ in 0..MAX_STEP_HALVINGS {
            let moved: Vec<f64> = self.h[1]
                .iter()
                .zip(&grad)
                .map(|(h, g)| h - *step * g)
                .collect();
            let candidate = project_sparse(&moved, l1, 1.0);
            let f = self.objective_with(&w, &self.h[0], &candidate);
            if f <= current {
                self.h[1] = candidate;
                *step *= 1.2;
                return f;
            }
            *step *= 0.5;
        }
        current
    }

    fn diffuse_step(&mut self) {
        let w = self.w;
        for (x, col) in self.v.iter().enumerate() {
            let mut num = 0.0;
            let mut den = 0.0;
            for c in 0..3 {
                num += w[0][c] * col[c];
                den += w[0][c] * (w[0][c] * self.h[0][x] + w[1][c] * self.h[1][x]);
            }
            if den > 0.0 {
                self.h[0][x] *= num / den;
            }
        }
        let norm = self.h[0].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            self.h[0].iter_mut().for_each(|v| *v /= norm);
            self.w[0].iter_mut().for_each(|v| *v *= norm);
        }
    }

    fn basis_step(&mut self) {
        // V H^T and W (H H^T), both 3x2
        let mut vht = [[0.0; 3]; 2];
        let mut hht = [[0.0; 2]; 2];
        for (x, col) in self.v.iter().enumerate() {
            let hx = [self.h[0][x], self.h[1][x]];
            for k in 0..2 {
                for c in 0..3 {
                    vht[k][c] += col[c] * hx[k];
                }
                for j in 0..2 {
                    hht[k][j] += hx[k] * hx[j];
                }
            }
        }
        let w = self.w;
        for k in 0..2 {
            for c in 0..3 {
                let den = w[0][c] * hht[0][k] + w[1][c] * hht[1][k];
                if den > 0.0 {
                    self.w[k][c] = w[k][c] * vht[k][c] / den;
                }
            }
        }
    }
}

/// Factorize the 3xN pixel matrix `V` (given as columns) into diffuse and
/// specular parts.
pub fn nmf_sparse(v: &[[f64; 3]], params: &NmfParams) -> Result<ReflectanceFactorization> {
    let n = v.len();
    if n < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            actual: n,
        });
    }
    params.validate()?;
    if v.iter().flatten().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "factorization input must be non-negative",
        ));
    }
    let scale = v.iter().flatten().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    // normalizing by the maximum makes the result independent of exposure
    let normalized: Vec<[f64; 3]> = v
        .iter()
        .map(|c| [c[0] / scale, c[1] / scale, c[2] / scale])
        .collect();
    let v_norm = normalized
        .iter()
        .flatten()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w = [[0.0; 3]; 2];
    for col in w.iter_mut() {
        for e in col.iter_mut() {
            *e = rng.random::<f64>();
        }
    }
    let mut h0: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let h1: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let norm0 = h0.iter().map(|x| x * x).sum::<f64>().sqrt();
    h0.iter_mut().for_each(|x| *x /= norm0);
    let l1 = target_l1(n, params.sparsity_target);
    let h1 = project_sparse(&h1, l1, 1.0);

    let mut model = Model {
        v: &normalized,
        w,
        h: [h0, h1],
    };
    let mut history = vec![model.objective()];
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..params.max_iters {
        iterations += 1;
        let before = *history.last().unwrap();
        model.sparse_step(&mut step, l1, before);
        model.diffuse_step();
        model.basis_step();
        let f = model.objective();
        history.push(f);
        if f == 0.0 || (before - f).abs() <= params.tol * before {
            converged = true;
            break;
        }
    }

    let residual = (2.0 * history.last().unwrap()).sqrt() / v_norm;
    let Model { w, h, .. } = model;
    let [h0, h1] = h;
    let mut basis = [
        [w[0][0] * scale, w[0][1] * scale, w[0][2] * scale],
        [w[1][0] * scale, w[1][1] * scale, w[1][2] * scale],
    ];
    let mut coefficients = [h0, h1];
    if hoyer_sparsity(&coefficients[0]) > hoyer_sparsity(&coefficients[1]) {
        basis.swap(0, 1);
        coefficients.swap(0, 1);
    }
    Ok(ReflectanceFactorization {
        basis,
        coefficients,
        reconstruction_error: residual,
        converged,
        iterations,
        objective_history: history,
    })
}

/// Highlight mask together with the factorization it came from.
#[derive(Debug, Clone)]
pub struct HighlightDetection {
    pub mask: BinaryMask,
    /// Absent when the image was uniform and factorization was skipped.
    pub factorization: Option<ReflectanceFactorization>,
    /// Otsu threshold on the specular row, when one was applied.
    pub threshold: Option<f64>,
}

fn is_uniform(img: &LinearRgbImage) -> bool {
    (0..3).all(|c| {
        let ch: Vec<f64> = img.pixels().iter().map(|p| p[c]).collect();
        let m = stats::mean(&ch);
        stats::variance(&ch) <= UNIFORM_FLOOR * m.max(f64::MIN_POSITIVE) * m
    })
}

/// Pixels whose specular coefficient exceeds the Otsu threshold of the
/// specular row. Uniform images and flat specular rows give an empty mask.
pub fn detect_highlight(img: &LinearRgbImage, params: &NmfParams) -> Result<HighlightDetection> {
    let (w, h) = img.dims();
    if img.max_value() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    if is_uniform(img) {
        return Ok(HighlightDetection {
            mask: BinaryMask::empty(w, h),
            factorization: None,
            threshold: None,
        });
    }
    let fact = nmf_sparse(img.pixels(), params)?;
    let ks = fact.specular();
    let rms = (ks.len() as f64).sqrt();
    let scaled: Vec<f64> = ks.iter().map(|v| v * rms).collect();
    if stats::variance(&scaled) < SPECULAR_VARIANCE_FLOOR {
        return Ok(HighlightDetection {
            mask: BinaryMask::empty(w, h),
            factorization: Some(fact),
            threshold: None,
        });
    }
    let Some(t) = stats::otsu_threshold(ks) else {
        return Ok(HighlightDetection {
            mask: BinaryMask::empty(w, h),
            factorization: Some(fact),
            threshold: None,
        });
    };
    let mask = BinaryMask::new(w, h, ks.iter().map(|&v| v > t).collect())?;
    Ok(HighlightDetection {
        mask,
        factorization: Some(fact),
        threshold: Some(t),
    })
}
