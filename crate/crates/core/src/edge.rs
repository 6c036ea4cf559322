//! Shadow-specific edge detection.
//!
//! A shadow boundary is an edge that vanishes in the entropy-minimizing
//! projection and survives in the entropy-maximizing one. Both projections are
//! re-expressed in plane coordinates and smoothed with a guided filter: the
//! invariant pair with a constant guide, the shadow-retaining pair with
//! itself as guide so its edges sharpen rather than blur.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::chroma::LogChromaticityField;
use crate::cii::project_1d;
use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdgeDetectParams {
    /// Upper bound on the invariant-pair gradient.
    pub tau1: f64,
    /// Lower bound on the shadow-retaining-pair gradient.
    pub tau2: f64,
    pub guided_radius: usize,
    pub guided_eps: f64,
    pub dilate_radius: usize,
}

impl Default for EdgeDetectParams {
    fn default() -> Self {
        Self {
            tau1: 0.1,
            tau2: 0.2,
            guided_radius: 3,
            guided_eps: 1e-4,
            dilate_radius: 1,
        }
    }
}

impl EdgeDetectParams {
    pub fn validate(&self) -> Result<()> {
        if self.tau1.is_nan() || self.tau2.is_nan() || self.tau1 < 0.0 || self.tau2 < 0.0 {
            return Err(Error::InvalidParameter("thresholds must be non-negative"));
        }
        if !(self.guided_eps > 0.0) {
            return Err(Error::InvalidParameter(
                "guided filter eps must be positive",
            ));
        }
        Ok(())
    }
}

/// Mean over the `(2r+1)^2` window clipped to the image, via a summed-area table.
pub fn box_mean(img: &GrayImage, radius: usize) -> GrayImage {
    let (w, h) = img.dims();
    let v = img.values();
    let mut sat = vec![0.0; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += v[y * w + x];
            sat[(y + 1) * (w + 1) + x + 1] = sat[y * (w + 1) + x + 1] + row;
        }
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let y0 = y.saturating_sub(radius);
        let y1 = (y + radius + 1).min(h);
        for x in 0..w {
            let x0 = x.saturating_sub(radius);
            let x1 = (x + radius + 1).min(w);
            let s = sat[y1 * (w + 1) + x1] - sat[y0 * (w + 1) + x1] - sat[y1 * (w + 1) + x0]
                + sat[y0 * (w + 1) + x0];
            out.push(s / ((y1 - y0) * (x1 - x0)) as f64);
        }
    }
    GrayImage::new(w, h, out).expect("box mean of finite values")
}

fn zip_map(a: &GrayImage, b: &GrayImage, f: impl Fn(f64, f64) -> f64) -> GrayImage {
    let data = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| f(x, y))
        .collect();
    GrayImage::new(a.width(), a.height(), data).expect("finite values")
}

/// Guided filter: per-window linear model `q = a I + b` of the input `p`
/// in terms of the guide `I`, with coefficients averaged over all windows
/// covering a pixel.
pub fn guided_filter(
    input: &GrayImage,
    guide: &GrayImage,
    radius: usize,
    eps: f64,
) -> Result<GrayImage> {
    if input.dims() != guide.dims() {
        return Err(Error::DimensionMismatch {
            expected: input.dims(),
            actual: guide.dims(),
        });
    }
    let (w, h) = input.dims();
    if radius >= w || radius >= h {
        return Err(Error::RadiusTooLarge {
            radius,
            width: w,
            height: h,
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(
            "guided filter eps must be positive",
        ));
    }
    let mean_i = box_mean(guide, radius);
    let mean_p = box_mean(input, radius);
    let corr_ip = box_mean(&zip_map(guide, input, |i, p| i * p), radius);
    let corr_ii = box_mean(&zip_map(guide, guide, |i, _| i * i), radius);
    let mut a = Vec::with_capacity(w * h);
    let mut b = Vec::with_capacity(w * h);
    for k in 0..w * h {
        let mi = mean_i.values()[k];
        let mp = mean_p.values()[k];
        let var = (corr_ii.values()[k] - mi * mi).max(0.0);
        let cov = corr_ip.values()[k] - mi * mp;
        let ak = cov / (var + eps);
        a.push(ak);
        b.push(mp - ak * mi);
    }
    let mean_a = box_mean(&GrayImage::new(w, h, a)?, radius);
    let mean_b = box_mean(&GrayImage::new(w, h, b)?, radius);
    let data = (0..w * h)
        .map(|k| mean_a.values()[k] * guide.values()[k] + mean_b.values()[k])
        .collect();
    GrayImage::new(w, h, data)
}

/// The 1D projection at `theta` written back in plane coordinates:
/// `(chi cos(theta), chi sin(theta))`.
pub fn reproject_2d(field: &LogChromaticityField, theta: f64) -> (GrayImage, GrayImage) {
    reproject_values(&project_1d(field, theta), theta)
}

fn reproject_values(chi: &GrayImage, theta: f64) -> (GrayImage, GrayImage) {
    let (c, s) = (theta.cos(), theta.sin());
    (
        chi.map(|v| v * c).expect("finite"),
        chi.map(|v| v * s).expect("finite"),
    )
}

/// Replace invalid pixels by the mean of valid pixels in the smallest
/// surrounding window that contains any, so masked holes add no edges.
pub fn fill_invalid(values: &GrayImage, valid: &BinaryMask) -> GrayImage {
    let (w, h) = values.dims();
    if valid.count() == w * h || valid.count() == 0 {
        return values.clone();
    }
    let weights = GrayImage::new(
        w,
        h,
        valid
            .values()
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect(),
    )
    .expect("finite");
    let masked = zip_map(values, &weights, |v, m| v * m);
    let mut out = values.values().to_vec();
    let mut pending: Vec<usize> = (0..w * h).filter(|&k| !valid.values()[k]).collect();
    let mut radius = 1;
    while !pending.is_empty() {
        let num = box_mean(&masked, radius);
        let den = box_mean(&weights, radius);
        pending.retain(|&k| {
            let d = den.values()[k];
            if d > 0.0 {
                out[k] = num.values()[k] / d;
                false
            } else {
                true
            }
        });
        radius *= 2;
    }
    GrayImage::new(w, h, out).expect("finite")
}

/// Gradient magnitude with central differences inside and one-sided
/// differences on the border.
pub fn gradient_magnitude(img: &GrayImage) -> GrayImage {
    let (w, h) = img.dims();
    let at = |x: usize, y: usize| img.get(x, y);
    GrayImage::from_fn(w, h, |x, y| {
        let gx = if w < 2 {
            0.0
        } else if x == 0 {
            at(1, y) - at(0, y)
        } else if x == w - 1 {
            at(x, y) - at(x - 1, y)
        } else {
            0.5 * (at(x + 1, y) - at(x - 1, y))
        };
        let gy = if h < 2 {
            0.0
        } else if y == 0 {
            at(x, 1) - at(x, 0)
        } else if y == h - 1 {
            at(x, y) - at(x, y - 1)
        } else {
            0.5 * (at(x, y + 1) - at(x, y - 1))
        };
        (gx * gx + gy * gy).sqrt()
    })
    .expect("finite gradients")
}

/// Edge mask with the two gradient maps it was thresholded from.
#[derive(Debug, Clone)]
pub struct ShadowEdges {
    pub mask: BinaryMask,
    /// Pixelwise max of the invariant pair's gradient magnitudes.
    pub grad_min: GrayImage,
    /// Pixelwise max of the shadow-retaining pair's gradient magnitudes.
    pub grad_max: GrayImage,
}

fn pair_gradient(pair: (GrayImage, GrayImage)) -> GrayImage {
    zip_map(
        &gradient_magnitude(&pair.0),
        &gradient_magnitude(&pair.1),
        f64::max,
    )
}

/// Pixels where the invariant projection is flat and the shadow-retaining
/// projection is not, dilated by `dilate_radius`.
pub fn detect_shadow_edges(
    field: &LogChromaticityField,
    theta_min: f64,
    theta_max: f64,
    params: &EdgeDetectParams,
) -> Result<ShadowEdges> {
    params.validate()?;
    let (w, h) = field.dims();
    let r = params.guided_radius;
    let eps = params.guided_eps;

    let chi_min = fill_invalid(&project_1d(field, theta_min), field.valid());
    let chi_max = fill_invalid(&project_1d(field, theta_max), field.valid());

    let ones = GrayImage::filled(w, h, 1.0)?;
    let (a1, a2) = reproject_values(&chi_min, theta_min);
    let invariant = (
        guided_filter(&a1, &ones, r, eps)?,
        guided_filter(&a2, &ones, r, eps)?,
    );
    let (b1, b2) = reproject_values(&chi_max, theta_max);
    let retained = (
        guided_filter(&b1, &b1, r, eps)?,
        guided_filter(&b2, &b2, r, eps)?,
    );

    let grad_min = pair_gradient(invariant);
    let grad_max = pair_gradient(retained);
    let raw = BinaryMask::new(
        w,
        h,
        grad_min
            .values()
            .iter()
            .zip(grad_max.values())
            .map(|(&gmin, &gmax)| gmin < params.tau1 && gmax > params.tau2)
            .collect(),
    )?;
    Ok(ShadowEdges {
        mask: raw.dilate(params.dilate_radius),
        grad_min,
        grad_max,
    })
}
