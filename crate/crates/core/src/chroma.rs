//! Log-chromaticity geometry.
//!
//! A pixel is normalized by its geometric mean, taken to log space, where it
//! lies on the plane `psi1 + psi2 + psi3 = 0`, and expressed in the plane's
//! orthonormal basis `U = [u1; u2]`. Under Planckian light and narrow-band
//! sensors, a surface traces a straight line in the plane as the colour
//! temperature changes; every surface's line has the same slope, fixed by the
//! sensor wavelengths alone.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, LinearRgbImage};

const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;
/// 1/sqrt(6)
const FRAC_1_SQRT_6: f64 = 0.408_248_290_463_863;

/// Rows of the 2x3 plane basis.
pub const PLANE_BASIS: [[f64; 3]; 2] = [
    [FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0],
    [FRAC_1_SQRT_6, FRAC_1_SQRT_6, -2.0 * FRAC_1_SQRT_6],
];

/// Fraction of the image maximum below which a channel is unusable in log space.
pub const DEGENERATE_FLOOR: f64 = 1e-3;

/// Constants of black-body radiation at the precision used by the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Planck constant, J s.
    pub planck: f64,
    /// Boltzmann constant, J/K.
    pub boltzmann: f64,
    /// Speed of light, m/s.
    pub light_speed: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            planck: 6.626e-34,
            boltzmann: 1.381e-23,
            light_speed: 3e8,
        }
    }
}

impl PhysicalConstants {
    /// First radiation constant `2 h c^2`.
    pub fn k1(&self) -> f64 {
        2.0 * self.planck * self.light_speed * self.light_speed
    }

    /// Second radiation constant `h c / k_B`.
    pub fn k2(&self) -> f64 {
        self.planck * self.light_speed / self.boltzmann
    }
}

/// Narrow-band trichromatic sensor: one wavelength and gain per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    /// R, G, B wavelengths in meters.
    wavelengths: [f64; 3],
    gains: [f64; 3],
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            wavelengths: [700e-9, 530e-9, 470e-9],
            gains: [1.0; 3],
        }
    }
}

impl SensorModel {
    pub fn new(wavelengths: [f64; 3], gains: [f64; 3]) -> Result<Self> {
        let [l1, l2, l3] = wavelengths;
        if !(l1 > l2 && l2 > l3 && l3 > 0.0) || !wavelengths.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidSensor);
        }
        if !gains.iter().all(|&g| g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter("sensor gains must be positive"));
        }
        Ok(Self { wavelengths, gains })
    }

    /// Wavelengths given in nanometers, unit gains.
    pub fn from_nanometers(r: f64, g: f64, b: f64) -> Result<Self> {
        Self::new([r * 1e-9, g * 1e-9, b * 1e-9], [1.0; 3])
    }

    pub fn wavelengths(&self) -> [f64; 3] {
        self.wavelengths
    }

    pub fn gains(&self) -> [f64; 3] {
        self.gains
    }
}

/// Spectral reflectance sampled at the three sensor wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceReflectance(pub [f64; 3]);

impl SurfaceReflectance {
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self> {
        if [r, g, b].iter().all(|&v| v > 0.0 && v <= 1.0) {
            Ok(Self([r, g, b]))
        } else {
            Err(Error::InvalidParameter("reflectance must lie in (0, 1]"))
        }
    }
}

/// Per-pixel plane coordinates with a validity mask. Invalid pixels hold `[0, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogChromaticityField {
    width: usize,
    height: usize,
    phi: Vec<[f64; 2]>,
    valid: BinaryMask,
}

impl LogChromaticityField {
    pub fn new(phi: Vec<[f64; 2]>, valid: BinaryMask) -> Result<Self> {
        let (width, height) = valid.dims();
        if phi.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                actual: phi.len(),
            });
        }
        if phi.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("plane coordinates must be finite"));
        }
        Ok(Self {
            width,
            height,
            phi,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn phi(&self) -> &[[f64; 2]] {
        &self.phi
    }

    pub fn valid(&self) -> &BinaryMask {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.count()
    }

    /// Plane coordinates of valid pixels, in raster order.
    pub fn valid_points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.phi
            .iter()
            .zip(self.valid.values())
            .filter(|(_, &v)| v)
            .map(|(p, _)| *p)
    }
}

/// `c = rgb / cbrt(r g b)`; `None` when any channel is not strictly positive.
pub fn geometric_mean_chromaticity(pixel: [f64; 3]) -> Option<[f64; 3]> {
    if !pixel.iter().all(|&v| v > 0.0 && v.is_finite()) {
        return None;
    }
    // the geometric mean through logs keeps tiny channels representable
    let g = ((pixel[0].ln() + pixel[1].ln() + pixel[2].ln()) / 3.0).exp();
    Some([pixel[0] / g, pixel[1] / g, pixel[2] / g])
}

/// Plane coordinates of the log of a chromaticity triple.
pub fn log_and_project(chroma: [f64; 3]) -> Option<[f64; 2]> {
    if !chroma.iter().all(|&v| v > 0.0 && v.is_finite()) {
        return None;
    }
    let psi = [chroma[0].ln(), chroma[1].ln(), chroma[2].ln()];
    Some(project_to_plane(psi))
}

/// `U psi`.
pub fn project_to_plane(psi: [f64; 3]) -> [f64; 2] {
    let [u1, u2] = PLANE_BASIS;
    [
        u1[0] * psi[0] + u1[1] * psi[1] + u1[2] * psi[2],
        u2[0] * psi[0] + u2[1] * psi[1] + u2[2] * psi[2],
    ]
}

/// `U^T phi`: exact on the plane since `U` has orthonormal rows spanning it.
pub fn lift(phi: [f64; 2]) -> [f64; 3] {
    let [u1, u2] = PLANE_BASIS;
    [
        u1[0] * phi[0] + u2[0] * phi[1],
        u1[1] * phi[0] + u2[1] * phi[1],
        u1[2] * phi[0] + u2[2] * phi[1],
    ]
}

/// Plane coordinates of one pixel, skipping the chromaticity step: the
/// geometric mean lies along `(1, 1, 1)` which `U` annihilates.
fn pixel_phi(pixel: [f64; 3]) -> [f64; 2] {
    project_to_plane([pixel[0].ln(), pixel[1].ln(), pixel[2].ln()])
}

/// Log-chromaticity of every usable pixel.
///
/// A pixel is valid when it is not excluded and every channel is at least
/// `DEGENERATE_FLOOR` times the image maximum.
pub fn compute_chroma_field(
    img: &LinearRgbImage,
    exclude: &BinaryMask,
) -> Result<LogChromaticityField> {
    exclude.check_matches(img.dims())?;
    let floor = DEGENERATE_FLOOR * img.max_value();
    let mut phi = Vec::with_capacity(img.len());
    let mut valid = Vec::with_capacity(img.len());
    for (px, &ex) in img.pixels().iter().zip(exclude.values()) {
        let ok = !ex && px.iter().all(|&v| v > 0.0 && v >= floor);
        if ok {
            phi.push(pixel_phi(*px));
        } else {
            phi.push([0.0, 0.0]);
        }
        valid.push(ok);
    }
    let valid = BinaryMask::new(img.width(), img.height(), valid)?;
    let n = valid.count();
    if n == 0 {
        return Err(Error::TooFewValidPixels {
            required: 1,
            actual: 0,
        });
    }
    LogChromaticityField::new(phi, valid)
}

/// Slope shared by all surface lines in the plane, from the sensor wavelengths.
pub fn theoretical_slope(sensor: &SensorModel) -> Result<f64> {
    let [l1, l2, l3] = sensor.wavelengths();
    let denom = (l1 - l2) * l3;
    if denom == 0.0 {
        return Err(Error::InvalidSensor);
    }
    Ok((3.0f64.sqrt() / 3.0) * (l1 * (l2 - l3) + l2 * (l1 - l3)) / denom)
}

/// Projection angle in `[pi/2, pi]` perpendicular to lines of slope `k > 0`.
pub fn perpendicular_angle(slope: f64) -> f64 {
    core::f64::consts::FRAC_PI_2 + slope.atan()
}

/// Sensor response of a Lambertian surface under Wien-approximated Planckian
/// light: `C_i = a I k1 f_i l_i^-5 exp(-k2 / (l_i T)) S_i`.
///
/// `intensity` carries the achromatic product of light intensity and shading.
pub fn synth_planckian_pixel(
    surface: &SurfaceReflectance,
    sensor: &SensorModel,
    temperature: f64,
    intensity: f64,
    constants: &PhysicalConstants,
) -> [f64; 3] {
    debug_assert!(temperature > 0.0);
    let (k1, k2) = (constants.k1(), constants.k2());
    let wl = sensor.wavelengths();
    let gains = sensor.gains();
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = intensity
            * k1
            * gains[i]
            * wl[i].powi(-5)
            * (-k2 / (wl[i] * temperature)).exp()
            * surface.0[i];
    }
    out
}
