//! Synthetic ground-truth scenes: flat Lambertian patches under
//! region-dependent Planckian light, optional soft shadow borders, specular
//! discs and seeded sensor noise.

use alloc::vec;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::chroma::{synth_planckian_pixel, PhysicalConstants, SensorModel, SurfaceReflectance};
use crate::error::{Error, Result};
use crate::image::{BinaryMask, LinearRgbImage};

/// Pixel-centre membership test. Coordinates are pixel indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Full,
    /// Half-open rectangle `[x0, x1) x [y0, y1)`.
    Rect {
        x0: usize,
        y0: usize,
        x1: usize,
        y1: usize,
    },
    Disc {
        cx: f64,
        cy: f64,
        radius: f64,
    },
    /// Pixels with `nx * x + ny * y >= offset`.
    HalfPlane {
        nx: f64,
        ny: f64,
        offset: f64,
    },
}

impl Region {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        match *self {
            Region::Full => true,
            Region::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Region::Disc { cx, cy, radius } => {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                dx * dx + dy * dy <= radius * radius
            }
            Region::HalfPlane { nx, ny, offset } => nx * x as f64 + ny * y as f64 >= offset,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Region::Full => true,
            Region::Rect { x0, y0, x1, y1 } => x0 < x1 && y0 < y1,
            Region::Disc { cx, cy, radius } => cx.is_finite() && cy.is_finite() && radius >= 0.0,
            Region::HalfPlane { nx, ny, offset } => {
                nx.is_finite() && ny.is_finite() && offset.is_finite() && (nx != 0.0 || ny != 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("degenerate scene region"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePatch {
    pub region: Region,
    pub reflectance: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightPatch {
    pub region: Region,
    pub temperature: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecularDisc {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    /// Added equally to all channels, in normalized linear units.
    pub strength: f64,
}

fn default_wavelengths() -> [f64; 3] {
    [700.0, 530.0, 470.0]
}

/// Scene description. Later entries in `surfaces` and `lights` paint over
/// earlier ones; every pixel must be covered by at least one of each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub surfaces: Vec<SurfacePatch>,
    pub lights: Vec<LightPatch>,
    /// Box-blur radius applied to the intensity map at light boundaries.
    #[serde(default)]
    pub shadow_softness: usize,
    #[serde(default)]
    pub specular_discs: Vec<SpecularDisc>,
    /// Standard deviation of additive Gaussian noise; 0 disables it.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_wavelengths")]
    pub wavelengths_nm: [f64; 3],
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    /// One surface under one light.
    pub fn uniform(
        width: usize,
        height: usize,
        reflectance: [f64; 3],
        temperature: f64,
        intensity: f64,
    ) -> Self {
        Self {
            width,
            height,
            surfaces: vec![SurfacePatch {
                region: Region::Full,
                reflectance,
            }],
            lights: vec![LightPatch {
                region: Region::Full,
                temperature,
                intensity,
            }],
            shadow_softness: 0,
            specular_discs: Vec::new(),
            noise_sigma: 0.0,
            wavelengths_nm: default_wavelengths(),
            seed: 0,
        }
    }

    pub fn sensor(&self) -> Result<SensorModel> {
        let [r, g, b] = self.wavelengths_nm;
        SensorModel::from_nanometers(r, g, b)
    }
}

#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub image: LinearRgbImage,
    /// Index into `surfaces` per pixel.
    pub surface_labels: Vec<usize>,
    /// Index into `lights` per pixel.
    pub light_labels: Vec<usize>,
    pub specular_mask: BinaryMask,
}

impl RenderedScene {
    pub fn surface_mask(&self, label: usize) -> BinaryMask {
        self.label_mask(&self.surface_labels, label)
    }

    pub fn light_mask(&self, label: usize) -> BinaryMask {
        self.label_mask(&self.light_labels, label)
    }

    fn label_mask(&self, labels: &[usize], label: usize) -> BinaryMask {
        let (w, h) = self.image.dims();
        BinaryMask::new(w, h, labels.iter().map(|&l| l == label).collect()).expect("label length")
    }

    /// Pixels whose 4-neighbour has a different light label.
    pub fn light_boundary(&self) -> BinaryMask {
        let (w, h) = self.image.dims();
        let l = &self.light_labels;
        BinaryMask::from_fn(w, h, |x, y| {
            let k = y * w + x;
            (x + 1 < w && l[k + 1] != l[k])
                || (x > 0 && l[k - 1] != l[k])
                || (y + 1 < h && l[k + w] != l[k])
                || (y > 0 && l[k - w] != l[k])
        })
    }
}

/// Divisor that maps a white surface under unit-intensity 6500 K light to a
/// peak channel of 1. Fixed, so rendering stays linear in intensity.
pub fn reference_scale(sensor: &SensorModel) -> f64 {
    let white = SurfaceReflectance([1.0; 3]);
    let p = synth_planckian_pixel(&white, sensor, 6500.0, 1.0, &PhysicalConstants::default());
    p[0].max(p[1]).max(p[2])
}

fn paint<T>(w: usize, h: usize, layers: &[T], region: impl Fn(&T) -> Region) -> Result<Vec<usize>> {
    let mut labels = vec![usize::MAX; w * h];
    for (i, layer) in layers.iter().enumerate() {
        let r = region(layer);
        r.validate()?;
        for y in 0..h {
            for x in 0..w {
                if r.contains(x, y) {
                    labels[y * w + x] = i;
                }
            }
        }
    }
    if let Some(k) = labels.iter().position(|&l| l == usize::MAX) {
        return Err(Error::UncoveredPixel { x: k % w, y: k / w });
    }
    Ok(labels)
}

fn box_blur(values: &[f64], w: usize, h: usize, radius: usize) -> Vec<f64> {
    if radius == 0 {
        return values.to_vec();
    }
    let pass = |src: &[f64], horizontal: bool| {
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let (pos, len) = if horizontal { (x, w) } else { (y, h) };
                let lo = pos.saturating_sub(radius);
                let hi = (pos + radius).min(len - 1);
                let mut s = 0.0;
                for t in lo..=hi {
                    s += if horizontal {
                        src[y * w + t]
                    } else {
                        src[t * w + x]
                    };
                }
                out[y * w + x] = s / (hi - lo + 1) as f64;
            }
        }
        out
    };
    pass(&pass(values, true), false)
}

pub fn render_scene(spec: &SceneSpec) -> Result<RenderedScene> {
    let (w, h) = (spec.width, spec.height);
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    let sensor = spec.sensor()?;
    let surfaces: Vec<SurfaceReflectance> = spec
        .surfaces
        .iter()
        .map(|s| {
            let [r, g, b] = s.reflectance;
            SurfaceReflectance::new(r, g, b)
        })
        .collect::<Result<_>>()?;
    for l in &spec.lights {
        if !(l.temperature > 0.0 && l.temperature.is_finite()) {
            return Err(Error::InvalidParameter(
                "light temperature must be positive",
            ));
        }
        if !(l.intensity >= 0.0 && l.intensity.is_finite()) {
            return Err(Error::InvalidParameter(
                "light intensity must be nonnegative",
            ));
        }
    }
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter("noise sigma must be nonnegative"));
    }
    for d in &spec.specular_discs {
        if !(d.strength >= 0.0 && d.radius >= 0.0) {
            return Err(Error::InvalidParameter(
                "specular disc must have nonnegative radius and strength",
            ));
        }
    }

    let surface_labels = paint(w, h, &spec.surfaces, |s| s.region)?;
    let light_labels = paint(w, h, &spec.lights, |l| l.region)?;
    let raw_intensity: Vec<f64> = light_labels
        .iter()
        .map(|&l| spec.lights[l].intensity)
        .collect();
    let intensity = box_blur(&raw_intensity, w, h, spec.shadow_softness);

    let constants = PhysicalConstants::default();
    let norm = reference_scale(&sensor);
    let mut data: Vec<[f64; 3]> = (0..w * h)
        .map(|k| {
            let light = &spec.lights[light_labels[k]];
            let p = synth_planckian_pixel(
                &surfaces[surface_labels[k]],
                &sensor,
                light.temperature,
                intensity[k],
                &constants,
            );
            [p[0] / norm, p[1] / norm, p[2] / norm]
        })
        .collect();

    let specular_mask = BinaryMask::from_fn(w, h, |x, y| {
        spec.specular_discs.iter().any(|d| {
            Region::Disc {
                cx: d.cx,
                cy: d.cy,
                radius: d.radius,
            }
            .contains(x, y)
        })
    });
    for y in 0..h {
        for x in 0..w {
            for d in &spec.specular_discs {
                let disc = Region::Disc {
                    cx: d.cx,
                    cy: d.cy,
                    radius: d.radius,
                };
                if disc.contains(x, y) {
                    data[y * w + x].iter_mut().for_each(|c| *c += d.strength);
                }
            }
        }
    }

    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_sigma)
            .map_err(|_| Error::InvalidParameter("noise sigma must be nonnegative"))?;
        for p in data.iter_mut() {
            for c in p.iter_mut() {
                *c = (*c + normal.sample(&mut rng)).max(0.0);
            }
        }
    }

    Ok(RenderedScene {
        image: LinearRgbImage::new(w, h, data)?,
        surface_labels,
        light_labels,
        specular_mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chroma::{compute_chroma_field, theoretical_slope};

    fn two_light_spec() -> SceneSpec {
        // 2500 K is so red that the blue channel needs extra light to stay
        // above the log-space validity floor
        let mut s = SceneSpec::uniform(40, 30, [0.3, 0.45, 0.6], 6500.0, 1.0);
        s.lights.push(LightPatch {
            region: Region::Rect {
                x0: 20,
                y0: 0,
                x1: 40,
                y1: 30,
            },
            temperature: 2500.0,
            intensity: 3.0,
        });
        s
    }

    #[test]
    fn single_patch_is_constant() {
        let spec = SceneSpec::uniform(8, 6, [0.5, 0.4, 0.3], 4000.0, 0.7);
        let out = render_scene(&spec).unwrap();
        let sensor = spec.sensor().unwrap();
        let p = synth_planckian_pixel(
            &SurfaceReflectance([0.5, 0.4, 0.3]),
            &sensor,
            4000.0,
            0.7,
            &PhysicalConstants::default(),
        );
        let norm = reference_scale(&sensor);
        for q in out.image.pixels() {
            for c in 0..3 {
                assert_eq!(q[c], p[c] / norm);
            }
        }
    }

    #[test]
    fn white_reference_peaks_at_one() {
        let out = render_scene(&SceneSpec::uniform(2, 2, [1.0; 3], 6500.0, 1.0)).unwrap();
        assert!((out.image.max_value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn doubling_intensity_doubles_image() {
        let mut a = two_light_spec();
        a.shadow_softness = 2;
        let mut b = a.clone();
        b.lights.iter_mut().for_each(|l| l.intensity *= 2.0);
        let (ia, ib) = (
            render_scene(&a).unwrap().image,
            render_scene(&b).unwrap().image,
        );
        for (p, q) in ia.pixels().iter().zip(ib.pixels()) {
            for c in 0..3 {
                assert_eq!(2.0 * p[c], q[c]);
            }
        }
    }

    #[test]
    fn two_temperatures_fall_on_theory_line() {
        let out = render_scene(&two_light_spec()).unwrap();
        let field = compute_chroma_field(&out.image, &BinaryMask::empty(40, 30)).unwrap();
        assert_eq!(field.valid_count(), 1200);
        let a = field.phi()[0];
        let b = field.phi()[39];
        let slope = (b[1] - a[1]) / (b[0] - a[0]);
        let k = theoretical_slope(&SensorModel::default()).unwrap();
        assert!((slope - k).abs() < 1e-6 * k.abs());
    }

    #[test]
    fn labels_partition_and_boundary() {
        let out = render_scene(&two_light_spec()).unwrap();
        let lit = out.light_mask(0);
        let shade = out.light_mask(1);
        assert_eq!(lit.count() + shade.count(), 1200);
        assert!(lit.union(&shade).unwrap().values().iter().all(|&v| v));
        let edge = out.light_boundary();
        assert_eq!(edge.count(), 60);
        assert!(edge.get(19, 5) && edge.get(20, 5) && !edge.get(18, 5));
    }

    #[test]
    fn uncovered_pixel_rejected() {
        let mut s = two_light_spec();
        s.surfaces[0].region = Region::Rect {
            x0: 0,
            y0: 0,
            x1: 10,
            y1: 30,
        };
        assert_eq!(
            render_scene(&s).unwrap_err(),
            Error::UncoveredPixel { x: 10, y: 0 }
        );
    }

    #[test]
    fn soft_shadow_keeps_temperature_and_blends_intensity() {
        let mut s = two_light_spec();
        s.lights[1].temperature = 6500.0;
        s.lights[1].intensity = 0.4;
        s.shadow_softness = 3;
        let out = render_scene(&s).unwrap();
        let row: Vec<f64> = (0..40).map(|x| out.image.get(x, 10)[1]).collect();
        assert!(row.windows(2).all(|p| p[1] <= p[0] + 1e-15));
        assert_eq!(row[0], row[15]);
        assert!(row[17] > row[23]);
    }

    #[test]
    fn speculars_and_noise() {
        let mut s = SceneSpec::uniform(30, 30, [0.5; 3], 6500.0, 0.5);
        s.specular_discs.push(SpecularDisc {
            cx: 15.0,
            cy: 15.0,
            radius: 4.0,
            strength: 0.75,
        });
        let out = render_scene(&s).unwrap();
        assert_eq!(out.specular_mask.count(), 49);
        let base = out.image.get(0, 0)[0];
        assert!((out.image.get(15, 15)[0] - base - 0.75).abs() < 1e-12);

        s.noise_sigma = 0.01;
        s.seed = 9;
        let n1 = render_scene(&s).unwrap().image;
        let n2 = render_scene(&s).unwrap().image;
        assert_eq!(n1, n2);
        assert_ne!(n1.get(0, 0), out.image.get(0, 0));
    }

    #[test]
    fn spec_round_trips_through_json() {
        let mut s = two_light_spec();
        s.specular_discs.push(SpecularDisc {
            cx: 1.0,
            cy: 2.0,
            radius: 3.0,
            strength: 0.5,
        });
        let text = serde_json::to_string(&s).unwrap();
        let back: SceneSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}
