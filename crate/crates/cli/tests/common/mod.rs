//! Synthetic scenes shared by the integration and acceptance tests.
#![allow(dead_code)]

use chromanorm_core::scene::{LightPatch, Region, SceneSpec, SpecularDisc, SurfacePatch};

pub const SIZE: usize = 180;

/// Nine reflectances spread over hue so the invariant projection separates them.
pub const PALETTE: [[f64; 3]; 9] = [
    [0.80, 0.55, 0.45],
    [0.35, 0.60, 0.85],
    [0.60, 0.80, 0.30],
    [0.90, 0.30, 0.50],
    [0.45, 0.45, 0.45],
    [0.30, 0.75, 0.70],
    [0.75, 0.70, 0.25],
    [0.55, 0.35, 0.80],
    [0.95, 0.85, 0.75],
];

pub fn tiled(
    width: usize,
    height: usize,
    cols: usize,
    rows: usize,
    palette: &[[f64; 3]],
) -> Vec<SurfacePatch> {
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            out.push(SurfacePatch {
                region: Region::Rect {
                    x0: c * width / cols,
                    y0: r * height / rows,
                    x1: (c + 1) * width / cols,
                    y1: (r + 1) * height / rows,
                },
                reflectance: palette[(r * cols + c) % palette.len()],
            });
        }
    }
    out
}

fn base(surfaces: Vec<SurfacePatch>, lights: Vec<LightPatch>) -> SceneSpec {
    SceneSpec {
        width: SIZE,
        height: SIZE,
        surfaces,
        lights,
        shadow_softness: 0,
        specular_discs: Vec::new(),
        noise_sigma: 0.0,
        wavelengths_nm: [700.0, 530.0, 470.0],
        seed: 0,
    }
}

/// 6500 K on the left half, 2500 K on the right. The warm light is brighter
/// so blue stays above the log-space validity floor.
pub fn two_temperature_lights() -> Vec<LightPatch> {
    vec![
        LightPatch {
            region: Region::Full,
            temperature: 6500.0,
            intensity: 1.0,
        },
        LightPatch {
            region: Region::Rect {
                x0: SIZE / 2,
                y0: 0,
                x1: SIZE,
                y1: SIZE,
            },
            temperature: 2500.0,
            intensity: 12.0,
        },
    ]
}

pub fn single_surface_two_temperatures() -> SceneSpec {
    base(
        vec![SurfacePatch {
            region: Region::Full,
            reflectance: [0.35, 0.60, 0.85],
        }],
        two_temperature_lights(),
    )
}

/// Nine horizontal stripes, each crossing the light boundary.
pub fn striped_two_temperatures() -> SceneSpec {
    base(tiled(SIZE, SIZE, 1, 9, &PALETTE), two_temperature_lights())
}

/// Stripes far apart along the invariant direction, so material edges stay
/// visible in the invariant image.
pub const DISTINCT: [[f64; 3]; 3] = [[0.85, 0.15, 0.5], [0.5, 0.5, 0.5], [0.15, 0.85, 0.2]];

/// Sunlit 6500 K region with a slanted cast shadow lit by dim 20000 K sky light.
pub fn hard_shadow_scene() -> SceneSpec {
    base(
        tiled(SIZE, SIZE, 1, 3, &DISTINCT),
        vec![
            LightPatch {
                region: Region::Full,
                temperature: 6500.0,
                intensity: 1.0,
            },
            LightPatch {
                region: Region::HalfPlane {
                    nx: 1.0,
                    ny: 0.4,
                    offset: 125.0,
                },
                temperature: 20000.0,
                intensity: 0.015,
            },
        ],
    )
}

/// The same cast shadow over the nine palette stripes. With this many
/// surfaces the entropy minimum is sharp rather than a plateau.
pub fn palette_shadow_scene() -> SceneSpec {
    let mut s = hard_shadow_scene();
    s.surfaces = tiled(SIZE, SIZE, 1, 9, &PALETTE);
    s
}

pub fn specular_scene() -> SceneSpec {
    let mut s = base(
        vec![SurfacePatch {
            region: Region::Full,
            reflectance: PALETTE[0],
        }],
        vec![LightPatch {
            region: Region::Full,
            temperature: 6500.0,
            intensity: 0.5,
        }],
    );
    s.specular_discs.push(SpecularDisc {
        cx: 90.0,
        cy: 90.0,
        radius: 20.0,
        strength: 0.6,
    });
    s
}

/// Relative intensity of the sky light inside a query's cast shadow.
pub const FACE_SHADOW: f64 = 0.02;

/// Face-sized proxy: a skin disc on a green backdrop, dark plum hair and
/// brows, darker same-chroma eyes, nostrils and moles, red lips, a specular
/// spot on the nose, and identity-specific geometry and skin texture.
/// Neighbouring materials are far apart along the invariant direction so
/// their edges are not mistaken for shadow edges, and no pair of
/// material/light clusters lines up at a wrong projection angle. Gallery images
/// (`shadow = None`) are lit by uniform 6500 K light; queries use 5000 K with
/// a hard cast shadow lit by dim 20000 K sky light whose slant depends on
/// `shadow`.
pub fn face_proxy(identity: usize, shadow: Option<usize>) -> SceneSpec {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000 + identity as u64);
    let skin = [0.8, 0.55, 0.45];
    let dark = |a: f64| [skin[0] * a, skin[1] * a, skin[2] * a];
    let lips = [0.623, 0.107, 0.453];
    let hair = [0.27, 0.03, 0.17];
    let backdrop = [0.28, 0.84, 0.11];
    let rect = |x0: usize, y0: usize, x1: usize, y1: usize| Region::Rect { x0, y0, x1, y1 };
    let mut surfaces = vec![
        SurfacePatch {
            region: Region::Full,
            reflectance: backdrop,
        },
        SurfacePatch {
            region: Region::Disc {
                cx: 90.0,
                cy: 100.0,
                radius: 72.0,
            },
            reflectance: skin,
        },
    ];
    // Albedo-only skin texture, kept inside the face disc; orientation and
    // period identify the person.
    let vertical = rng.random_bool(0.5);
    let period = rng.random_range(5..12);
    let thickness = rng.random_range(1..=period / 2);
    let shade = dark(rng.random_range(0.6..0.85));
    for k in (0..80).step_by(period) {
        let region = if vertical {
            rect(50 + k, 50, 50 + k + thickness, 150)
        } else {
            rect(50, 50 + k, 130, 50 + k + thickness)
        };
        surfaces.push(SurfacePatch {
            region,
            reflectance: shade,
        });
    }

    let hairline = rng.random_range(15..45);
    surfaces.push(SurfacePatch {
        region: rect(0, 0, SIZE, hairline),
        reflectance: hair,
    });
    let eye_y = rng.random_range(hairline + 25..hairline + 45);
    let gap = rng.random_range(18..35);
    let eye_w = rng.random_range(12..24);
    let eye_h = rng.random_range(5..12);
    let brow_h = rng.random_range(3..8);
    let brow_lift = rng.random_range(6..14);
    for side in [-1i64, 1] {
        let cx = (SIZE as i64 / 2 + side * (gap + eye_w as i64 / 2)) as usize;
        let x0 = cx - eye_w / 2;
        surfaces.push(SurfacePatch {
            region: rect(
                x0,
                eye_y - brow_lift - brow_h,
                x0 + eye_w + 4,
                eye_y - brow_lift,
            ),
            reflectance: hair,
        });
        surfaces.push(SurfacePatch {
            region: rect(x0, eye_y, x0 + eye_w, eye_y + eye_h),
            reflectance: dark(0.15),
        });
    }
    let nose_y = eye_y + rng.random_range(30..45);
    let nostril = rng.random_range(3..7);
    for side in [-1i64, 1] {
        let cx = (SIZE as i64 / 2 + side * rng.random_range(6..12)) as usize;
        surfaces.push(SurfacePatch {
            region: rect(
                cx - nostril / 2,
                nose_y,
                cx + nostril / 2 + 1,
                nose_y + nostril,
            ),
            reflectance: dark(0.35),
        });
    }
    let mouth_y = (nose_y + rng.random_range(18..30)).min(SIZE - 20);
    let mouth_w = rng.random_range(30..70);
    let mouth_h = rng.random_range(8..16);
    surfaces.push(SurfacePatch {
        region: rect(
            SIZE / 2 - mouth_w / 2,
            mouth_y,
            SIZE / 2 + mouth_w / 2,
            mouth_y + mouth_h,
        ),
        reflectance: lips,
    });
    for _ in 0..rng.random_range(1..4) {
        let (mx, my) = (
            rng.random_range(20..SIZE - 20),
            rng.random_range(hairline + 5..SIZE - 10),
        );
        surfaces.push(SurfacePatch {
            region: Region::Disc {
                cx: mx as f64,
                cy: my as f64,
                radius: rng.random_range(2.0..4.0),
            },
            reflectance: dark(0.4),
        });
    }

    let lights = match shadow {
        None => vec![LightPatch {
            region: Region::Full,
            temperature: 6500.0,
            intensity: 1.0,
        }],
        Some(k) => {
            let slant = [0.3, -0.5, 0.8, -0.2, 0.6][k % 5];
            vec![
                LightPatch {
                    region: Region::Full,
                    temperature: 5000.0,
                    intensity: 1.2,
                },
                LightPatch {
                    region: Region::HalfPlane {
                        nx: 1.0,
                        ny: slant,
                        offset: 100.0 + 60.0 * slant,
                    },
                    temperature: 20000.0,
                    intensity: FACE_SHADOW,
                },
            ]
        }
    };
    let mut spec = base(surfaces, lights);
    spec.specular_discs.push(SpecularDisc {
        cx: SIZE as f64 / 2.0,
        cy: (nose_y - 8) as f64,
        radius: 5.0,
        strength: 1.0,
    });
    spec
}
