use chromanorm_core::pipeline::{run_pipeline, PipelineParams};
use chromanorm_core::scene::{render_scene, LightPatch, Region, SceneSpec, SurfacePatch};

const PALETTE: [[f64; 3]; 9] = [
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

// Vertical stripes, lit at 6500 K with a skylight shadow over the bottom half.
fn striped_shadow_scene() -> SceneSpec {
    let (w, h) = (90, 64);
    let surfaces = PALETTE
        .iter()
        .enumerate()
        .map(|(i, &reflectance)| SurfacePatch {
            region: Region::Rect {
                x0: i * w / PALETTE.len(),
                y0: 0,
                x1: (i + 1) * w / PALETTE.len(),
                y1: h,
            },
            reflectance,
        })
        .collect();
    let lights = vec![
        LightPatch {
            region: Region::Full,
            temperature: 6500.0,
            intensity: 1.0,
        },
        LightPatch {
            region: Region::HalfPlane {
                nx: 0.0,
                ny: 1.0,
                offset: 32.0,
            },
            temperature: 20000.0,
            intensity: 0.015,
        },
    ];
    let mut spec = SceneSpec::uniform(w, h, [0.5; 3], 6500.0, 1.0);
    spec.surfaces = surfaces;
    spec.lights = lights;
    spec
}

#[test]
fn pipeline_finds_invariant_angle_and_shadow_edge() {
    let spec = striped_shadow_scene();
    let scene = render_scene(&spec).unwrap();
    let out = run_pipeline(&scene.image, &PipelineParams::default()).unwrap();

    let theta = out.cii.profile.theta_min.to_degrees();
    assert!((theta - 139.82).abs() < 2.0, "theta_min {theta}");

    // The light boundary at y = 32 is covered. Neighbouring stripes may add
    // material edges, so only recall is checked here.
    let mask = &out.edges.mask;
    let (w, _) = mask.dims();
    let covered = (0..w).filter(|&x| (30..34).any(|y| mask.get(x, y))).count();
    assert!(covered * 10 >= w * 9, "{covered} of {w} columns");

    let lit = out.recovery.image.get(45, 10);
    let shadowed = out.recovery.image.get(45, 54);
    for c in 0..3 {
        let ratio = lit[c] / shadowed[c];
        assert!((0.8..1.25).contains(&ratio), "channel {c}: {ratio}");
    }
}

#[test]
fn scene_spec_json_round_trip() {
    let spec = striped_shadow_scene();
    let text = serde_json::to_string(&spec).unwrap();
    let back: SceneSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, spec);
    let minimal: SceneSpec = serde_json::from_str(
        r#"{"width": 4, "height": 3,
            "surfaces": [{"region": {"shape": "full"}, "reflectance": [0.5, 0.5, 0.5]}],
            "lights": [{"region": {"shape": "full"}, "temperature": 6500, "intensity": 1}]}"#,
    )
    .unwrap();
    assert_eq!(minimal.wavelengths_nm, [700.0, 530.0, 470.0]);
    assert_eq!(render_scene(&minimal).unwrap().image.dims(), (4, 3));
}
