//! Shared scenes and invariant checks for the integration targets.
#![allow(dead_code)]

use emseg::levelset::{init_from_spec, interior_mask, redistance};
use emseg::synth::make_scene;
use emseg::*;

pub fn disk_scene(inside: f64, outside: f64) -> GrayImage {
    let spec = SceneSpec {
        width: 128,
        height: 128,
        kind: SceneKind::BimodalDisk { cx: 64.0, cy: 64.0, r: 30.0, inside, outside },
    };
    make_scene(&spec).unwrap().0
}

pub fn run(img: &GrayImage, init: &str, model: ModelParams) -> SegmentationResult {
    evolve(img, &init.parse().unwrap(), &EvolveParams::with_model(model)).unwrap()
}

pub fn bits(phi: &LevelSetField) -> Vec<u64> {
    phi.values().iter().map(|v| v.to_bits()).collect()
}

/// Outcome of one invariant: name, pass, and a detail line.
pub type Outcome = (String, bool, String);

pub fn determinism() -> Outcome {
    let img = Synthetic::tj();
    let p = ModelParams::default();
    let a = run(&img, "circle:64,64,55", p);
    let b = run(&img, "circle:64,64,55", p);
    let same = bits(&a.final_phi) == bits(&b.final_phi)
        && a.iterations == b.iterations
        && a.energy_trace.iter().zip(&b.energy_trace).all(|(x, y)| x.energy.to_bits() == y.energy.to_bits());
    ("determinism".into(), same, format!("{} iterations twice", a.iterations))
}

/// Adding a dyadic constant changes no bit of the evolution.
pub fn shift_equivariance() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    for kind in [ModelKind::Ems, ModelKind::Ms] {
        let base = disk_scene(0.5, 0.25);
        let shifted = disk_scene(0.625, 0.375);
        let a = run(&base, "circle:64,64,50", ModelParams::new(kind, 0.0));
        let b = run(&shifted, "circle:64,64,50", ModelParams::new(kind, 0.0));
        let same = bits(&a.final_phi) == bits(&b.final_phi) && a.iterations == b.iterations;
        ok &= same;
        detail += &format!("{kind}: {} vs {} iterations; ", a.iterations, b.iterations);
    }
    ("intensity shift".into(), ok, detail)
}

/// Segmenting the mirrored image from the mirrored init gives the mirrored mask.
pub fn mirror_equivariance() -> Outcome {
    let img = Synthetic::tj();
    let init: InitSpec = "circle:61.5,64,55".parse().unwrap();
    let p = EvolveParams::default();
    let a = evolve(&img, &init, &p).unwrap();
    let b = evolve(&img.mirror_x(), &init.mirror_x(128), &p).unwrap();
    let flips = a.final_mask.mirror_x().hamming(&b.final_mask).unwrap();
    ("mirror".into(), flips == 0, format!("{flips} differing pixels"))
}

/// No window of the MS energy trace rises by more than the tolerance.
pub fn ms_energy_windows(window: usize) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for (img, init) in [(disk_scene(1.0, 0.0), "circle:64,64,50"), (Synthetic::tj(), "circle:64,64,55")] {
        let r = run(&img, init, ModelParams::new(ModelKind::Ms, 0.0));
        let e: Vec<f64> = r.energy_trace.iter().map(|t| t.energy).collect();
        let tol = 1e-6 * (1.0 + e[0].abs());
        for w in e.windows(window + 1) {
            let rise = w[window] - w[0];
            worst = worst.max(rise);
            ok &= rise <= tol;
        }
    }
    ("ms energy windows".into(), ok, format!("largest rise {worst:.3e}"))
}

/// Sign preservation on distorted fields; idempotence exact on straight
/// fronts and within the chord sagitta `1/(4r)` on curved ones, since the
/// front is rebuilt as a polyline with chords up to `sqrt(2)` long.
pub fn redistance_properties() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    for (spec, r_min) in [
        ("circle:40.3,50.7,17.2", 17.2),
        ("rect:10,12,70,40", f64::INFINITY),
        ("rect:10,12,70,40;circle:90,90,20", 20.0),
        ("grid:2,3,8,30", 8.0),
    ] {
        let phi0 = init_from_spec(&spec.parse().unwrap(), 128, 128).unwrap();
        // a distorted field with the same zero set
        let warped = LevelSetField::from_fn(128, 128, |x, y| {
            let v = phi0.at(x, y);
            v * (1.0 + 0.5 * (x as f64 * 0.1).sin().abs()) + v * v * v * 0.01
        })
        .unwrap();
        let once = redistance(&warped).unwrap();
        let twice = redistance(&once).unwrap();
        ok &= interior_mask(&once) == interior_mask(&warped);
        ok &= interior_mask(&twice) == interior_mask(&once);
        let gap = once.values().iter().zip(twice.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ok &= gap <= 0.25 / r_min;
        detail += &format!("{spec} {gap:.2e}; ");
    }
    ("redistance".into(), ok, detail)
}

pub struct Synthetic;

impl Synthetic {
    pub fn tj() -> GrayImage {
        make_scene(&SceneSpec::triple_junction(128, 128)).unwrap().0
    }
}
