use emseg::raster::{load_image, load_mask, save_image, save_mask, save_overlay};
use emseg::synth::{add_gaussian_noise, make_scene};
use emseg::*;

#[test]
fn scene_survives_pgm_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    // 0 and 1 are exact in eight bits
    let (img, truth) = make_scene(&SceneSpec::bimodal(40, 30)).unwrap();
    let p = dir.path().join("scene.pgm");
    save_image(&img, &p).unwrap();
    assert!(load_image(&p).unwrap() == img);
    let m = dir.path().join("truth.pgm");
    save_mask(truth.primary().1, &m).unwrap();
    assert_eq!(&load_mask(&m).unwrap(), truth.primary().1);
}

#[test]
fn noisy_image_quantizes_to_eight_bits() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = make_scene(&SceneSpec::bimodal(32, 32)).unwrap();
    let noisy = add_gaussian_noise(&img, 0.1, 3).unwrap();
    for ext in ["pgm", "png"] {
        let p = dir.path().join(format!("noisy.{ext}"));
        save_image(&noisy, &p).unwrap();
        let back = load_image(&p).unwrap();
        for (a, b) in back.values().iter().zip(noisy.values()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }
}

#[test]
fn overlay_marks_the_front() {
    let dir = tempfile::tempdir().unwrap();
    let (img, truth) = make_scene(&SceneSpec::bimodal(32, 32)).unwrap();
    let p = dir.path().join("overlay.pgm");
    save_overlay(&img, truth.primary().1, &p).unwrap();
    assert_eq!(load_image(&p).unwrap().width(), 32);
}

#[test]
fn unsupported_and_missing_files_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.bmp");
    std::fs::write(&p, b"BM").unwrap();
    assert!(load_image(&p).is_err());
    assert!(load_image(dir.path().join("missing.pgm")).is_err());
    let tiny = dir.path().join("tiny.pgm");
    std::fs::write(&tiny, b"P5\n2 2\n255\n\0\0\0\0").unwrap();
    assert!(matches!(load_image(&tiny), Err(Error::TooSmall { .. })));
}
