//! Piecewise-constant synthetic scenes, their ground truth, and noise.
//!
//! A pixel belongs to a shape iff its center `(x, y)` lies inside it
//! (boundary included).

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{GrayImage, Grid, Mask, MIN_DIM};

/// Identifier of the pseudo-random generator behind every noise routine.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng(seed_from_u64)";

/// Axis-aligned rectangle with inclusive pixel-center bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Circle { cx: f64, cy: f64, r: f64 },
    Rect(Rect),
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Circle { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
            Shape::Rect(rect) => rect.contains(x, y),
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            Shape::Circle { cx, cy, r } => (cx - r, cy - r, cx + r, cy + r),
            Shape::Rect(r) => (r.x0, r.y0, r.x1, r.y1),
        }
    }
}

/// A named object of a custom scene, painted in list order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub name: String,
    pub shape: Shape,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneKind {
    /// One disk on a uniform background.
    BimodalDisk {
        cx: f64,
        cy: f64,
        r: f64,
        inside: f64,
        outside: f64,
    },
    /// A square on a background, split at `split_x` into a dark part
    /// (centers with `x < split_x`) and a bright part.
    TripleJunction {
        square: Rect,
        split_x: f64,
        background: f64,
        dark: f64,
        bright: f64,
    },
    /// Two separated rectangles on a background.
    FourRegion {
        dark_rect: Rect,
        bright_rect: Rect,
        background: f64,
        dark: f64,
        bright: f64,
    },
    Custom {
        background: f64,
        objects: Vec<SceneObject>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    #[serde(flatten)]
    pub kind: SceneKind,
}

impl SceneSpec {
    /// White disk of radius `15/64 · min(w, h)` centered on a black field.
    pub fn bimodal(width: usize, height: usize) -> Self {
        let r = (width.min(height) as f64 * 15.0 / 64.0).round();
        Self {
            width,
            height,
            kind: SceneKind::BimodalDisk {
                cx: (width / 2) as f64,
                cy: (height / 2) as f64,
                r,
                inside: 1.0,
                outside: 0.0,
            },
        }
    }

    /// Centered square of half the image size on mid-gray, left half black
    /// and right half white.
    pub fn triple_junction(width: usize, height: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        let square = Rect::new(
            (w / 4.0).round(),
            (h / 4.0).round(),
            (3.0 * w / 4.0).round() - 1.0,
            (3.0 * h / 4.0).round() - 1.0,
        );
        Self {
            width,
            height,
            kind: SceneKind::TripleJunction {
                square,
                // slightly off-center: an even split balances the region means exactly
                split_x: (w * 15.0 / 32.0).round(),
                background: 0.5,
                dark: 0.0,
                bright: 1.0,
            },
        }
    }

    /// A black and a white rectangle side by side with a gray gap.
    pub fn four_region(width: usize, height: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        let (top, bottom) = ((h * 0.3).round(), (h * 0.7).round());
        Self {
            width,
            height,
            kind: SceneKind::FourRegion {
                dark_rect: Rect::new((w * 0.12).round(), top, (w * 0.42).round(), bottom),
                bright_rect: Rect::new((w * 0.58).round(), top, (w * 0.88).round(), bottom),
                background: 0.5,
                dark: 0.0,
                bright: 1.0,
            },
        }
    }

    /// Region intensities, background first.
    pub fn intensities(&self) -> Vec<f64> {
        match &self.kind {
            SceneKind::BimodalDisk { inside, outside, .. } => vec![*outside, *inside],
            SceneKind::TripleJunction {
                background,
                dark,
                bright,
                ..
            }
            | SceneKind::FourRegion {
                background,
                dark,
                bright,
                ..
            } => vec![*background, *dark, *bright],
            SceneKind::Custom { background, objects } => std::iter::once(*background)
                .chain(objects.iter().map(|o| o.intensity))
                .collect(),
        }
    }

    /// The painted objects as `(name, shape, intensity)` plus background.
    fn layers(&self) -> (f64, Vec<(String, Shape, f64)>) {
        match &self.kind {
            SceneKind::BimodalDisk {
                cx,
                cy,
                r,
                inside,
                outside,
            } => (
                *outside,
                vec![("disk".into(), Shape::Circle { cx: *cx, cy: *cy, r: *r }, *inside)],
            ),
            SceneKind::TripleJunction {
                square,
                split_x,
                background,
                dark,
                bright,
            } => {
                // last pixel center strictly left of the split
                let left = Rect::new(square.x0, square.y0, split_x.ceil() - 1.0, square.y1);
                let right = Rect::new(*split_x, square.y0, square.x1, square.y1);
                (
                    *background,
                    vec![
                        ("black".into(), Shape::Rect(left), *dark),
                        ("white".into(), Shape::Rect(right), *bright),
                    ],
                )
            }
            SceneKind::FourRegion {
                dark_rect,
                bright_rect,
                background,
                dark,
                bright,
            } => (
                *background,
                vec![
                    ("black".into(), Shape::Rect(*dark_rect), *dark),
                    ("white".into(), Shape::Rect(*bright_rect), *bright),
                ],
            ),
            SceneKind::Custom { background, objects } => (
                *background,
                objects
                    .iter()
                    .map(|o| (o.name.clone(), o.shape, o.intensity))
                    .collect(),
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < MIN_DIM || self.height < MIN_DIM {
            return Err(Error::TooSmall {
                width: self.width,
                height: self.height,
            });
        }
        let values = self.intensities();
        for (i, v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::InvalidScene(format!("intensity {v} outside [0, 1]")));
            }
            if values[..i].contains(v) {
                return Err(Error::InvalidScene(format!("duplicate intensity {v}")));
            }
        }
        let (_, layers) = self.layers();
        if layers.is_empty() {
            return Err(Error::InvalidScene("scene has no objects".into()));
        }
        let (xmax, ymax) = ((self.width - 1) as f64, (self.height - 1) as f64);
        for (name, shape, _) in &layers {
            let (x0, y0, x1, y1) = shape.bounds();
            if !(x0 <= x1 && y0 <= y1) {
                return Err(Error::InvalidScene(format!("`{name}` has inverted bounds")));
            }
            if x0 < 0.0 || y0 < 0.0 || x1 > xmax || y1 > ymax {
                return Err(Error::InvalidScene(format!(
                    "`{name}` extends outside the {}x{} image",
                    self.width, self.height
                )));
            }
        }
        if let SceneKind::TripleJunction { square, split_x, .. } = &self.kind {
            if !(square.x0 < *split_x && *split_x <= square.x1) {
                return Err(Error::InvalidScene("split_x must cut the square".into()));
            }
        }
        Ok(())
    }
}

/// Per-object ground-truth masks; the first entry is the primary object.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub objects: Vec<(String, Mask)>,
}

impl GroundTruth {
    pub fn primary(&self) -> (&str, &Mask) {
        let (name, mask) = &self.objects[0];
        (name, mask)
    }

    pub fn get(&self, name: &str) -> Option<&Mask> {
        self.objects.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }
}

/// Renders a scene and its ground truth.
pub fn make_scene(spec: &SceneSpec) -> Result<(GrayImage, GroundTruth)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let (background, layers) = spec.layers();
    let mut data = vec![background; w * h];
    let mut masks = Vec::new();
    for (name, shape, value) in &layers {
        let mask = Mask::from_fn(w, h, |x, y| shape.contains(x as f64, y as f64))?;
        if mask.count() == 0 {
            return Err(Error::InvalidScene(format!("`{name}` covers no pixel centers")));
        }
        for (d, &inside) in data.iter_mut().zip(mask.as_slice()) {
            if inside {
                *d = *value;
            }
        }
        masks.push((name.clone(), mask));
    }
    // visible regions only; later objects occlude earlier ones
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            let later = masks[j].1.clone();
            let m = &mut masks[i].1;
            for (a, b) in (0..later.len()).zip(later.as_slice()) {
                if *b {
                    let (x, y) = (a % w, a / w);
                    m.set(x, y, false);
                }
            }
        }
    }
    let mut objects = Vec::new();
    if let SceneKind::TripleJunction { square, .. } = &spec.kind {
        let sq = Mask::from_fn(w, h, |x, y| square.contains(x as f64, y as f64))?;
        objects.push(("square".to_string(), sq));
    }
    objects.extend(masks);
    Ok((GrayImage::new(w, h, data)?, GroundTruth { objects }))
}

/// Adds zero-mean Gaussian noise and clamps to `[0, 1]`.
pub fn add_gaussian_noise(img: &GrayImage, stddev: f64, seed: u64) -> Result<GrayImage> {
    if !(stddev >= 0.0) || !stddev.is_finite() {
        return Err(Error::param("stddev", format!("must be >= 0, got {stddev}")));
    }
    if stddev == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, stddev).map_err(|e| Error::param("stddev", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img
        .values()
        .iter()
        .map(|&v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    GrayImage::new(img.width(), img.height(), data)
}

/// Overwrites exactly `round(fraction · N)` distinct pixels with 0 or 1,
/// each with probability one half.
pub fn add_salt_pepper(img: &GrayImage, fraction: f64, seed: u64) -> Result<GrayImage> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::param("fraction", format!("must lie in [0, 1], got {fraction}")));
    }
    let n = img.len();
    let count = (fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = img.values().to_vec();
    for i in index::sample(&mut rng, n, count) {
        data[i] = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
    }
    GrayImage::new(img.width(), img.height(), data)
}

/// Noise recipe in the `TYPE:PARAM:SEED` form, e.g. `saltpepper:0.02:7`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian { stddev: f64, seed: u64 },
    SaltPepper { fraction: f64, seed: u64 },
}

impl NoiseSpec {
    pub fn apply(&self, img: &GrayImage) -> Result<GrayImage> {
        match *self {
            NoiseSpec::Gaussian { stddev, seed } => add_gaussian_noise(img, stddev, seed),
            NoiseSpec::SaltPepper { fraction, seed } => add_salt_pepper(img, fraction, seed),
        }
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::param("noise", format!("expected TYPE:PARAM:SEED, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let param: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let seed: u64 = parts[2].trim().parse().map_err(|_| bad())?;
        match parts[0].trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" => Ok(NoiseSpec::Gaussian { stddev: param, seed }),
            "saltpepper" | "salt_pepper" | "sp" => Ok(NoiseSpec::SaltPepper { fraction: param, seed }),
            other => Err(Error::param("noise", format!("unknown noise type `{other}`"))),
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::Gaussian { stddev, seed } => write!(f, "gaussian:{stddev}:{seed}"),
            NoiseSpec::SaltPepper { fraction, seed } => write!(f, "saltpepper:{fraction}:{seed}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn distinct(img: &GrayImage) -> BTreeSet<u64> {
        img.values().iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn bimodal_disk_matches_construction() {
        let spec = SceneSpec::bimodal(128, 128);
        assert_eq!(
            spec.kind,
            SceneKind::BimodalDisk { cx: 64.0, cy: 64.0, r: 30.0, inside: 1.0, outside: 0.0 }
        );
        let (img, truth) = make_scene(&spec).unwrap();
        assert_eq!(img.at(64, 64), 1.0);
        assert_eq!(img.at(4, 4), 0.0);
        let brute = (0..128i64)
            .flat_map(|y| (0..128i64).map(move |x| (x, y)))
            .filter(|(x, y)| (x - 64).pow(2) + (y - 64).pow(2) <= 900)
            .count();
        assert_eq!(truth.primary().1.count(), brute);
        assert_eq!(truth.primary().0, "disk");
    }

    #[test]
    fn triple_junction_has_three_levels_and_three_masks() {
        let (img, truth) = make_scene(&SceneSpec::triple_junction(128, 128)).unwrap();
        let levels: BTreeSet<u64> = [0.0f64, 0.5, 1.0].iter().map(|v| v.to_bits()).collect();
        assert_eq!(distinct(&img), levels);
        let names: Vec<&str> = truth.objects.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["square", "black", "white"]);
        let sq = truth.get("square").unwrap();
        let b = truth.get("black").unwrap();
        let wh = truth.get("white").unwrap();
        assert_eq!(b.union(wh).unwrap(), *sq);
        assert_eq!(b.count(), 28 * 64);
        assert_eq!(wh.count(), 36 * 64);
    }

    #[test]
    fn four_region_masks_are_disjoint() {
        let (img, truth) = make_scene(&SceneSpec::four_region(96, 80)).unwrap();
        assert_eq!(distinct(&img).len(), 3);
        let b = truth.get("black").unwrap();
        let w = truth.get("white").unwrap();
        assert!(b.as_slice().iter().zip(w.as_slice()).all(|(p, q)| !(p & q)));
    }

    #[test]
    fn rejects_bad_geometry_and_intensities() {
        let mut spec = SceneSpec::triple_junction(64, 64);
        if let SceneKind::TripleJunction { square, .. } = &mut spec.kind {
            square.x1 = 80.0;
        }
        assert!(matches!(make_scene(&spec), Err(Error::InvalidScene(_))));

        let mut spec = SceneSpec::bimodal(64, 64);
        if let SceneKind::BimodalDisk { inside, .. } = &mut spec.kind {
            *inside = 0.0;
        }
        assert!(matches!(make_scene(&spec), Err(Error::InvalidScene(_))));
        assert!(make_scene(&SceneSpec::bimodal(2, 2)).is_err());
    }

    #[test]
    fn noise_identities_and_determinism() {
        let (img, _) = make_scene(&SceneSpec::bimodal(40, 40)).unwrap();
        assert_eq!(add_gaussian_noise(&img, 0.0, 3).unwrap(), img);
        assert_eq!(add_salt_pepper(&img, 0.0, 3).unwrap(), img);
        let a = add_salt_pepper(&img, 0.1, 9).unwrap();
        let b = add_salt_pepper(&img, 0.1, 9).unwrap();
        assert_eq!(a, b);
        let c = add_gaussian_noise(&img, 0.05, 9).unwrap();
        let d = add_gaussian_noise(&img, 0.05, 9).unwrap();
        assert_eq!(c.values(), d.values());
        assert_ne!(c, img);
        assert!(add_salt_pepper(&img, 1.5, 1).is_err());
        assert!(add_gaussian_noise(&img, -0.1, 1).is_err());
    }

    #[test]
    fn salt_pepper_overwrites_exact_count() {
        let gray = GrayImage::filled(50, 30, 0.5).unwrap();
        for (fraction, seed) in [(0.02, 7), (0.333, 1), (1.0, 2)] {
            let noisy = add_salt_pepper(&gray, fraction, seed).unwrap();
            let changed = noisy.values().iter().filter(|&&v| v != 0.5).count();
            assert_eq!(changed, (fraction * 1500.0f64).round() as usize);
            assert!(noisy.values().iter().all(|&v| v == 0.0 || v == 0.5 || v == 1.0));
        }
    }

    #[test]
    fn noise_spec_parses() {
        assert_eq!(
            "saltpepper:0.02:7".parse::<NoiseSpec>().unwrap(),
            NoiseSpec::SaltPepper { fraction: 0.02, seed: 7 }
        );
        assert_eq!(
            "gaussian:0.05:1".parse::<NoiseSpec>().unwrap().to_string(),
            "gaussian:0.05:1"
        );
        assert!("pink:1:2".parse::<NoiseSpec>().is_err());
        assert!("gaussian:0.1".parse::<NoiseSpec>().is_err());
    }
}
