use super::{mirror_index, GrayImage, Grid, ScalarField};
use crate::error::{Error, Result};

/// Half-width of the sampled kernel window for scale `sigma`.
pub fn kernel_radius(sigma: f64) -> usize {
    (3.0 * (2.0 * sigma).sqrt()).ceil() as usize
}

/// Normalized 1D weights `w[k] ∝ exp(-k² / 4σ)` for `k = 0..=radius`.
///
/// The 2D kernel `exp(-|x|² / 4σ)` factors into this profile along each
/// axis, so two passes give the renormalized square-window convolution.
fn kernel_1d(sigma: f64) -> Vec<f64> {
    let radius = kernel_radius(sigma);
    let raw: Vec<f64> = (0..=radius)
        .map(|k| (-((k * k) as f64) / (4.0 * sigma)).exp())
        .collect();
    let total = raw[0] + 2.0 * raw[1..].iter().sum::<f64>();
    raw.into_iter().map(|w| w / total).collect()
}

/// Convolves with a symmetric 1D kernel along rows (`horizontal`) or columns.
fn convolve_axis(src: &[f64], width: usize, height: usize, kernel: &[f64], horizontal: bool) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let (pos, n) = if horizontal { (x, width) } else { (y, height) };
            let sample = |offset: isize| {
                let k = mirror_index(pos as isize + offset, n);
                if horizontal {
                    src[y * width + k]
                } else {
                    src[k * width + x]
                }
            };
            let mut acc = kernel[0] * sample(0);
            for (k, w) in kernel.iter().enumerate().skip(1) {
                // pair the two taps first so mirrored inputs round identically
                acc += w * (sample(-(k as isize)) + sample(k as isize));
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Smooths `img` with the kernel `exp(-|x|² / 4σ)` on a square window of
/// radius `ceil(3·√(2σ))`, normalized to unit mass, with mirror padding.
pub fn gaussian_convolve(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    let (w, h) = img.dims();
    let kernel = kernel_1d(sigma);
    let rows = convolve_axis(img.values(), w, h, &kernel, true);
    let mut both = convolve_axis(&rows, w, h, &kernel, false);
    for v in &mut both {
        *v = v.clamp(0.0, 1.0);
    }
    GrayImage::new(w, h, both)
}

/// Central differences inside, one-sided differences on the border rows
/// and columns.
pub fn gradient<G: Grid + ?Sized>(field: &G) -> (ScalarField, ScalarField) {
    let (w, h) = field.dims();
    let v = field.values();
    let mut gx = vec![0.0; v.len()];
    let mut gy = vec![0.0; v.len()];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            gx[i] = if x == 0 {
                v[i + 1] - v[i]
            } else if x == w - 1 {
                v[i] - v[i - 1]
            } else {
                (v[i + 1] - v[i - 1]) / 2.0
            };
            gy[i] = if y == 0 {
                v[i + w] - v[i]
            } else if y == h - 1 {
                v[i] - v[i - w]
            } else {
                (v[i + w] - v[i - w]) / 2.0
            };
        }
    }
    (ScalarField::from_raw(w, h, gx), ScalarField::from_raw(w, h, gy))
}

pub fn gradient_magnitude<G: Grid + ?Sized>(field: &G) -> ScalarField {
    let (gx, gy) = gradient(field);
    let (w, h) = field.dims();
    let mag = gx
        .values()
        .iter()
        .zip(gy.values())
        .map(|(a, b)| (a * a + b * b).sqrt())
        .collect();
    ScalarField::from_raw(w, h, mag)
}
