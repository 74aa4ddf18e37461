//! Region statistics, the edge indicator, the monitored energy and the
//! normal speed of the contour.
//!
//! Region sums are accumulated in fixed point so that every quantity the
//! speed depends on (`μ₂ − μ₁`, `I − μ₁`, `I − μ₂`) is formed from exact
//! integer differences. Adding a constant to the image then leaves the
//! speed bit-identical whenever the shifted intensities are representable.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levelset::{front_pixels, LevelSetField, NarrowBand};
use crate::raster::{gaussian_convolve, gradient_magnitude, GrayImage, Grid, ScalarField};
use crate::stencils::{Padded, StencilContext};

/// Fractional bits of the fixed-point intensity sums.
const FRAC_BITS: i32 = 40;
const SCALE: f64 = (1u64 << FRAC_BITS) as f64;

/// Half-width of the smoothed delta used for the contour length.
pub const DELTA_WIDTH: f64 = 1.5;

/// The grid cannot resolve curvature above one per pixel; larger stencil
/// values only appear near the centers of shrinking blobs, where they would
/// dominate the adaptive time step.
pub const MAX_CURVATURE: f64 = 1.0;

#[inline]
fn fixed(v: f64) -> i128 {
    (v * SCALE).round() as i128
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Plain mean separation (`g ≡ 1`).
    Ms,
    /// Edge-weighted mean separation.
    Ems,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ms" => Ok(ModelKind::Ms),
            "ems" => Ok(ModelKind::Ems),
            other => Err(Error::param("model", format!("expected `ms` or `ems`, got `{other}`"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Ms => "ms",
            ModelKind::Ems => "ems",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub kind: ModelKind,
    /// Weight of the length term.
    pub lambda: f64,
    /// Smoothing scale of the edge indicator.
    pub sigma: f64,
    /// Gradient gain `k` in `g = 1 / (1 + k·|∇(G_σ * I)|)`.
    pub edge_gain: f64,
}

impl ModelParams {
    pub fn new(kind: ModelKind, lambda: f64) -> Self {
        Self {
            kind,
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::param("lambda", format!("must be >= 0, got {}", self.lambda)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::param("sigma", format!("must be positive, got {}", self.sigma)));
        }
        if !(self.edge_gain > 0.0) || !self.edge_gain.is_finite() {
            return Err(Error::param("edge_gain", format!("must be positive, got {}", self.edge_gain)));
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            kind: ModelKind::Ems,
            lambda: 0.0,
            sigma: 1.0,
            edge_gain: 100.0,
        }
    }
}

/// Edge indicator `g ∈ (0, 1]`, fixed for a whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub g: ScalarField,
}

impl EdgeMap {
    /// `g ≡ 1`.
    pub fn ones(width: usize, height: usize) -> Self {
        Self {
            g: ScalarField::from_raw(width, height, vec![1.0; width * height]),
        }
    }

    /// The indicator a model actually uses: `g` for EMS, ones for MS.
    pub fn for_model(img: &GrayImage, params: &ModelParams) -> Result<Self> {
        match params.kind {
            ModelKind::Ms => Ok(Self::ones(img.width(), img.height())),
            ModelKind::Ems => edge_map_with_gain(img, params.sigma, params.edge_gain),
        }
    }
}

/// `g = 1 / (1 + |∇(G_σ * I)|)`.
pub fn edge_map(img: &GrayImage, sigma: f64) -> Result<EdgeMap> {
    edge_map_with_gain(img, sigma, 1.0)
}

pub fn edge_map_with_gain(img: &GrayImage, sigma: f64, gain: f64) -> Result<EdgeMap> {
    // work on I - min(I) so a global offset cannot perturb the rounding
    let (lo, _) = img.min_max();
    let (w, h) = img.dims();
    let based = GrayImage::new(w, h, img.values().iter().map(|v| v - lo).collect())?;
    let smooth = gaussian_convolve(&based, sigma)?;
    let mag = gradient_magnitude(&smooth);
    let g = mag.values().iter().map(|m| 1.0 / (1.0 + gain * m)).collect();
    Ok(EdgeMap {
        g: ScalarField::from_raw(w, h, g),
    })
}

/// Means and areas of `{phi < 0}` and `{phi >= 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionStats {
    pub mu1: f64,
    pub mu2: f64,
    pub area_in: usize,
    pub area_out: usize,
    #[serde(skip)]
    sum_in: i128,
    #[serde(skip)]
    sum_out: i128,
}

impl RegionStats {
    /// `μ₂ − μ₁` from the exact sums.
    pub fn mean_gap(&self) -> f64 {
        let (n1, n2) = (self.area_in as i128, self.area_out as i128);
        let num = self.sum_out * n1 - self.sum_in * n2;
        num as f64 / (n1 * n2) as f64 / SCALE
    }

    /// `(I − μ₁) / |Ω|` for a pixel value.
    fn inside_term(&self, v: f64) -> f64 {
        let n1 = self.area_in as i128;
        (n1 * fixed(v) - self.sum_in) as f64 / (n1 * n1) as f64 / SCALE
    }

    /// `(I − μ₂) / |Ωᶜ|` for a pixel value.
    fn outside_term(&self, v: f64) -> f64 {
        let n2 = self.area_out as i128;
        (n2 * fixed(v) - self.sum_out) as f64 / (n2 * n2) as f64 / SCALE
    }
}

pub fn region_stats(img: &GrayImage, phi: &LevelSetField) -> Result<RegionStats> {
    if img.dims() != phi.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: phi.dims(),
        });
    }
    let (mut s1, mut s2, mut n1, mut n2) = (0i128, 0i128, 0usize, 0usize);
    for (&v, &p) in img.values().iter().zip(phi.values()) {
        if p < 0.0 {
            s1 += fixed(v);
            n1 += 1;
        } else {
            s2 += fixed(v);
            n2 += 1;
        }
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::FrontVanished);
    }
    Ok(RegionStats {
        mu1: s1 as f64 / n1 as f64 / SCALE,
        mu2: s2 as f64 / n2 as f64 / SCALE,
        area_in: n1,
        area_out: n2,
        sum_in: s1,
        sum_out: s2,
    })
}

/// Smoothed Dirac `δ_ε(t) = (1 + cos(πt/ε)) / 2ε` on `|t| ≤ ε`.
pub fn smoothed_delta(t: f64) -> f64 {
    if t.abs() > DELTA_WIDTH {
        0.0
    } else {
        (1.0 + (std::f64::consts::PI * t / DELTA_WIDTH).cos()) / (2.0 * DELTA_WIDTH)
    }
}

/// Contour length `Σ δ_ε(phi)·|∇phi|`.
pub fn length(phi: &LevelSetField) -> f64 {
    let pad = Padded::new(phi);
    let (w, h) = phi.dims();
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let d = smoothed_delta(phi.at(x, y));
            if d > 0.0 {
                total += d * pad.grad_mag(x, y);
            }
        }
    }
    total
}

/// Mean of `g` over pixels adjacent to the zero crossing.
pub fn front_mean(edge: &EdgeMap, phi: &LevelSetField) -> f64 {
    let front = front_pixels(phi);
    if front.is_empty() {
        return 1.0;
    }
    let g = edge.g.values();
    front.iter().map(|&i| g[i]).sum::<f64>() / front.len() as f64
}

/// Monitored energy `−½·ḡ·(μ₁ − μ₂)² + λ·Len`, with `ḡ = 1` for MS.
pub fn scalar_energy(img: &GrayImage, phi: &LevelSetField, edge: &EdgeMap, params: &ModelParams) -> Result<f64> {
    let stats = region_stats(img, phi)?;
    let gbar = match params.kind {
        ModelKind::Ms => 1.0,
        ModelKind::Ems => front_mean(edge, phi),
    };
    let gap = stats.mean_gap();
    let len = if params.lambda > 0.0 { length(phi) } else { 0.0 };
    Ok(-0.5 * gbar * gap * gap + params.lambda * len)
}

/// Speed `F` and `|∇phi|` on the band; both zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity {
    pub speed: ScalarField,
    pub grad_mag: ScalarField,
}

impl Velocity {
    /// `max |F·|∇phi||` over the band.
    pub fn max_rate(&self, band: &NarrowBand) -> f64 {
        let (s, g) = (self.speed.values(), self.grad_mag.values());
        band.indices.iter().fold(0.0, |m, &i| m.max((s[i] * g[i]).abs()))
    }
}

/// `F = g·(μ₂ − μ₁)·((I − μ₁)/|Ω| + (I − μ₂)/|Ωᶜ|) + λ·κ` at band pixels.
/// Positive `F` raises `phi`, i.e. moves the front inward.
pub fn velocity_field(
    img: &GrayImage,
    phi: &LevelSetField,
    edge: &EdgeMap,
    stats: &RegionStats,
    params: &ModelParams,
    band: &NarrowBand,
    ctx: &StencilContext,
) -> Result<Velocity> {
    if band.is_empty() {
        return Err(Error::FrontVanished);
    }
    let (w, h) = phi.dims();
    let pad = Padded::new(phi);
    let gap = stats.mean_gap();
    let mut speed = vec![0.0; w * h];
    let mut grad = vec![0.0; w * h];
    let (iv, gv) = (img.values(), edge.g.values());
    for &i in &band.indices {
        let (x, y) = (i % w, i / w);
        let region = gap * (stats.inside_term(iv[i]) + stats.outside_term(iv[i]));
        let weighted = match params.kind {
            ModelKind::Ms => region,
            ModelKind::Ems => gv[i] * region,
        };
        let curv = if params.lambda > 0.0 {
            params.lambda * pad.front_curvature(x, y, ctx).clamp(-MAX_CURVATURE, MAX_CURVATURE)
        } else {
            0.0
        };
        speed[i] = weighted + curv;
        grad[i] = pad.front_grad_mag(x, y);
    }
    Ok(Velocity {
        speed: ScalarField::from_raw(w, h, speed),
        grad_mag: ScalarField::from_raw(w, h, grad),
    })
}
