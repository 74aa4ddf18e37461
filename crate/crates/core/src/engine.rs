//! Explicit narrow-band evolution of the level set.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levelset::{
    init_from_spec, interior_mask, narrow_band, redistance_banded, InitSpec, LevelSetField, NarrowBand,
};
use crate::model::{region_stats, scalar_energy, velocity_field, EdgeMap, ModelParams, Velocity};
use crate::raster::{GrayImage, Grid, Mask};
use crate::stencils::{Padded, StencilContext};

/// Band pixels closer than this to the band edge force an early rebuild,
/// so stencils never read clamped values next to the front.
const BAND_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveParams {
    pub model: ModelParams,
    /// Largest per-iteration front displacement, in pixels.
    pub dt_safety: f64,
    pub band_beta: f64,
    pub reinit_every: usize,
    pub max_iters: usize,
    /// Converged once fewer than this fraction of pixels flip...
    pub stop_flip_fraction: f64,
    /// ...for this many consecutive iterations.
    pub stop_window: usize,
    /// Keep the interior mask every this many iterations; 0 disables.
    pub snapshot_every: usize,
    /// Recorded for noise reproducibility; the evolution itself is
    /// deterministic and draws no random numbers.
    pub seed: u64,
}

impl Default for EvolveParams {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            dt_safety: 0.45,
            band_beta: 6.0,
            reinit_every: 25,
            max_iters: 2000,
            stop_flip_fraction: 1e-4,
            stop_window: 10,
            snapshot_every: 0,
            seed: 0,
        }
    }
}

impl EvolveParams {
    pub fn with_model(model: ModelParams) -> Self {
        Self {
            model,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::param("dt_safety", format!("must lie in (0, 1], got {}", self.dt_safety)));
        }
        if !(self.band_beta >= 2.0) || !self.band_beta.is_finite() {
            return Err(Error::param("band_beta", format!("must be >= 2, got {}", self.band_beta)));
        }
        if self.reinit_every == 0 {
            return Err(Error::param("reinit_every", "must be >= 1"));
        }
        if !(self.stop_flip_fraction >= 0.0 && self.stop_flip_fraction < 1.0) {
            return Err(Error::param(
                "stop_flip_fraction",
                format!("must lie in [0, 1), got {}", self.stop_flip_fraction),
            ));
        }
        if self.stop_window == 0 {
            return Err(Error::param("stop_window", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    FrontVanished,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
            Termination::FrontVanished => "front_vanished",
        })
    }
}

/// State after one completed iteration; entry 0 is the initial field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub energy: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub area_in: usize,
    /// Whether the field was redistanced at the end of this iteration.
    #[serde(skip)]
    pub reinitialized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub final_mask: Mask,
    pub final_phi: LevelSetField,
    pub iterations: usize,
    pub termination: Termination,
    pub energy_trace: Vec<TraceEntry>,
    pub snapshots: Vec<(usize, Mask)>,
}

impl SegmentationResult {
    /// The trace as CSV with a header row.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,energy,mu1,mu2,area_in\n");
        for e in &self.energy_trace {
            out.push_str(&format!("{},{:e},{:e},{:e},{}\n", e.iter, e.energy, e.mu1, e.mu2, e.area_in));
        }
        out
    }
}

/// `phi + dt·F·|∇phi|` on band pixels, `|∇phi|` by central differences
/// with mirrored borders (one-sided at shocks); other pixels are copied.
pub fn step(phi: &LevelSetField, speed: &crate::raster::ScalarField, band: &NarrowBand, dt: f64) -> Result<LevelSetField> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    let pad = Padded::new(phi);
    let w = phi.width();
    let s = speed.values();
    let mut out = phi.values().to_vec();
    for &i in &band.indices {
        out[i] += dt * s[i] * pad.front_grad_mag(i % w, i / w);
    }
    Ok(LevelSetField::from_raw(w, phi.height(), out))
}

fn apply(phi: &mut LevelSetField, vel: &Velocity, band: &NarrowBand, dt: f64) {
    let (s, g) = (vel.speed.values(), vel.grad_mag.values());
    let data = phi.data_mut();
    for &i in &band.indices {
        data[i] += dt * s[i] * g[i];
    }
}

/// Band pixels with a 4-neighbor outside the band.
fn band_rim(band: &NarrowBand, width: usize, height: usize) -> Vec<usize> {
    let mut inside = vec![false; width * height];
    for &i in &band.indices {
        inside[i] = true;
    }
    band.indices
        .iter()
        .copied()
        .filter(|&i| {
            let (x, y) = (i % width, i / width);
            (x > 0 && !inside[i - 1])
                || (x + 1 < width && !inside[i + 1])
                || (y > 0 && !inside[i - width])
                || (y + 1 < height && !inside[i + width])
        })
        .collect()
}

struct Band {
    band: NarrowBand,
    rim: Vec<usize>,
}

impl Band {
    fn build(phi: &LevelSetField, beta: f64) -> Result<Self> {
        let band = narrow_band(phi, beta)?;
        let rim = band_rim(&band, phi.width(), phi.height());
        Ok(Self { band, rim })
    }

    fn near_edge(&self, phi: &LevelSetField) -> bool {
        let v = phi.values();
        self.rim.iter().any(|&i| v[i].abs() < BAND_MARGIN)
    }
}

fn entry(img: &GrayImage, phi: &LevelSetField, edge: &EdgeMap, model: &ModelParams, iter: usize, reinitialized: bool) -> Result<TraceEntry> {
    let stats = region_stats(img, phi)?;
    Ok(TraceEntry {
        iter,
        energy: scalar_energy(img, phi, edge, model)?,
        mu1: stats.mu1,
        mu2: stats.mu2,
        area_in: stats.area_in,
        reinitialized,
    })
}

/// Evolves the contour given by `init` on `img` until it settles, the
/// iteration budget runs out, or the front disappears.
pub fn evolve(img: &GrayImage, init: &InitSpec, params: &EvolveParams) -> Result<SegmentationResult> {
    let phi0 = init_from_spec(init, img.width(), img.height())?;
    evolve_from(img, phi0, params)
}

/// As [`evolve`] but from an explicit initial field.
pub fn evolve_from(img: &GrayImage, phi0: LevelSetField, params: &EvolveParams) -> Result<SegmentationResult> {
    params.validate()?;
    if img.dims() != phi0.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: phi0.dims(),
        });
    }
    let ctx = StencilContext::default();
    let edge = EdgeMap::for_model(img, &params.model)?;
    let n = img.len();
    let finish = |phi: LevelSetField, iterations, termination, trace, snapshots| SegmentationResult {
        final_mask: interior_mask(&phi),
        final_phi: phi,
        iterations,
        termination,
        energy_trace: trace,
        snapshots,
    };

    let mut phi = match redistance_banded(&phi0, params.band_beta) {
        Ok(p) => p,
        Err(Error::FrontVanished) => return Ok(finish(phi0, 0, Termination::FrontVanished, Vec::new(), Vec::new())),
        Err(e) => return Err(e),
    };
    let mut mask = interior_mask(&phi);
    if mask.count() == 0 || mask.count() == n {
        return Ok(finish(phi, 0, Termination::FrontVanished, Vec::new(), Vec::new()));
    }
    let mut band = Band::build(&phi, params.band_beta)?;
    let mut trace = vec![entry(img, &phi, &edge, &params.model, 0, true)?];
    let mut snapshots = Vec::new();
    let flip_limit = params.stop_flip_fraction * n as f64;
    let mut quiet = 0usize;
    let mut since_reinit = 0usize;

    for it in 1..=params.max_iters {
        let stats = region_stats(img, &phi)?;
        let vel = velocity_field(img, &phi, &edge, &stats, &params.model, &band.band, &ctx)?;
        let dt = params.dt_safety / (vel.max_rate(&band.band) + 1e-12);
        let mut next = phi.clone();
        apply(&mut next, &vel, &band.band, dt);

        let next_mask = interior_mask(&next);
        let inside = next_mask.count();
        if inside == 0 || inside == n {
            return Ok(finish(next, it - 1, Termination::FrontVanished, trace, snapshots));
        }
        let flips = mask.hamming(&next_mask)?;
        phi = next;
        mask = next_mask;

        since_reinit += 1;
        let reinit = since_reinit >= params.reinit_every || band.near_edge(&phi);
        if reinit {
            phi = redistance_banded(&phi, params.band_beta)?;
            band = Band::build(&phi, params.band_beta)?;
            since_reinit = 0;
        }

        trace.push(entry(img, &phi, &edge, &params.model, it, reinit)?);
        if params.snapshot_every > 0 && it % params.snapshot_every == 0 {
            snapshots.push((it, mask.clone()));
        }

        if (flips as f64) < flip_limit {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= params.stop_window {
            return Ok(finish(phi, it, Termination::Converged, trace, snapshots));
        }
    }
    Ok(finish(phi, params.max_iters, Termination::MaxIters, trace, snapshots))
}
