//! Finite-difference derivatives at unit spacing.
//!
//! The free functions evaluate at interior pixels only. [`Padded`] wraps a
//! grid in a one-pixel mirror border so every pixel has a stencil; this is
//! the discrete Neumann condition.
//!
//! Sums are grouped so that the stencils commute exactly with grid mirrors
//! and quarter turns, e.g. `(v[x+1] + v[x-1]) - 2v` rather than left to right.
//!
//! Central differences vanish at the center of a one-pixel blob, which
//! would freeze it forever. Where the central `|∇phi|` of a distance field
//! drops below [`SHOCK_GRADIENT`] the front gradient falls back to
//! one-sided differences and the front curvature to `Δphi / |∇phi|`.

use crate::error::{Error, Result};
use crate::raster::{mirror_index, Grid, ScalarField};

/// Central gradient magnitude below which a pixel counts as a shock.
pub const SHOCK_GRADIENT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilContext {
    /// Regularizer inside the curvature denominator.
    pub epsilon: f64,
}

impl Default for StencilContext {
    fn default() -> Self {
        Self { epsilon: 1e-8 }
    }
}

impl StencilContext {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }
}

/// The nine values around a pixel, `n[dy + 1][dx + 1]`.
#[derive(Debug, Clone, Copy)]
struct Neighborhood([[f64; 3]; 3]);

impl Neighborhood {
    fn vx(&self) -> f64 {
        (self.0[1][2] - self.0[1][0]) / 2.0
    }
    fn vy(&self) -> f64 {
        (self.0[2][1] - self.0[0][1]) / 2.0
    }
    fn vxx(&self) -> f64 {
        (self.0[1][2] + self.0[1][0]) - 2.0 * self.0[1][1]
    }
    fn vyy(&self) -> f64 {
        (self.0[2][1] + self.0[0][1]) - 2.0 * self.0[1][1]
    }
    fn vxy(&self) -> f64 {
        let n = &self.0;
        ((n[2][2] + n[0][0]) - (n[0][2] + n[2][0])) / 4.0
    }
    fn grad_mag(&self) -> f64 {
        let (vx, vy) = (self.vx(), self.vy());
        (vx * vx + vy * vy).sqrt()
    }
    /// Central magnitude, except at discrete extrema and shocks where it
    /// degenerates: there the larger one-sided difference per axis is used.
    fn front_grad_mag(&self) -> f64 {
        let c = self.grad_mag();
        if c >= SHOCK_GRADIENT {
            return c;
        }
        let n = &self.0;
        let gx = (n[1][2] - n[1][1]).abs().max((n[1][1] - n[1][0]).abs());
        let gy = (n[2][1] - n[1][1]).abs().max((n[1][1] - n[0][1]).abs());
        c.max((gx * gx + gy * gy).sqrt())
    }
    /// Curvature for moving the front. At shocks the formula degenerates
    /// (it is 0 at the center of a blob); there `Δphi / |∇phi|` is used,
    /// which agrees with it on distance fields.
    fn front_curvature(&self, ctx: &StencilContext) -> f64 {
        if self.grad_mag() >= SHOCK_GRADIENT {
            return self.curvature(ctx);
        }
        let g = self.front_grad_mag();
        if g == 0.0 {
            0.0
        } else {
            (self.vxx() + self.vyy()) / g
        }
    }
    fn curvature(&self, ctx: &StencilContext) -> f64 {
        let (vx, vy) = (self.vx(), self.vy());
        let num = (self.vxx() * (vy * vy) + self.vyy() * (vx * vx)) - 2.0 * self.vxy() * (vx * vy);
        let den = (vx * vx + vy * vy) + ctx.epsilon * ctx.epsilon;
        num / (den * den.sqrt())
    }
}

fn interior<G: Grid + ?Sized>(phi: &G, x: usize, y: usize) -> Result<Neighborhood> {
    let (w, h) = phi.dims();
    if x == 0 || y == 0 || x + 1 >= w || y + 1 >= h {
        return Err(Error::BorderPixel { x, y });
    }
    let mut n = [[0.0; 3]; 3];
    for (dy, row) in n.iter_mut().enumerate() {
        for (dx, v) in row.iter_mut().enumerate() {
            *v = phi.at(x + dx - 1, y + dy - 1);
        }
    }
    Ok(Neighborhood(n))
}

/// `v[x+1] - 2v + v[x-1]`.
pub fn vxx<G: Grid + ?Sized>(phi: &G, x: usize, y: usize) -> Result<f64> {
    interior(phi, x, y).map(|n| n.vxx())
}

pub fn vyy<G: Grid + ?Sized>(phi: &G, x: usize, y: usize) -> Result<f64> {
    interior(phi, x, y).map(|n| n.vyy())
}

/// Corner formula `(v[+,+] + v[-,-] - v[+,-] - v[-,+]) / 4`.
pub fn vxy<G: Grid + ?Sized>(phi: &G, x: usize, y: usize) -> Result<f64> {
    interior(phi, x, y).map(|n| n.vxy())
}

/// Curvature of the level line through `(x, y)`:
/// `(vxx vy² - 2 vxy vx vy + vyy vx²) / (vx² + vy² + ε²)^{3/2}`.
pub fn curvature<G: Grid + ?Sized>(phi: &G, x: usize, y: usize, ctx: &StencilContext) -> Result<f64> {
    interior(phi, x, y).map(|n| n.curvature(ctx))
}

/// A grid extended by one mirrored pixel on every side.
#[derive(Debug, Clone)]
pub struct Padded {
    width: usize,
    data: Vec<f64>,
}

impl Padded {
    pub fn new<G: Grid + ?Sized>(grid: &G) -> Self {
        let (w, h) = grid.dims();
        let (pw, ph) = (w + 2, h + 2);
        let mut data = Vec::with_capacity(pw * ph);
        for py in 0..ph {
            let y = mirror_index(py as isize - 1, h);
            for px in 0..pw {
                let x = mirror_index(px as isize - 1, w);
                data.push(grid.at(x, y));
            }
        }
        Self { width: w, data }
    }

    fn hood(&self, x: usize, y: usize) -> Neighborhood {
        let pw = self.width + 2;
        let mut n = [[0.0; 3]; 3];
        for (dy, row) in n.iter_mut().enumerate() {
            let base = (y + dy) * pw + x;
            row.copy_from_slice(&self.data[base..base + 3]);
        }
        Neighborhood(n)
    }

    pub fn grad(&self, x: usize, y: usize) -> (f64, f64) {
        let n = self.hood(x, y);
        (n.vx(), n.vy())
    }

    pub fn grad_mag(&self, x: usize, y: usize) -> f64 {
        self.hood(x, y).grad_mag()
    }

    /// `|∇phi|` for advancing the front; see the module docs.
    pub fn front_grad_mag(&self, x: usize, y: usize) -> f64 {
        self.hood(x, y).front_grad_mag()
    }

    pub fn curvature(&self, x: usize, y: usize, ctx: &StencilContext) -> f64 {
        self.hood(x, y).curvature(ctx)
    }

    /// Curvature for advancing the front, with the shock fallback.
    pub fn front_curvature(&self, x: usize, y: usize, ctx: &StencilContext) -> f64 {
        self.hood(x, y).front_curvature(ctx)
    }
}

/// Curvature at every pixel with mirror boundary handling.
pub fn curvature_field<G: Grid + ?Sized>(phi: &G, ctx: &StencilContext) -> ScalarField {
    let pad = Padded::new(phi);
    let (w, h) = phi.dims();
    let data = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| pad.curvature(x, y, ctx))
        .collect();
    ScalarField::from_raw(w, h, data)
}

/// Central-difference `|∇phi|` with mirror boundary handling.
pub fn grad_mag_field<G: Grid + ?Sized>(phi: &G) -> ScalarField {
    let pad = Padded::new(phi);
    let (w, h) = phi.dims();
    let data = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| pad.grad_mag(x, y))
        .collect();
    ScalarField::from_raw(w, h, data)
}
