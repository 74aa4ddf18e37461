//! Numerical checks of the divergence identity behind the energy's first
//! variation, of the variation itself along circles, and of the stencils.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::levelset::{init_from_spec, InitSpec, LevelSetField};
use crate::model::{length, region_stats, scalar_energy, EdgeMap, ModelKind, ModelParams};
use crate::raster::{GrayImage, Grid, Mask, ScalarField};
use crate::stencils::{curvature_field, vxx, vxy, vyy, StencilContext};
use crate::synth::{make_scene, SceneKind, SceneSpec};

/// Default max-residual of the relaxation solver.
pub const POISSON_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 100_000;

/// Solves `-Δu = f` on the pixels of `mask` with `u = 0` everywhere else,
/// using the 5-point Laplacian and successive over-relaxation.
pub fn solve_poisson(mask: &Mask, f: &ScalarField, tol: f64, max_sweeps: usize) -> Result<ScalarField> {
    let (w, h) = mask.dims();
    if f.dims() != (w, h) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            actual: f.dims(),
        });
    }
    let inside = |x: i64, y: i64| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && mask.get(x as usize, y as usize);
    let cells: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| mask.get(x, y))
        .collect();
    let has_interior = cells.iter().any(|&(x, y)| {
        let (x, y) = (x as i64, y as i64);
        inside(x - 1, y) && inside(x + 1, y) && inside(x, y - 1) && inside(x, y + 1)
    });
    if !has_interior {
        return Err(Error::param("mask", "domain has no interior pixel"));
    }
    let mut u = vec![0.0; w * h];
    let fv = f.values();
    let get = |u: &[f64], x: i64, y: i64| if inside(x, y) { u[y as usize * w + x as usize] } else { 0.0 };
    // over-relaxation factor tuned to the domain's extent
    let extent = (cells.len() as f64).sqrt().max(2.0);
    let omega = 2.0 / (1.0 + (PI / extent).sin());
    let residual = |u: &[f64]| {
        cells
            .iter()
            .map(|&(x, y)| {
                let (xi, yi) = (x as i64, y as i64);
                let lap = get(u, xi - 1, yi) + get(u, xi + 1, yi) + get(u, xi, yi - 1) + get(u, xi, yi + 1)
                    - 4.0 * u[y * w + x];
                (lap + fv[y * w + x]).abs()
            })
            .fold(0.0, f64::max)
    };
    let mut last = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        for &(x, y) in &cells {
            let (xi, yi) = (x as i64, y as i64);
            let nb = get(&u, xi - 1, yi) + get(&u, xi + 1, yi) + get(&u, xi, yi - 1) + get(&u, xi, yi + 1);
            let i = y * w + x;
            let gs = (nb + fv[i]) / 4.0;
            u[i] += omega * (gs - u[i]);
        }
        if sweep % 10 == 0 || sweep == max_sweeps {
            last = residual(&u);
            if last <= tol {
                return Ok(ScalarField::from_raw(w, h, u));
            }
        }
    }
    Err(Error::NotConverged {
        sweeps: max_sweeps,
        residual: last,
    })
}

/// `(Σ_Ω f, boundary flux of u)`.
///
/// The flux sums, over every face between an Ω pixel `u0` and a pixel
/// outside Ω, the inward derivative extrapolated to that face from `u0`
/// and the next two pixels inward: `3·u1 − 2·u0 − u2`.
pub fn lemma1_check(mask: &Mask, f: &ScalarField, tol: f64) -> Result<(f64, f64)> {
    let u = solve_poisson(mask, f, tol, MAX_SWEEPS)?;
    let (w, h) = mask.dims();
    let inside = |x: i64, y: i64| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && mask.get(x as usize, y as usize);
    let val = |x: i64, y: i64| if inside(x, y) { u.at(x as usize, y as usize) } else { 0.0 };
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if !inside(x, y) {
                continue;
            }
            lhs += f.at(x as usize, y as usize);
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                if !inside(x + dx, y + dy) {
                    let u0 = val(x, y);
                    let u1 = val(x - dx, y - dy);
                    let u2 = val(x - 2 * dx, y - 2 * dy);
                    rhs += 3.0 * u1 - 2.0 * u0 - u2;
                }
            }
        }
    }
    Ok((lhs, rhs))
}

/// Finite-difference and predicted derivatives of the energy and the two
/// region means along the circle family `ρ ↦ C(center, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateauxReport {
    pub r: f64,
    pub delta: f64,
    pub energy_fd: f64,
    pub energy_analytic: f64,
    pub mu1_fd: f64,
    pub mu1_analytic: f64,
    pub mu2_fd: f64,
    pub mu2_analytic: f64,
}

/// `|a − b| / |b|`, 0 when both vanish.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / b.abs()
    }
}

impl GateauxReport {
    pub fn energy_error(&self) -> f64 {
        relative_error(self.energy_fd, self.energy_analytic)
    }
    pub fn mu1_error(&self) -> f64 {
        relative_error(self.mu1_fd, self.mu1_analytic)
    }
    pub fn mu2_error(&self) -> f64 {
        relative_error(self.mu2_fd, self.mu2_analytic)
    }
}

/// Samples per circle for the contour integrals.
const ARC_SAMPLES: usize = 4096;

/// Growing a circle by `dr` moves it against the inward normal, where the
/// speed `F` drives the front, so `dE/dr = ∮ F ds` with
/// `F = (μ₂ − μ₁)((I − μ₁)/|Ω| + (I − μ₂)/|Ωᶜ|) + λ/ρ` (`g ≡ 1`).
/// Likewise `dμ₁/dr = ∮ (I − μ₁)/|Ω| ds` and `dμ₂/dr = −∮ (I − μ₂)/|Ωᶜ| ds`.
/// Statistics are pixel sums at radius `r`; `I` on the circle is read from
/// the pixel containing each sample point.
pub fn radial_gateaux_check(img: &GrayImage, center: (f64, f64), r: f64, delta: f64, lambda: f64) -> Result<GateauxReport> {
    let (w, h) = img.dims();
    let (cx, cy) = center;
    let reach = r + delta;
    if !(delta > 0.0 && r - delta > 0.0) || cx - reach < 0.0 || cy - reach < 0.0 || cx + reach > (w - 1) as f64 || cy + reach > (h - 1) as f64 {
        return Err(Error::param("r", format!("circle r={r}±{delta} leaves the {w}x{h} domain")));
    }
    let circle = |rho: f64| init_from_spec(&InitSpec::circle(cx, cy, rho), w, h);
    let params = ModelParams::new(ModelKind::Ms, lambda);
    let ones = EdgeMap::ones(w, h);
    let energy = |phi: &LevelSetField| scalar_energy(img, phi, &ones, &params);
    let (lo, hi) = (circle(r - delta)?, circle(r + delta)?);
    let (s_lo, s_hi) = (region_stats(img, &lo)?, region_stats(img, &hi)?);
    let stats = region_stats(img, &circle(r)?)?;

    let (n1, n2) = (stats.area_in as f64, stats.area_out as f64);
    let (mu1, mu2) = (stats.mu1, stats.mu2);
    let ds = 2.0 * PI * r / ARC_SAMPLES as f64;
    let (mut e_int, mut m1_int, mut m2_int) = (0.0, 0.0, 0.0);
    for k in 0..ARC_SAMPLES {
        let t = 2.0 * PI * (k as f64 + 0.5) / ARC_SAMPLES as f64;
        let x = (cx + r * t.cos()).round().clamp(0.0, (w - 1) as f64) as usize;
        let y = (cy + r * t.sin()).round().clamp(0.0, (h - 1) as f64) as usize;
        let v = img.at(x, y);
        let a = (v - mu1) / n1;
        let b = (v - mu2) / n2;
        e_int += ((mu2 - mu1) * (a + b) + lambda / r) * ds;
        m1_int += a * ds;
        m2_int -= b * ds;
    }
    Ok(GateauxReport {
        r,
        delta,
        energy_fd: (energy(&hi)? - energy(&lo)?) / (2.0 * delta),
        energy_analytic: e_int,
        mu1_fd: (s_hi.mu1 - s_lo.mu1) / (2.0 * delta),
        mu1_analytic: m1_int,
        mu2_fd: (s_hi.mu2 - s_lo.mu2) / (2.0 * delta),
        mu2_analytic: m2_int,
    })
}

/// Centered finite difference of the contour length of circle SDFs.
pub fn length_derivative(width: usize, height: usize, center: (f64, f64), r: f64, delta: f64) -> Result<f64> {
    let len = |rho| init_from_spec(&InitSpec::circle(center.0, center.1, rho), width, height).map(|p| length(&p));
    Ok((len(r + delta)? - len(r - delta)?) / (2.0 * delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemma1,
    Gateaux,
    Stencils,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lemma1" => Ok(Suite::Lemma1),
            "gateaux" => Ok(Suite::Gateaux),
            "stencils" => Ok(Suite::Stencils),
            "all" => Ok(Suite::All),
            other => Err(Error::param("suite", format!("unknown suite `{other}`"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Lemma1 => "lemma1",
            Suite::Gateaux => "gateaux",
            Suite::Stencils => "stencils",
            Suite::All => "all",
        })
    }
}

/// One compared pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Relative or absolute, as named by the check.
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(suite: &str, name: String, lhs: f64, rhs: f64, error: f64, tolerance: f64) -> Self {
        Self {
            suite: suite.into(),
            name,
            lhs,
            rhs,
            error,
            tolerance,
            pass: error <= tolerance,
        }
    }

    fn flag(suite: &str, name: String, ok: bool, lhs: f64, rhs: f64) -> Self {
        Self {
            suite: suite.into(),
            name,
            lhs,
            rhs,
            error: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            pass: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

pub fn run(suite: Suite) -> Result<Report> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Stencils | Suite::All) {
        checks.extend(stencil_checks()?);
    }
    if matches!(suite, Suite::Lemma1 | Suite::All) {
        checks.extend(lemma1_checks()?);
    }
    if matches!(suite, Suite::Gateaux | Suite::All) {
        checks.extend(gateaux_checks()?);
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(Report { checks, all_pass })
}

fn poly(w: usize, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
    ScalarField::from_fn(w, w, |x, y| f(x as f64, y as f64))
}

/// Largest `|κ − 1/r|` over pixels within half a pixel of a circle.
pub fn circle_curvature_error(grid: usize, r: f64) -> Result<f64> {
    let c = grid as f64 / 2.0;
    let phi = init_from_spec(&InitSpec::circle(c, c, r), grid, grid)?;
    let k = curvature_field(&phi, &StencilContext::default());
    Ok(phi
        .values()
        .iter()
        .zip(k.values())
        .filter(|(p, _)| p.abs() <= 0.5)
        .map(|(_, k)| (k - 1.0 / r).abs())
        .fold(0.0, f64::max))
}

fn stencil_checks() -> Result<Vec<Check>> {
    const S: &str = "stencils";
    let mut out = Vec::new();
    let n = 9;
    let worst = |f: &ScalarField, op: fn(&ScalarField, usize, usize) -> Result<f64>, expect: &dyn Fn(f64, f64) -> f64| -> Result<f64> {
        let mut e: f64 = 0.0;
        for y in 1..n - 1 {
            for x in 1..n - 1 {
                e = e.max((op(f, x, y)? - expect(x as f64, y as f64)).abs());
            }
        }
        Ok(e)
    };
    let quad = poly(n, |x, y| 3.0 * x * x - 2.0 * x * y + 5.0 * y * y + x - 7.0 * y + 4.0)?;
    let e = worst(&quad, vxx, &|_, _| 6.0)?;
    out.push(Check::new(S, "vxx exact on quadratic".into(), 6.0, 6.0, e, 0.0));
    let e = worst(&quad, vyy, &|_, _| 10.0)?;
    out.push(Check::new(S, "vyy exact on quadratic".into(), 10.0, 10.0, e, 0.0));
    let e = worst(&quad, vxy, &|_, _| -2.0)?;
    out.push(Check::new(S, "vxy exact on quadratic".into(), -2.0, -2.0, e, 0.0));
    let xy = poly(n, |x, y| x * y)?;
    let e = worst(&xy, vxy, &|_, _| 1.0)?;
    out.push(Check::new(S, "vxy exact on x*y".into(), 1.0, 1.0, e, 0.0));
    let x2y2 = poly(n, |x, y| x * x * y * y)?;
    let e = worst(&x2y2, vxy, &|x, y| 4.0 * x * y)?;
    out.push(Check::new(S, "vxy exact on x^2*y^2".into(), 4.0, 4.0, e, 0.0));

    let e20 = circle_curvature_error(128, 20.0)?;
    out.push(Check::new(S, "circle r=20 curvature, relative".into(), 0.05 + e20, 0.05, e20 / 0.05, 0.05));
    let e10 = circle_curvature_error(128, 10.0)?;
    let e20f = circle_curvature_error(256, 20.0)?;
    out.push(Check::flag(S, "curvature error shrinks r=10 -> r=20".into(), e20f < e10, e20f, e10));
    Ok(out)
}

/// Center of the Poisson test disks, deliberately off the lattice.
pub const LEMMA1_CENTER: (f64, f64) = (32.3, 31.6);

/// Pixels with center strictly within `r` of `center`.
pub fn disk_mask(width: usize, height: usize, center: (f64, f64), r: f64) -> Result<Mask> {
    Mask::from_fn(width, height, |x, y| (x as f64 - center.0).hypot(y as f64 - center.1) < r)
}

/// Sources used by the identity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    One,
    Ramp,
    Bump,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::One, Source::Ramp, Source::Bump];

    pub fn name(&self) -> &'static str {
        match self {
            Source::One => "f=1",
            Source::Ramp => "x-ramp",
            Source::Bump => "bump",
        }
    }

    /// Field on a `w × h` grid for a disk of radius `r` at `center`.
    pub fn field(&self, w: usize, h: usize, center: (f64, f64), r: f64) -> Result<ScalarField> {
        let (cx, cy) = center;
        ScalarField::from_fn(w, h, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            match self {
                Source::One => 1.0,
                Source::Ramp => 1.0 + dx / r,
                Source::Bump => {
                    let s = r / 3.0;
                    (-(dx * dx + dy * dy) / (2.0 * s * s)).exp()
                }
            }
        })
    }
}

/// Relative gap `|lhs − rhs| / |lhs|` of the identity on a disk.
pub fn lemma1_gap(source: Source, r: f64) -> Result<(f64, f64, f64)> {
    let mask = disk_mask(64, 64, LEMMA1_CENTER, r)?;
    let f = source.field(64, 64, LEMMA1_CENTER, r)?;
    let (lhs, rhs) = lemma1_check(&mask, &f, POISSON_TOL)?;
    Ok((lhs, rhs, (lhs - rhs).abs() / lhs.abs()))
}

fn lemma1_checks() -> Result<Vec<Check>> {
    const S: &str = "lemma1";
    let mut out = Vec::new();
    for source in Source::ALL {
        let mut gaps = Vec::new();
        for r in [8.0, 10.0, 12.0, 16.0] {
            let (lhs, rhs, gap) = lemma1_gap(source, r)?;
            out.push(Check::new(S, format!("{} disk r={r} relative gap", source.name()), lhs, rhs, gap, 0.1));
            gaps.push(gap);
        }
        out.push(Check::flag(
            S,
            format!("{} gap shrinks r=8 -> r=16", source.name()),
            gaps[3] < gaps[0],
            gaps[3],
            gaps[0],
        ));
    }
    let mask = disk_mask(64, 64, LEMMA1_CENTER, 10.0)?;
    let (lhs, rhs) = lemma1_check(&mask, &ScalarField::zeros(64, 64), POISSON_TOL)?;
    out.push(Check::new(S, "f=0 both sides vanish".into(), lhs, rhs, lhs.abs().max(rhs.abs()), 1e-12));
    let mut point = ScalarField::zeros(64, 64);
    point.data_mut()[32 * 64 + 32] = 1.0;
    let (lhs, rhs) = lemma1_check(&mask, &point, POISSON_TOL)?;
    out.push(Check::new(S, "unit point source".into(), lhs, rhs, (lhs - rhs).abs(), 0.1));
    Ok(out)
}

/// Off-lattice center of the circle family in the radial checks.
pub const GATEAUX_CENTER: (f64, f64) = (64.3, 63.6);

/// White disk of radius `disk_r` at [`GATEAUX_CENTER`] on black, 128².
pub fn gateaux_scene(disk_r: f64) -> Result<GrayImage> {
    let spec = SceneSpec {
        width: 128,
        height: 128,
        kind: SceneKind::BimodalDisk {
            cx: GATEAUX_CENTER.0,
            cy: GATEAUX_CENTER.1,
            r: disk_r,
            inside: 1.0,
            outside: 0.0,
        },
    };
    Ok(make_scene(&spec)?.0)
}

fn gateaux_checks() -> Result<Vec<Check>> {
    const S: &str = "gateaux";
    let mut out = Vec::new();
    let outer = gateaux_scene(10.0)?;
    for r in [15.0, 20.0, 25.0] {
        for delta in [1.0, 0.5] {
            let g = radial_gateaux_check(&outer, GATEAUX_CENTER, r, delta, 0.0)?;
            out.push(Check::new(S, format!("dE/dr r={r} delta={delta}"), g.energy_fd, g.energy_analytic, g.energy_error(), 0.05));
            out.push(Check::new(S, format!("dmu1/dr r={r} delta={delta}"), g.mu1_fd, g.mu1_analytic, g.mu1_error(), 0.05));
            out.push(Check::flag(
                S,
                format!("dmu1/dr sign r={r} delta={delta}"),
                g.mu1_fd.signum() == g.mu1_analytic.signum(),
                g.mu1_fd,
                g.mu1_analytic,
            ));
        }
    }
    // circles inside a larger disk exercise the outside mean
    let inner = gateaux_scene(30.0)?;
    for r in [12.0, 16.0, 20.0] {
        for delta in [1.0, 0.5] {
            let g = radial_gateaux_check(&inner, GATEAUX_CENTER, r, delta, 0.0)?;
            out.push(Check::new(S, format!("dmu2/dr inner r={r} delta={delta}"), g.mu2_fd, g.mu2_analytic, g.mu2_error(), 0.05));
            out.push(Check::new(S, format!("dE/dr inner r={r} delta={delta}"), g.energy_fd, g.energy_analytic, g.energy_error(), 0.05));
        }
    }
    let flat = GrayImage::filled(128, 128, 0.5)?;
    let zero = radial_gateaux_check(&flat, GATEAUX_CENTER, 20.0, 1.0, 0.0)?;
    out.push(Check::new(S, "constant image, lambda=0".into(), zero.energy_fd, zero.energy_analytic, zero.energy_fd.abs().max(zero.energy_analytic.abs()), 1e-12));
    for r in [15.0, 20.0, 25.0] {
        let g = radial_gateaux_check(&flat, GATEAUX_CENTER, r, 1.0, 1.0)?;
        let tau = 2.0 * PI;
        out.push(Check::new(S, format!("length term r={r}"), g.energy_fd, tau, relative_error(g.energy_fd, tau), 0.05));
    }
    Ok(out)
}
