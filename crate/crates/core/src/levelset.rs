//! Signed distance embeddings of contours.
//!
//! Convention: `phi < 0` strictly inside, `phi >= 0` outside, values in pixels.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::{load_mask, Grid, Mask, ScalarField, MIN_DIM};

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField {
    width: usize,
    height: usize,
    phi: Vec<f64>,
}

impl LevelSetField {
    pub fn new(width: usize, height: usize, phi: Vec<f64>) -> Result<Self> {
        ScalarField::new(width, height, phi).map(Self::from)
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        ScalarField::from_fn(width, height, f).map(Self::from)
    }

    pub(crate) fn from_raw(width: usize, height: usize, phi: Vec<f64>) -> Self {
        debug_assert_eq!(phi.len(), width * height);
        Self { width, height, phi }
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.phi
    }

    pub fn into_data(self) -> Vec<f64> {
        self.phi
    }

    pub fn mirror_x(&self) -> Self {
        let phi = self
            .phi
            .chunks(self.width)
            .flat_map(|row| row.iter().rev().copied())
            .collect();
        Self::from_raw(self.width, self.height, phi)
    }

    /// `phi -> -phi`; note pixels at exactly zero stay outside.
    pub fn negated(&self) -> Self {
        Self::from_raw(self.width, self.height, self.phi.iter().map(|v| -v).collect())
    }
}

impl From<ScalarField> for LevelSetField {
    fn from(f: ScalarField) -> Self {
        let (w, h) = f.dims();
        Self::from_raw(w, h, f.into_data())
    }
}

impl Grid for LevelSetField {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn values(&self) -> &[f64] {
        &self.phi
    }
}

/// One shape of an initial contour.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Circle { cx: f64, cy: f64, r: f64 },
    /// Inclusive corners `[x0, x1] × [y0, y1]`.
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    /// `rows × cols` circles of radius `r`, centers `spacing` apart, the
    /// whole lattice centered on the image.
    Grid { rows: usize, cols: usize, r: f64, spacing: f64 },
    Mask(Mask),
    MaskFile(PathBuf),
}

/// Union of primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub primitives: Vec<Primitive>,
}

impl InitSpec {
    pub fn new(primitives: Vec<Primitive>) -> Self {
        Self { primitives }
    }

    pub fn circle(cx: f64, cy: f64, r: f64) -> Self {
        Self::new(vec![Primitive::Circle { cx, cy, r }])
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(vec![Primitive::Rect { x0, y0, x1, y1 }])
    }

    /// Horizontal mirror image on a grid of the given width.
    pub fn mirror_x(&self, width: usize) -> Self {
        let xm = (width - 1) as f64;
        let primitives = self
            .primitives
            .iter()
            .map(|p| match p {
                Primitive::Circle { cx, cy, r } => Primitive::Circle { cx: xm - cx, cy: *cy, r: *r },
                Primitive::Rect { x0, y0, x1, y1 } => Primitive::Rect {
                    x0: xm - x1,
                    y0: *y0,
                    x1: xm - x0,
                    y1: *y1,
                },
                Primitive::Mask(m) => Primitive::Mask(m.mirror_x()),
                other => other.clone(),
            })
            .collect();
        Self { primitives }
    }
}

fn parse_numbers(kind: &str, body: &str, n: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = body
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidInit(format!("`{kind}` expects {n} numbers, got `{body}`")))?;
    if vals.len() != n || vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInit(format!("`{kind}` expects {n} numbers, got `{body}`")));
    }
    Ok(vals)
}

impl FromStr for Primitive {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::InvalidInit(format!("expected KIND:ARGS, got `{s}`")))?;
        let kind = kind.trim().to_ascii_lowercase();
        match kind.as_str() {
            "circle" => {
                let v = parse_numbers(&kind, body, 3)?;
                Ok(Primitive::Circle { cx: v[0], cy: v[1], r: v[2] })
            }
            "rect" => {
                let v = parse_numbers(&kind, body, 4)?;
                Ok(Primitive::Rect { x0: v[0], y0: v[1], x1: v[2], y1: v[3] })
            }
            "grid" => {
                let v = parse_numbers(&kind, body, 4)?;
                let count = |x: f64, what: &str| {
                    if x >= 1.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        Err(Error::InvalidInit(format!("grid {what} must be a positive integer")))
                    }
                };
                Ok(Primitive::Grid {
                    rows: count(v[0], "rows")?,
                    cols: count(v[1], "cols")?,
                    r: v[2],
                    spacing: v[3],
                })
            }
            "mask" => Ok(Primitive::MaskFile(PathBuf::from(body.trim()))),
            other => Err(Error::InvalidInit(format!("unknown primitive `{other}`"))),
        }
    }
}

impl FromStr for InitSpec {
    type Err = Error;

    /// Primitives joined by `;`, e.g. `circle:30,30,8;rect:50,10,70,40`.
    fn from_str(s: &str) -> Result<Self> {
        let primitives = s
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { primitives })
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Primitive::Circle { cx, cy, r } => write!(f, "circle:{cx},{cy},{r}"),
            Primitive::Rect { x0, y0, x1, y1 } => write!(f, "rect:{x0},{y0},{x1},{y1}"),
            Primitive::Grid { rows, cols, r, spacing } => write!(f, "grid:{rows},{cols},{r},{spacing}"),
            Primitive::Mask(m) => write!(f, "mask:<{}x{} in memory>", m.width(), m.height()),
            Primitive::MaskFile(p) => write!(f, "mask:{}", p.display()),
        }
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.primitives.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

fn circle_sdf(x: f64, y: f64, cx: f64, cy: f64, r: f64) -> f64 {
    (x - cx).hypot(y - cy) - r
}

fn rect_sdf(x: f64, y: f64, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let qx = (x0 - x).max(x - x1);
    let qy = (y0 - y).max(y - y1);
    qx.max(0.0).hypot(qy.max(0.0)) + qx.max(qy).min(0.0)
}

/// Signed distance to the boundary of a mask, measured to the cell faces
/// separating inside pixels from outside ones.
fn mask_sdf(mask: &Mask) -> Result<Vec<f64>> {
    let (w, h) = mask.dims();
    let half = mask.as_slice().iter().map(|&m| if m { -0.5 } else { 0.5 }).collect();
    Ok(redistance(&LevelSetField::from_raw(w, h, half))?.into_data())
}

fn primitive_sdf(p: &Primitive, width: usize, height: usize) -> Result<Vec<f64>> {
    let sample = |f: &dyn Fn(f64, f64) -> f64| {
        (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x as f64, y as f64))
            .collect::<Vec<f64>>()
    };
    let field = match p {
        Primitive::Circle { cx, cy, r } => {
            if !(*r > 0.0) {
                return Err(Error::InvalidInit(format!("circle radius must be positive, got {r}")));
            }
            sample(&|x, y| circle_sdf(x, y, *cx, *cy, *r))
        }
        Primitive::Rect { x0, y0, x1, y1 } => {
            if !(x0 < x1 && y0 < y1) {
                return Err(Error::InvalidInit(format!("rect corners out of order: {p}")));
            }
            sample(&|x, y| rect_sdf(x, y, *x0, *y0, *x1, *y1))
        }
        Primitive::Grid { rows, cols, r, spacing } => {
            if !(*r > 0.0 && *spacing > 0.0) || *rows == 0 || *cols == 0 {
                return Err(Error::InvalidInit(format!("invalid grid {p}")));
            }
            let ox = (width - 1) as f64 / 2.0 - (*cols - 1) as f64 * spacing / 2.0;
            let oy = (height - 1) as f64 / 2.0 - (*rows - 1) as f64 * spacing / 2.0;
            sample(&|x, y| {
                let mut d = f64::INFINITY;
                for i in 0..*rows {
                    for j in 0..*cols {
                        let c = circle_sdf(x, y, ox + j as f64 * spacing, oy + i as f64 * spacing, *r);
                        d = d.min(c);
                    }
                }
                d
            })
        }
        Primitive::Mask(m) => {
            if m.dims() != (width, height) {
                return Err(Error::DimensionMismatch {
                    expected: (width, height),
                    actual: m.dims(),
                });
            }
            if m.count() == m.len() {
                // nothing outside: every pixel is deep inside
                vec![-((width + height) as f64); width * height]
            } else {
                mask_sdf(m)?
            }
        }
        Primitive::MaskFile(path) => return primitive_sdf(&Primitive::Mask(load_mask(path)?), width, height),
    };
    if !field.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInit(format!("`{p}` contains no pixel of the {width}x{height} image")));
    }
    Ok(field)
}

/// Signed distance field of the union of the spec's primitives.
pub fn init_from_spec(spec: &InitSpec, width: usize, height: usize) -> Result<LevelSetField> {
    if width < MIN_DIM || height < MIN_DIM {
        return Err(Error::TooSmall { width, height });
    }
    if spec.primitives.is_empty() {
        return Err(Error::InvalidInit("no primitives".into()));
    }
    let mut phi = vec![f64::INFINITY; width * height];
    for p in &spec.primitives {
        for (a, b) in phi.iter_mut().zip(primitive_sdf(p, width, height)?) {
            *a = a.min(b);
        }
    }
    Ok(LevelSetField::from_raw(width, height, phi))
}

pub fn interior_mask(phi: &LevelSetField) -> Mask {
    let (w, h) = phi.dims();
    Mask::new(w, h, phi.values().iter().map(|&v| v < 0.0).collect()).expect("valid dims")
}

/// Pixels with a 4-neighbor of opposite inside/outside state.
pub fn front_pixels(phi: &LevelSetField) -> Vec<usize> {
    let (w, h) = phi.dims();
    let v = phi.values();
    let inside = |i: usize| v[i] < 0.0;
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let s = inside(i);
            let differs = (x > 0 && inside(i - 1) != s)
                || (x + 1 < w && inside(i + 1) != s)
                || (y > 0 && inside(i - w) != s)
                || (y + 1 < h && inside(i + w) != s);
            if differs {
                out.push(i);
            }
        }
    }
    out
}

/// A front point as an integer anchor plus a sub-pixel offset, so that
/// distances can be formed from exact integer differences.
#[derive(Debug, Clone, Copy)]
struct FrontPoint {
    ix: i64,
    iy: i64,
    fx: f64,
    fy: f64,
}

impl FrontPoint {
    fn rel(&self, px: i64, py: i64) -> (f64, f64) {
        ((self.ix - px) as f64 + self.fx, (self.iy - py) as f64 + self.fy)
    }
}

/// Crossing on the grid edge from pixel `a` to its neighbor `b`
/// (`dx, dy` unit step); measured from whichever endpoint is inside.
fn crossing(ax: usize, ay: usize, dx: i64, dy: i64, va: f64, vb: f64) -> FrontPoint {
    let (ax, ay) = (ax as i64, ay as i64);
    let (bx, by) = (ax + dx, ay + dy);
    let (ix, iy, vin, vout, sx, sy) = if va < 0.0 {
        (ax, ay, va, vb, dx, dy)
    } else {
        (bx, by, vb, va, -dx, -dy)
    };
    let t = vin / (vin - vout);
    FrontPoint {
        ix,
        iy,
        fx: sx as f64 * t,
        fy: sy as f64 * t,
    }
}

/// Piecewise-linear zero set: one or two segments per 2×2 cell.
fn front_segments(phi: &LevelSetField) -> Vec<(FrontPoint, FrontPoint)> {
    let (w, h) = phi.dims();
    let v = phi.values();
    let mut segs = Vec::new();
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            let tl = v[y * w + x];
            let tr = v[y * w + x + 1];
            let bl = v[(y + 1) * w + x];
            let br = v[(y + 1) * w + x + 1];
            let (itl, itr, ibl, ibr) = (tl < 0.0, tr < 0.0, bl < 0.0, br < 0.0);
            let top = (itl != itr).then(|| crossing(x, y, 1, 0, tl, tr));
            let bottom = (ibl != ibr).then(|| crossing(x, y + 1, 1, 0, bl, br));
            let left = (itl != ibl).then(|| crossing(x, y, 0, 1, tl, bl));
            let right = (itr != ibr).then(|| crossing(x + 1, y, 0, 1, tr, br));
            match (top, right, bottom, left) {
                (Some(t), Some(r), Some(b), Some(l)) => {
                    let center_inside = ((tl + tr) + (bl + br)) < 0.0;
                    if center_inside == itl {
                        // tl and br joined through the center
                        segs.push((t, r));
                        segs.push((b, l));
                    } else {
                        segs.push((l, t));
                        segs.push((r, b));
                    }
                }
                (a, b, c, d) => {
                    let pts: Vec<FrontPoint> = [a, b, c, d].into_iter().flatten().collect();
                    if pts.len() == 2 {
                        segs.push((pts[0], pts[1]));
                    }
                }
            }
        }
    }
    segs
}

/// Distance from the origin to segment `ab`, symmetric in `a` and `b`.
fn origin_segment_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let from = |p: (f64, f64), q: (f64, f64)| {
        let d = (q.0 - p.0, q.1 - p.1);
        let dd = d.0 * d.0 + d.1 * d.1;
        let t = if dd > 0.0 {
            (-(p.0 * d.0 + p.1 * d.1) / dd).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (p.0 + t * d.0).hypot(p.1 + t * d.1)
    };
    from(a, b).min(from(b, a))
}

fn signed(d: f64, inside: bool) -> f64 {
    if inside {
        // a pixel exactly on the front still has to read as inside
        if d > 0.0 {
            -d
        } else {
            -f64::MIN_POSITIVE
        }
    } else {
        d
    }
}

fn distances(phi: &LevelSetField, window: Option<f64>) -> Result<Vec<f64>> {
    let (w, h) = phi.dims();
    let segs = front_segments(phi);
    if segs.is_empty() {
        return Err(Error::FrontVanished);
    }
    let mut dist = vec![f64::INFINITY; w * h];
    match window {
        None => {
            for y in 0..h {
                for x in 0..w {
                    let (px, py) = (x as i64, y as i64);
                    let mut d = f64::INFINITY;
                    for (a, b) in &segs {
                        d = d.min(origin_segment_distance(a.rel(px, py), b.rel(px, py)));
                    }
                    dist[y * w + x] = d;
                }
            }
        }
        Some(reach) => {
            let r = reach.ceil() as i64 + 1;
            for (a, b) in &segs {
                let lo_x = (a.ix.min(b.ix) - r).max(0);
                let hi_x = (a.ix.max(b.ix) + r).min(w as i64 - 1);
                let lo_y = (a.iy.min(b.iy) - r).max(0);
                let hi_y = (a.iy.max(b.iy) + r).min(h as i64 - 1);
                for py in lo_y..=hi_y {
                    for px in lo_x..=hi_x {
                        let i = py as usize * w + px as usize;
                        let d = origin_segment_distance(a.rel(px, py), b.rel(px, py));
                        if d < dist[i] {
                            dist[i] = d;
                        }
                    }
                }
            }
        }
    }
    Ok(dist)
}

/// Exact Euclidean distance to the piecewise-linear zero set, with the
/// input's sign. The interior mask is preserved exactly.
pub fn redistance(phi: &LevelSetField) -> Result<LevelSetField> {
    let dist = distances(phi, None)?;
    let out = dist
        .into_iter()
        .zip(phi.values())
        .map(|(d, &p)| signed(d, p < 0.0))
        .collect();
    Ok(LevelSetField::from_raw(phi.width(), phi.height(), out))
}

/// Like [`redistance`] but only within `beta + 1` pixels of the front;
/// farther pixels are clamped to `±(beta + 1)`.
pub fn redistance_banded(phi: &LevelSetField, beta: f64) -> Result<LevelSetField> {
    check_beta(beta)?;
    let cap = beta + 1.0;
    let dist = distances(phi, Some(cap))?;
    let out = dist
        .into_iter()
        .zip(phi.values())
        .map(|(d, &p)| signed(d.min(cap), p < 0.0))
        .collect();
    Ok(LevelSetField::from_raw(phi.width(), phi.height(), out))
}

/// Pixels with `|phi| <= beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct NarrowBand {
    pub beta: f64,
    pub indices: Vec<usize>,
}

impl NarrowBand {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 2.0) || !beta.is_finite() {
        return Err(Error::param("beta", format!("band half-width must be >= 2, got {beta}")));
    }
    Ok(())
}

pub fn narrow_band(phi: &LevelSetField, beta: f64) -> Result<NarrowBand> {
    check_beta(beta)?;
    let indices = phi
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= beta)
        .map(|(i, _)| i)
        .collect();
    Ok(NarrowBand { beta, indices })
}
