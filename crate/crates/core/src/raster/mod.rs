//! Grayscale rasters, scalar fields and binary masks.
//!
//! All grids are row-major with `x` the column index and `y` the row index.
//! Pixel spacing is one unit in both directions.

mod filter;
mod io;

pub use filter::{gaussian_convolve, gradient, gradient_magnitude, kernel_radius};
pub use io::{load_image, load_mask, save_image, save_mask, save_overlay};

use crate::error::{Error, Result};

/// Smallest admissible width or height; stencils need a one-pixel margin.
pub const MIN_DIM: usize = 3;

/// Read access shared by every real-valued grid in the crate.
pub trait Grid {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn values(&self) -> &[f64];

    #[inline]
    fn at(&self, x: usize, y: usize) -> f64 {
        self.values()[y * self.width() + x]
    }

    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    fn len(&self) -> usize {
        self.width() * self.height()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width < MIN_DIM || height < MIN_DIM {
        return Err(Error::TooSmall { width, height });
    }
    if len != width * height {
        return Err(Error::param(
            "data",
            format!("length {len} does not match {width}x{height}"),
        ));
    }
    Ok(())
}

/// A grayscale image with intensities normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param(
                "data",
                format!("intensity {v} outside [0, 1]"),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image from a per-pixel function of `(x, y)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Left-right mirror image.
    pub fn mirror_x(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: mirror_x(&self.data, self.width),
        }
    }
}

impl Grid for GrayImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn values(&self) -> &[f64] {
        &self.data
    }
}

/// Unbounded real values per pixel (gradients, curvature, speeds).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("data", "non-finite value in scalar field"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Copies any grid into a scalar field.
    pub fn from_grid<G: Grid + ?Sized>(grid: &G) -> Self {
        Self {
            width: grid.width(),
            height: grid.height(),
            data: grid.values().to_vec(),
        }
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Grid for ScalarField {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn values(&self) -> &[f64] {
        &self.data
    }
}

/// A binary field; `true` marks membership.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    /// Number of `true` pixels.
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Number of pixels where `self` and `other` disagree.
    pub fn hamming(&self, other: &Mask) -> Result<usize> {
        self.ensure_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .filter(|(a, b)| a != b)
            .count())
    }

    pub fn ensure_same_dims(&self, other: &Mask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }

    pub fn union(&self, other: &Mask) -> Result<Mask> {
        self.ensure_same_dims(other)?;
        Ok(Mask {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a || *b).collect(),
        })
    }

    pub fn mirror_x(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: mirror_x(&self.data, self.width),
        }
    }
}

fn mirror_x<T: Copy>(data: &[T], width: usize) -> Vec<T> {
    data.chunks(width)
        .flat_map(|row| row.iter().rev().copied())
        .collect()
}

/// Reflect-101 index: `-1 -> 1`, `n -> n - 2`, periodic for larger offsets.
#[inline]
pub(crate) fn mirror_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * (n - 1);
    let k = i.rem_euclid(period);
    (if k >= n { period - k } else { k }) as usize
}
