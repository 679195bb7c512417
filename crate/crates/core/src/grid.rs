//! Real-valued raster types shared by every stage.

use crate::error::{Error, Result};

/// Row-major grid of reals with no range restriction. Wavelet subbands and
/// intermediate results live here.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} grid needs {} values, got {}",
                width * height,
                data.len()
            )));
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

    /// Builds a grid by evaluating `f(row, col)` at every position.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copies the rectangle `[top..=bottom] x [left..=right]`.
    pub fn crop(&self, top: usize, bottom: usize, left: usize, right: usize) -> Result<Grid> {
        if top > bottom || left > right || bottom >= self.height || right >= self.width {
            return Err(Error::Shape(format!(
                "crop rows {top}..={bottom} cols {left}..={right} outside {}x{} grid",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity((bottom - top + 1) * (right - left + 1));
        for row in top..=bottom {
            data.extend_from_slice(&self.row(row)[left..=right]);
        }
        Grid::new(right - left + 1, bottom - top + 1, data)
    }

    pub fn max_abs_diff(&self, other: &Grid) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Grayscale image: a [`Grid`] whose intensities all lie in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage(Grid);

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        Self::try_from(Grid::new(width, height, pixels)?)
    }

    /// Clamps every value into range instead of rejecting it.
    pub fn from_grid_clamped(grid: Grid) -> Self {
        GrayImage(grid.map(|v| v.clamp(0.0, 255.0)))
    }

    pub fn from_u8(width: usize, height: usize, pixels: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            pixels.iter().map(|&p| f64::from(p)).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn pixels(&self) -> &[f64] {
        self.0.data()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0.get(row, col)
    }

    pub fn as_grid(&self) -> &Grid {
        &self.0
    }

    pub fn into_grid(self) -> Grid {
        self.0
    }

    /// Rounds to the nearest 8-bit level.
    pub fn to_u8(&self) -> Vec<u8> {
        self.0
            .data()
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

impl TryFrom<Grid> for GrayImage {
    type Error = Error;

    fn try_from(grid: Grid) -> Result<Self> {
        if let Some(bad) = grid.data().iter().find(|v| !(0.0..=255.0).contains(*v)) {
            return Err(Error::Shape(format!("intensity {bad} outside [0, 255]")));
        }
        Ok(GrayImage(grid))
    }
}
