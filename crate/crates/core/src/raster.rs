//! Per-frame depth and flow rasters.
//!
//! Row-major, `f32` storage. Pixel `(x, y)` holds the sample at the pixel
//! center `Pixel { u: x, v: y }`.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::Pixel;
use crate::{Error, Result};

/// Normalized depth per pixel. Zero marks "no surface" (sky).
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRaster {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl DepthRaster {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch);
        }
        if values.iter().any(|v| v.is_finite() && *v < 0.0) {
            return Err(Error::InvalidParameter("depth values must be non-negative"));
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self { width, height, values: vec![value; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.values[y * self.width + x] = v;
    }

    /// Bilinear sample at a sub-pixel position. `None` outside the raster.
    pub fn sample(&self, px: &Pixel) -> Option<f64> {
        bilinear(self.width, self.height, px, |x, y| self.get(x, y) as f64)
    }
}

/// Two-channel displacement field (u then v), pixels per frame, mapping
/// frame `t` to frame `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRaster {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl FlowRaster {
    /// `data` is interleaved `[u0, v0, u1, v1, ...]`.
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != 2 * width * height {
            return Err(Error::DimensionMismatch);
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; 2 * width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = 2 * (y * self.width + x);
        (self.data[i] as f64, self.data[i + 1] as f64)
    }

    pub fn set(&mut self, x: usize, y: usize, flow: (f32, f32)) {
        let i = 2 * (y * self.width + x);
        self.data[i] = flow.0;
        self.data[i + 1] = flow.1;
    }
}

fn bilinear(width: usize, height: usize, px: &Pixel, at: impl Fn(usize, usize) -> f64) -> Option<f64> {
    if width == 0 || height == 0 || !px.is_finite() || px.u < 0.0 || px.v < 0.0 {
        return None;
    }
    if px.u > (width - 1) as f64 || px.v > (height - 1) as f64 {
        return None;
    }
    let x0 = libm::floor(px.u) as usize;
    let y0 = libm::floor(px.v) as usize;
    let fx = px.u - x0 as f64;
    let fy = px.v - y0 as f64;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    // exact hits skip the neighbors so integer pixels return the stored value
    let top = if fx == 0.0 { at(x0, y0) } else { at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx };
    if fy == 0.0 {
        return Some(top);
    }
    let bottom = if fx == 0.0 { at(x0, y1) } else { at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx };
    Some(top * (1.0 - fy) + bottom * fy)
}
