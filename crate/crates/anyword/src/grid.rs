//! Dense numeric primitives shared across the pipeline: 2-D grids for
//! attention maps and masks, 3-D latents for the denoiser, and a minimal
//! grayscale image buffer.

use serde::{Deserialize, Serialize};

/// Row-major 2-D grid of `f64` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            data: vec![0.0; h * w],
        }
    }

    pub fn from_fn(h: usize, w: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(h * w);
        for r in 0..h {
            for c in 0..w {
                data.push(f(r, c));
            }
        }
        Self { h, w, data }
    }

    /// Build from nested rows. Panics if rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let h = rows.len();
        let w = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(h * w);
        for row in rows {
            assert_eq!(row.len(), w, "ragged grid rows");
            data.extend_from_slice(row);
        }
        Self { h, w, data }
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.w + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.w + c] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// True when every cell holds the same value.
    pub fn is_constant(&self) -> bool {
        match self.data.split_first() {
            Some((first, rest)) => rest.iter().all(|v| v == first),
            None => true,
        }
    }

    pub fn add(&self, other: &Grid) -> Grid {
        assert_eq!(self.shape(), other.shape(), "grid shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Grid {
            h: self.h,
            w: self.w,
            data,
        }
    }

    pub fn scale(&self, k: f64) -> Grid {
        Grid {
            h: self.h,
            w: self.w,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    pub fn linf_distance(&self, other: &Grid) -> f64 {
        assert_eq!(self.shape(), other.shape(), "grid shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Location of the maximum value, first occurrence in row-major order.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_v = f64::NEG_INFINITY;
        for r in 0..self.h {
            for c in 0..self.w {
                let v = self.get(r, c);
                if v > best_v {
                    best_v = v;
                    best = (r, c);
                }
            }
        }
        best
    }

    /// Rescale values to [0, 1]. A constant grid is returned unchanged.
    pub fn minmax_normalized(&self) -> Grid {
        let lo = self.min();
        let hi = self.max();
        if hi - lo <= 0.0 {
            return self.clone();
        }
        let span = hi - lo;
        Grid {
            h: self.h,
            w: self.w,
            data: self.data.iter().map(|v| (v - lo) / span).collect(),
        }
    }
}

/// Latent tensor of shape (channels, h, w), row-major within each channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Latent {
    channels: usize,
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Latent {
    pub fn zeros(channels: usize, h: usize, w: usize) -> Self {
        Self {
            channels,
            h,
            w,
            data: vec![0.0; channels * h * w],
        }
    }

    pub fn from_values(channels: usize, h: usize, w: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), channels * h * w, "latent payload size mismatch");
        Self {
            channels,
            h,
            w,
            data,
        }
    }

    /// 1x1x1 latent, convenient for scalar toy chains.
    pub fn scalar(v: f64) -> Self {
        Self {
            channels: 1,
            h: 1,
            w: 1,
            data: vec![v],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.h, self.w)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Latent {
        Latent {
            channels: self.channels,
            h: self.h,
            w: self.w,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn zip(&self, other: &Latent, f: impl Fn(f64, f64) -> f64) -> Latent {
        assert_eq!(self.shape(), other.shape(), "latent shape mismatch");
        Latent {
            channels: self.channels,
            h: self.h,
            w: self.w,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Latent) -> Latent {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Latent) -> Latent {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, k: f64) -> Latent {
        self.map(|v| v * k)
    }

    pub fn add_in_place(&mut self, other: &Latent) {
        assert_eq!(self.shape(), other.shape(), "latent shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn dot(&self, other: &Latent) -> f64 {
        assert_eq!(self.shape(), other.shape(), "latent shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn linf_distance(&self, other: &Latent) -> f64 {
        assert_eq!(self.shape(), other.shape(), "latent shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Pixel dimensions of the full-resolution image frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: usize,
    pub height: usize,
}

impl ImageSize {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }
}

/// Grayscale image buffer with luma values in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageBuf {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImageBuf {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel buffer size mismatch");
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn size(&self) -> ImageSize {
        ImageSize::new(self.width, self.height)
    }

    /// Decode a PNG/JPEG file into a luma buffer.
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let img = image::open(path).map_err(|e| format!("{path:?}: {e}"))?;
        let gray = img.to_luma8();
        let (w, h) = gray.dimensions();
        let pixels = gray.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect();
        Ok(Self::from_pixels(w as usize, h as usize, pixels))
    }

    /// Stable byte serialization of the pixel contents, used for cache keys.
    pub fn content_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.pixels.len() * 8);
        out.extend_from_slice(&(self.width as u64).to_le_bytes());
        out.extend_from_slice(&(self.height as u64).to_le_bytes());
        for p in &self.pixels {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minmax_spans_unit_interval() {
        let g = Grid::from_rows(&[vec![2.0, 4.0], vec![6.0, 8.0]]);
        let n = g.minmax_normalized();
        assert_eq!(n.min(), 0.0);
        assert_eq!(n.max(), 1.0);
        assert_eq!(n.get(0, 1), (4.0 - 2.0) / 6.0);
    }

    #[test]
    fn minmax_keeps_constant_grids() {
        let g = Grid::from_rows(&[vec![0.3, 0.3], vec![0.3, 0.3]]);
        assert_eq!(g.minmax_normalized(), g);
        assert!(g.is_constant());
    }

    #[test]
    fn latent_roundtrip_ops() {
        let a = Latent::from_values(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let b = a.scale(2.0).sub(&a);
        assert_eq!(b, a);
        assert_eq!(a.linf_distance(&b), 0.0);
    }
}
