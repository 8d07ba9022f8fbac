//! Shared domain types. All types are immutable after construction and
//! validate their invariants up front.

use crate::error::{Error, Result};

/// Sentinel marking an invalid/unknown disparity. Valid disparities are
/// always >= 0, so a negative value is unambiguous.
pub const INVALID_DISPARITY: f32 = -1.0;

/// Single-channel 8-bit intensity raster stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "image data length {} != {width} x {height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn flip_horizontal(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.data.chunks_exact(self.width) {
            data.extend(row.iter().rev());
        }
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Whether higher cost-volume values mean a better match (similarity, e.g.
/// correlation scores) or a worse one (dissimilarity, e.g. Hamming or SAD).
/// The polarity selects which enhancement formula applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Similarity,
    Dissimilarity,
}

/// H x W x D matching-cost tensor, row-major with disparity innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    max_disparity: usize,
    polarity: Polarity,
    costs: Vec<f32>,
}

impl CostVolume {
    pub fn new(
        width: usize,
        height: usize,
        max_disparity: usize,
        polarity: Polarity,
        costs: Vec<f32>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || max_disparity == 0 {
            return Err(Error::InvalidInput(format!(
                "cost volume dimensions must be >= 1, got {width}x{height}x{max_disparity}"
            )));
        }
        if costs.len() != width * height * max_disparity {
            return Err(Error::InvalidInput(format!(
                "cost length {} != {width} x {height} x {max_disparity}",
                costs.len()
            )));
        }
        if let Some(bad) = costs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidInput(format!(
                "cost values must be finite and >= 0, found {bad}"
            )));
        }
        Ok(Self {
            width,
            height,
            max_disparity,
            polarity,
            costs,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn max_disparity(&self) -> usize {
        self.max_disparity
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn costs(&self) -> &[f32] {
        &self.costs
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, d: usize) -> usize {
        (y * self.width + x) * self.max_disparity + d
    }

    #[inline]
    pub fn cost(&self, y: usize, x: usize, d: usize) -> f32 {
        self.costs[self.index(y, x, d)]
    }

    /// Per-pixel cost slice over all disparity candidates.
    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> &[f32] {
        let base = (y * self.width + x) * self.max_disparity;
        &self.costs[base..base + self.max_disparity]
    }
}

/// Sparse disparity hints: per-pixel values `g` plus a validity mask `v`.
/// `g` is meaningful only where `v` is set. Range checks against a volume's
/// max disparity happen at application time.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHints {
    width: usize,
    height: usize,
    g: Vec<f32>,
    v: Vec<bool>,
}

impl SparseHints {
    pub fn new(width: usize, height: usize, g: Vec<f32>, v: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "hint dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if g.len() != width * height || v.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "hint buffers ({}, {}) != {width} x {height}",
                g.len(),
                v.len()
            )));
        }
        for (i, (&gi, &vi)) in g.iter().zip(&v).enumerate() {
            if vi && (!gi.is_finite() || gi < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "hint at pixel ({}, {}) must be finite and >= 0, got {gi}",
                    i / width,
                    i % width
                )));
            }
        }
        Ok(Self {
            width,
            height,
            g,
            v,
        })
    }

    /// All-invalid mask; enhancement with these hints is the identity.
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(
            width,
            height,
            vec![0.0; width * height],
            vec![false; width * height],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn valid(&self, y: usize, x: usize) -> bool {
        self.v[y * self.width + x]
    }

    #[inline]
    pub fn value(&self, y: usize, x: usize) -> f32 {
        self.g[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.v.iter().filter(|&&b| b).count()
    }

    /// Fraction of pixels carrying a valid hint, in [0, 1].
    pub fn density(&self) -> f64 {
        self.valid_count() as f64 / (self.width * self.height) as f64
    }

    /// Hints as (row, col, disparity) triples in row-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f32)> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width)
                .filter(move |&x| self.valid(y, x))
                .map(move |x| (y, x, self.value(y, x)))
        })
    }
}

/// Per-pixel real-valued disparities with [`INVALID_DISPARITY`] marking
/// unknown pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    d: Vec<f32>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, d: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "disparity map dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if d.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "disparity length {} != {width} x {height}",
                d.len()
            )));
        }
        if let Some(bad) = d
            .iter()
            .find(|v| **v != INVALID_DISPARITY && (!v.is_finite() || **v < 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "disparities must be finite and >= 0 or the invalid sentinel, found {bad}"
            )));
        }
        Ok(Self { width, height, d })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.d
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.d[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, y: usize, x: usize) -> bool {
        self.get(y, x) != INVALID_DISPARITY
    }

    pub fn valid_count(&self) -> usize {
        self.d.iter().filter(|&&v| v != INVALID_DISPARITY).count()
    }

    pub fn flip_horizontal(&self) -> Self {
        let mut d = Vec::with_capacity(self.d.len());
        for row in self.d.chunks_exact(self.width) {
            d.extend(row.iter().rev());
        }
        Self {
            width: self.width,
            height: self.height,
            d,
        }
    }
}

/// Rectified stereo rig geometry: disparity = focal_px * baseline_m / depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    focal_px: f64,
    baseline_m: f64,
}

impl Calibration {
    pub fn new(focal_px: f64, baseline_m: f64) -> Result<Self> {
        if !(focal_px > 0.0) || !(baseline_m > 0.0) {
            return Err(Error::InvalidInput(format!(
                "calibration requires focal_px > 0 and baseline_m > 0, got {focal_px}, {baseline_m}"
            )));
        }
        Ok(Self {
            focal_px,
            baseline_m,
        })
    }

    pub fn focal_px(&self) -> f64 {
        self.focal_px
    }

    pub fn baseline_m(&self) -> f64 {
        self.baseline_m
    }
}

/// Gaussian modulation hyper-parameters: peak magnitude `k` and width `c`
/// in disparity units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuideParams {
    k: f64,
    c: f64,
}

impl GuideParams {
    pub fn new(k: f64, c: f64) -> Result<Self> {
        if !(k >= 1.0) {
            return Err(Error::InvalidInput(format!("k must be >= 1, got {k}")));
        }
        if !(c > 0.0) {
            return Err(Error::InvalidInput(format!("c must be > 0, got {c}")));
        }
        Ok(Self { k, c })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

impl Default for GuideParams {
    /// k=10, c=1.
    fn default() -> Self {
        Self { k: 10.0, c: 1.0 }
    }
}
