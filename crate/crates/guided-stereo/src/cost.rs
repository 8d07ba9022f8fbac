//! Initial dissimilarity cost volume from a rectified pair: census transform
//! plus Hamming distance by default, windowed SAD as an alternative.

use crate::error::{Error, Result};
use crate::types::{CostVolume, GrayImage, Polarity};

/// Largest supported census window radius. Descriptors are packed into a
/// u128, which holds the 120 comparison bits of an 11x11 window.
pub const MAX_CENSUS_RADIUS: usize = 5;

/// Matching-cost family used to build the initial volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    /// Census transform + Hamming distance over a (2r+1)^2 window.
    Census { radius: usize },
    /// Sum of absolute differences over a (2r+1)^2 window.
    Sad { radius: usize },
}

impl Default for CostKind {
    fn default() -> Self {
        CostKind::Census { radius: 2 }
    }
}

/// Per-pixel census descriptors. Bit b is set iff the b-th neighbor (in
/// row-major window order, center skipped) is strictly darker than the
/// center. Out-of-bounds neighbors compare equal to center and contribute
/// zero bits.
#[derive(Debug, Clone)]
pub struct CensusImage {
    width: usize,
    height: usize,
    radius: usize,
    descriptors: Vec<u128>,
}

impl CensusImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Number of comparison bits per descriptor.
    pub fn descriptor_bits(&self) -> u32 {
        let side = 2 * self.radius as u32 + 1;
        side * side - 1
    }

    #[inline]
    pub fn descriptor(&self, y: usize, x: usize) -> u128 {
        self.descriptors[y * self.width + x]
    }
}

pub fn census_transform(img: &GrayImage, radius: usize) -> Result<CensusImage> {
    if radius < 1 {
        return Err(Error::InvalidInput("census radius must be >= 1".into()));
    }
    if radius > MAX_CENSUS_RADIUS {
        return Err(Error::InvalidInput(format!(
            "census radius {radius} unsupported (max {MAX_CENSUS_RADIUS})"
        )));
    }
    let (w, h) = (img.width(), img.height());
    if 2 * radius + 1 > w.min(h) {
        return Err(Error::InvalidInput(format!(
            "census window {} exceeds image {w}x{h}",
            2 * radius + 1
        )));
    }
    let r = radius as isize;
    let mut descriptors = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let center = img.get(y as usize, x as usize);
            let mut bits: u128 = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dy == 0 && dx == 0 {
                        continue;
                    }
                    bits <<= 1;
                    let (ny, nx) = (y + dy, x + dx);
                    if ny >= 0
                        && ny < h as isize
                        && nx >= 0
                        && nx < w as isize
                        && img.get(ny as usize, nx as usize) < center
                    {
                        bits |= 1;
                    }
                }
            }
            descriptors.push(bits);
        }
    }
    Ok(CensusImage {
        width: w,
        height: h,
        radius,
        descriptors,
    })
}

/// Hamming cost volume. cost(y, x, d) matches left pixel (y, x) against
/// right pixel (y, x-d); candidates with x-d < 0 get the worst-case cost so
/// WTA never picks them when an in-range candidate exists.
pub fn build_cost_volume(
    left: &CensusImage,
    right: &CensusImage,
    max_disparity: usize,
) -> Result<CostVolume> {
    if left.width != right.width || left.height != right.height {
        return Err(Error::DimensionMismatch(format!(
            "census images {}x{} vs {}x{}",
            left.width, left.height, right.width, right.height
        )));
    }
    if left.radius != right.radius {
        return Err(Error::DimensionMismatch(format!(
            "census radii {} vs {}",
            left.radius, right.radius
        )));
    }
    if max_disparity < 1 {
        return Err(Error::InvalidInput("max disparity must be >= 1".into()));
    }
    let (w, h) = (left.width, left.height);
    let worst = left.descriptor_bits() as f32;
    let mut costs = Vec::with_capacity(w * h * max_disparity);
    for y in 0..h {
        for x in 0..w {
            let l = left.descriptor(y, x);
            for d in 0..max_disparity {
                let c = if d <= x {
                    (l ^ right.descriptor(y, x - d)).count_ones() as f32
                } else {
                    worst
                };
                costs.push(c);
            }
        }
    }
    CostVolume::new(w, h, max_disparity, Polarity::Dissimilarity, costs)
}

/// Windowed SAD volume; coordinates clamp at image borders. Out-of-range
/// disparities get the worst-case cost, as for the census volume.
pub fn build_sad_volume(
    left: &GrayImage,
    right: &GrayImage,
    radius: usize,
    max_disparity: usize,
) -> Result<CostVolume> {
    if left.width() != right.width() || left.height() != right.height() {
        return Err(Error::DimensionMismatch(format!(
            "images {}x{} vs {}x{}",
            left.width(),
            left.height(),
            right.width(),
            right.height()
        )));
    }
    if radius < 1 {
        return Err(Error::InvalidInput("SAD radius must be >= 1".into()));
    }
    if max_disparity < 1 {
        return Err(Error::InvalidInput("max disparity must be >= 1".into()));
    }
    let (w, h) = (left.width(), left.height());
    if 2 * radius + 1 > w.min(h) {
        return Err(Error::InvalidInput(format!(
            "SAD window {} exceeds image {w}x{h}",
            2 * radius + 1
        )));
    }
    let r = radius as isize;
    let side = 2 * radius + 1;
    let worst = (255 * side * side) as f32;
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut costs = Vec::with_capacity(w * h * max_disparity);
    for y in 0..h as isize {
        for x in 0..w as isize {
            for d in 0..max_disparity as isize {
                let c = if d <= x {
                    let mut sum = 0u32;
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let ny = clamp(y + dy, h);
                            let lx = clamp(x + dx, w);
                            let rx = clamp(x - d + dx, w);
                            let lv = left.get(ny, lx) as i32;
                            let rv = right.get(ny, rx) as i32;
                            sum += lv.abs_diff(rv);
                        }
                    }
                    sum as f32
                } else {
                    worst
                };
                costs.push(c);
            }
        }
    }
    CostVolume::new(w, h, max_disparity, Polarity::Dissimilarity, costs)
}

/// Dispatch on [`CostKind`].
pub fn build_volume(
    left: &GrayImage,
    right: &GrayImage,
    kind: CostKind,
    max_disparity: usize,
) -> Result<CostVolume> {
    match kind {
        CostKind::Census { radius } => {
            let lc = census_transform(left, radius)?;
            let rc = census_transform(right, radius)?;
            build_cost_volume(&lc, &rc, max_disparity)
        }
        CostKind::Sad { radius } => build_sad_volume(left, right, radius, max_disparity),
    }
}
