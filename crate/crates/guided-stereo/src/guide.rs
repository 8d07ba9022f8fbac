//! Gaussian enhancement of cost volumes from sparse disparity hints.
//!
//! A valid hint g at a pixel multiplies that pixel's cost curve by a
//! Gaussian-shaped weight centred on g: peaked at g for similarity volumes,
//! zeroed at g and rising with |d - g| for dissimilarity volumes. Pixels
//! without a hint are left untouched. The modulation is a per-entry constant
//! multiplier, so the gradient of an enhanced entry with respect to its raw
//! entry is the weight itself.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{Calibration, CostVolume, DisparityMap, GuideParams, Polarity, SparseHints};

/// Weight multiplying the raw cost/feature at disparity candidate `d` for a
/// pixel with hint `g` and validity `v`.
///
/// - `v` unset: exactly 1 (identity).
/// - Similarity: k * exp(-(d-g)^2 / (2 c^2)), in (0, k], peak at d = g.
/// - Dissimilarity: k * (1 - exp(-(d-g)^2 / (2 c^2))), in [0, k), zero at
///   d = g.
pub fn modulation_weight(
    d: f64,
    g: f64,
    v: bool,
    params: &GuideParams,
    polarity: Polarity,
) -> f64 {
    if !v {
        return 1.0;
    }
    let diff = d - g;
    let t = diff * diff / (2.0 * params.c() * params.c());
    match polarity {
        Polarity::Similarity => params.k() * (-t).exp(),
        // 1 - exp(-t) via exp_m1 keeps full relative precision for small t.
        Polarity::Dissimilarity => params.k() * -(-t).exp_m1(),
    }
}

/// d(enhanced)/d(raw) for a single volume entry. The enhancement is linear
/// in the raw value, so this is just the modulation weight.
pub fn modulation_gradient(
    d: f64,
    g: f64,
    v: bool,
    params: &GuideParams,
    polarity: Polarity,
) -> f64 {
    modulation_weight(d, g, v, params, polarity)
}

/// Apply the modulation to a whole volume. Pixels with no hint are copied
/// bit-identically; hinted pixels must satisfy 0 <= g < D.
pub fn enhance_volume(
    vol: &CostVolume,
    hints: &SparseHints,
    params: &GuideParams,
) -> Result<CostVolume> {
    if hints.width() != vol.width() || hints.height() != vol.height() {
        return Err(Error::DimensionMismatch(format!(
            "hints {}x{} vs volume {}x{}",
            hints.width(),
            hints.height(),
            vol.width(),
            vol.height()
        )));
    }
    let max_d = vol.max_disparity();
    let mut out = Vec::with_capacity(vol.costs().len());
    for y in 0..vol.height() {
        for x in 0..vol.width() {
            let pixel = vol.pixel(y, x);
            if !hints.valid(y, x) {
                out.extend_from_slice(pixel);
                continue;
            }
            let g = hints.value(y, x);
            if !(0.0..(max_d as f32)).contains(&g) {
                return Err(Error::HintOutOfRange {
                    row: y,
                    col: x,
                    hint: g,
                    max_disparity: max_d,
                });
            }
            for (d, &c) in pixel.iter().enumerate() {
                let w = modulation_weight(d as f64, g as f64, true, params, vol.polarity());
                out.push((w * c as f64) as f32);
            }
        }
    }
    CostVolume::new(
        vol.width(),
        vol.height(),
        max_d,
        vol.polarity(),
        out,
    )
}

pub fn depth_to_disparity(z_m: f64, cal: &Calibration) -> Result<f64> {
    if !(z_m > 0.0) {
        return Err(Error::InvalidInput(format!("depth must be > 0, got {z_m}")));
    }
    Ok(cal.baseline_m() * cal.focal_px() / z_m)
}

pub fn disparity_to_depth(d_px: f64, cal: &Calibration) -> Result<f64> {
    if !(d_px > 0.0) {
        return Err(Error::InvalidInput(format!(
            "disparity must be > 0, got {d_px}"
        )));
    }
    Ok(cal.baseline_m() * cal.focal_px() / d_px)
}

/// Draw hints from a ground-truth disparity map by uniform sampling without
/// replacement. Deterministic for a fixed seed.
///
/// The target count is round(density * domain) where the domain is the
/// whole image, or the set of valid ground-truth pixels when
/// `restrict_to_valid` is set (the two-stage labeled-region protocol).
/// Only valid ground-truth pixels can carry a hint, so the achieved count
/// is clipped to the candidate count.
pub fn sample_hints(
    gt: &DisparityMap,
    target_density: f64,
    seed: u64,
    restrict_to_valid: bool,
) -> Result<SparseHints> {
    if !(0.0..=1.0).contains(&target_density) {
        return Err(Error::InvalidInput(format!(
            "density must be in [0, 1], got {target_density}"
        )));
    }
    let (w, h) = (gt.width(), gt.height());
    let candidates: Vec<usize> = (0..w * h)
        .filter(|&i| gt.data()[i] != crate::types::INVALID_DISPARITY)
        .collect();
    let domain = if restrict_to_valid {
        candidates.len()
    } else {
        w * h
    };
    let target = (target_density * domain as f64).round() as usize;
    if target == 0 {
        return SparseHints::empty(w, h);
    }
    if candidates.is_empty() {
        return Err(Error::NoValidCandidates);
    }
    let n = target.min(candidates.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, candidates.len(), n);
    let mut g = vec![0.0f32; w * h];
    let mut v = vec![false; w * h];
    for p in picks.iter() {
        let i = candidates[p];
        g[i] = gt.data()[i];
        v[i] = true;
    }
    SparseHints::new(w, h, g, v)
}

/// Read a hint file: one `row col disparity` record per line, 0-based
/// coordinates, `#` comments.
pub fn read_hints(path: &Path, width: usize, height: usize) -> Result<SparseHints> {
    let file = std::fs::File::open(path)?;
    let mut g = vec![0.0f32; width * height];
    let mut v = vec![false; width * height];
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::format_at(
                path,
                lineno,
                format!("expected `row col disparity`, got {} fields", fields.len()),
            ));
        }
        let row: usize = fields[0]
            .parse()
            .map_err(|_| Error::format_at(path, lineno, "bad row"))?;
        let col: usize = fields[1]
            .parse()
            .map_err(|_| Error::format_at(path, lineno, "bad col"))?;
        let disp: f32 = fields[2]
            .parse()
            .map_err(|_| Error::format_at(path, lineno, "bad disparity"))?;
        if row >= height || col >= width {
            return Err(Error::format_at(
                path,
                lineno,
                format!("pixel ({row}, {col}) outside {width}x{height}"),
            ));
        }
        let i = row * width + col;
        if v[i] {
            return Err(Error::format_at(
                path,
                lineno,
                format!("duplicate hint for pixel ({row}, {col})"),
            ));
        }
        g[i] = disp;
        v[i] = true;
    }
    SparseHints::new(width, height, g, v)
}

pub fn write_hints(hints: &SparseHints, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# row col disparity")?;
    for (row, col, disp) in hints.iter_valid() {
        writeln!(out, "{row} {col} {disp}")?;
    }
    out.flush()?;
    Ok(())
}
