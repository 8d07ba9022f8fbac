//! Guided semi-global stereo matching.
//!
//! Sparse, trusted disparity hints modulate the matching-cost volume with a
//! Gaussian-shaped per-entry weight before SGM scanline aggregation:
//! costs near a hinted disparity are pulled down, the rest are amplified,
//! and unhinted pixels are left untouched. The crate bundles the full
//! classical pipeline (census/Hamming costs, SGM, WTA with subpixel
//! refinement, left-right check), the hint machinery, dataset I/O for
//! Middlebury PFM and KITTI 16-bit PNG disparity maps, and an evaluation
//! harness with bad-pixel/average-error metrics and density sweeps.
//!
//! The `gsm` binary exposes the pipeline, hint sampling, evaluation, and
//! sweeps on the command line.

// Validation guards are written as `!(x > 0.0)` on purpose: unlike
// `x <= 0.0`, the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod error;
pub mod eval;
pub mod guide;
pub mod harness;
pub mod io;
pub mod sgm;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    Calibration, CostVolume, DisparityMap, GrayImage, GuideParams, Polarity, SparseHints,
    INVALID_DISPARITY,
};
