//! Disparity evaluation: bad-pixel error rates at multiple thresholds,
//! average end-point error, and the All/NoG mask split that excludes
//! hinted pixels.

use crate::error::{Error, Result};
use crate::types::{DisparityMap, SparseHints};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    /// Every pixel with valid ground truth.
    All,
    /// Ground-truth pixels that did not receive a hint.
    NoG,
}

impl std::fmt::Display for MaskMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MaskMode::All => write!(f, "all"),
            MaskMode::NoG => write!(f, "nog"),
        }
    }
}

/// How prediction pixels invalidated by the LR check enter the metrics.
/// They always count as bad at every threshold; the only open choice is how
/// they enter the average error, since a missing prediction has no finite
/// error magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InvalidPolicy {
    /// Exclude invalid predictions from the average; their fraction is
    /// reported separately.
    ExcludeFromAvg,
    /// Charge invalid predictions the given error (typically the disparity
    /// range D) in the average.
    CountAsError(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalParams {
    pub thresholds: Vec<f64>,
    pub mask: MaskMode,
    pub invalid_policy: InvalidPolicy,
}

impl EvalParams {
    pub fn new(thresholds: Vec<f64>, mask: MaskMode) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::InvalidInput("at least one threshold required".into()));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "thresholds must be strictly increasing".into(),
            ));
        }
        if thresholds.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidInput("thresholds must be > 0".into()));
        }
        Ok(Self {
            thresholds,
            mask,
            invalid_policy: InvalidPolicy::ExcludeFromAvg,
        })
    }

    /// KITTI-style thresholds.
    pub fn kitti(mask: MaskMode) -> Self {
        Self::new(vec![2.0, 3.0, 4.0, 5.0], mask).unwrap()
    }

    /// Middlebury/ETH3D-style thresholds.
    pub fn middlebury(mask: MaskMode) -> Self {
        Self::new(vec![0.5, 1.0, 2.0, 4.0], mask).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub thresholds: Vec<f64>,
    /// Percentage of evaluated pixels with |pred - gt| > threshold.
    pub error_rates: Vec<f64>,
    /// Mean absolute disparity error in pixels.
    pub avg_error: f64,
    pub mask: MaskMode,
    pub evaluated_pixels: usize,
    /// Fraction of evaluated pixels with an invalid prediction.
    pub invalid_fraction: f64,
    /// Density of the hints actually used, 0 when unguided.
    pub hint_density_achieved: f64,
}

/// Error-rate denominator is the full evaluated set; invalid predictions
/// count as exceeding every threshold. Comparison is strict (> tau).
pub fn evaluate(
    pred: &DisparityMap,
    gt: &DisparityMap,
    params: &EvalParams,
    hints: Option<&SparseHints>,
) -> Result<EvalReport> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::DimensionMismatch(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    if params.mask == MaskMode::NoG && hints.is_none() {
        return Err(Error::InvalidInput("NoG evaluation requires hints".into()));
    }
    if let Some(h) = hints {
        if h.width() != gt.width() || h.height() != gt.height() {
            return Err(Error::DimensionMismatch(format!(
                "hints {}x{} vs ground truth {}x{}",
                h.width(),
                h.height(),
                gt.width(),
                gt.height()
            )));
        }
    }

    let mut evaluated = 0usize;
    let mut invalid = 0usize;
    let mut exceed = vec![0usize; params.thresholds.len()];
    let mut err_sum = 0.0f64;
    let mut err_count = 0usize;

    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if !gt.is_valid(y, x) {
                continue;
            }
            if params.mask == MaskMode::NoG && hints.is_some_and(|h| h.valid(y, x)) {
                continue;
            }
            evaluated += 1;
            if !pred.is_valid(y, x) {
                invalid += 1;
                for e in &mut exceed {
                    *e += 1;
                }
                if let InvalidPolicy::CountAsError(penalty) = params.invalid_policy {
                    err_sum += penalty;
                    err_count += 1;
                }
                continue;
            }
            let err = (pred.get(y, x) as f64 - gt.get(y, x) as f64).abs();
            for (i, &t) in params.thresholds.iter().enumerate() {
                if err > t {
                    exceed[i] += 1;
                }
            }
            err_sum += err;
            err_count += 1;
        }
    }

    if evaluated == 0 {
        return Err(Error::EmptyEvaluationSet);
    }
    Ok(EvalReport {
        thresholds: params.thresholds.clone(),
        error_rates: exceed
            .iter()
            .map(|&e| 100.0 * e as f64 / evaluated as f64)
            .collect(),
        avg_error: if err_count > 0 {
            err_sum / err_count as f64
        } else {
            0.0
        },
        mask: params.mask,
        evaluated_pixels: evaluated,
        invalid_fraction: invalid as f64 / evaluated as f64,
        hint_density_achieved: hints.map_or(0.0, |h| h.density()),
    })
}

/// Signed change of one metric between a baseline and a guided run.
/// Negative means the guided run improved (errors went down). The relative
/// delta is absent when the baseline metric is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricDelta {
    pub absolute: f64,
    pub relative_percent: Option<f64>,
}

fn delta(baseline: f64, guided: f64) -> MetricDelta {
    MetricDelta {
        absolute: guided - baseline,
        relative_percent: (baseline != 0.0).then(|| 100.0 * (guided - baseline) / baseline),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub thresholds: Vec<f64>,
    pub rate_deltas: Vec<MetricDelta>,
    pub avg_delta: MetricDelta,
}

pub fn compare(baseline: &EvalReport, guided: &EvalReport) -> Result<Comparison> {
    if baseline.thresholds != guided.thresholds {
        return Err(Error::InvalidInput(
            "compared reports must use the same threshold set".into(),
        ));
    }
    if baseline.mask != guided.mask {
        return Err(Error::InvalidInput(
            "compared reports must use the same mask".into(),
        ));
    }
    Ok(Comparison {
        thresholds: baseline.thresholds.clone(),
        rate_deltas: baseline
            .error_rates
            .iter()
            .zip(&guided.error_rates)
            .map(|(&b, &g)| delta(b, g))
            .collect(),
        avg_delta: delta(baseline.avg_error, guided.avg_error),
    })
}

fn fmt_threshold(t: f64) -> String {
    if t == t.trunc() {
        format!("{}", t as i64)
    } else {
        format!("{t}")
    }
}

/// CSV header for report rows: `pair,mask,density,k,c,>t...,avg,invalid_frac`.
pub fn csv_header(thresholds: &[f64]) -> String {
    let cols: Vec<String> = thresholds
        .iter()
        .map(|&t| format!(">{}", fmt_threshold(t)))
        .collect();
    format!("pair,mask,density,k,c,{},avg,invalid_frac", cols.join(","))
}

pub fn csv_row(pair: &str, report: &EvalReport, k: f64, c: f64) -> String {
    let rates: Vec<String> = report.error_rates.iter().map(|r| format!("{r:.4}")).collect();
    format!(
        "{pair},{},{:.6},{k},{c},{},{:.4},{:.6}",
        report.mask,
        report.hint_density_achieved,
        rates.join(","),
        report.avg_error,
        report.invalid_fraction
    )
}
