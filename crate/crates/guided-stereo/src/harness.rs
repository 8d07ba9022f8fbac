//! Benchmark harness: factorial sweeps over (pair, density, seed) cells
//! comparing guided and unguided SGM, with resumable CSV output.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::eval::{evaluate, EvalParams, EvalReport};
use crate::guide::sample_hints;
use crate::sgm::{run_pipeline, CostConfig, SgmParams};
use crate::types::{DisparityMap, GrayImage, GuideParams};

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Requested hint densities; 0 means the unguided baseline.
    pub densities: Vec<f64>,
    /// Seeds 0..seed_count for hint sampling.
    pub seed_count: u64,
    pub guide: GuideParams,
    pub sgm: SgmParams,
    pub cost: CostConfig,
    pub eval: EvalParams,
    /// Two-stage sampling over the labeled region only.
    pub restrict_to_valid: bool,
}

/// One evaluated sweep cell.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub pair: String,
    pub density_requested: f64,
    pub seed: u64,
    pub report: EvalReport,
}

fn cell_key(pair: &str, density: f64, seed: u64, k: f64, c: f64) -> String {
    format!("{pair}|{density}|{seed}|{k}|{c}")
}

/// Sweep CSV header. Same columns as the eval schema plus the requested
/// density and sampling seed that identify a cell for resumption.
pub fn sweep_csv_header(thresholds: &[f64]) -> String {
    let base = crate::eval::csv_header(thresholds);
    base.replace("pair,mask,density,", "pair,mask,density,density_requested,seed,")
}

pub fn sweep_csv_row(row: &SweepRow, guide: &GuideParams) -> String {
    let base = crate::eval::csv_row(&row.pair, &row.report, guide.k(), guide.c());
    let mut fields: Vec<&str> = base.split(',').collect();
    let req = format!("{}", row.density_requested);
    let seed = format!("{}", row.seed);
    fields.insert(3, &req);
    fields.insert(4, &seed);
    fields.join(",")
}

/// Keys of cells already present in an existing sweep CSV, so reruns skip
/// completed work.
pub fn completed_cells(csv_path: &Path) -> Result<HashSet<String>> {
    let mut done = HashSet::new();
    if !csv_path.is_file() {
        return Ok(done);
    }
    let text = std::fs::read_to_string(csv_path)?;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 7 {
            continue;
        }
        // pair, mask, density, density_requested, seed, k, c, ...
        done.insert(format!(
            "{}|{}|{}|{}|{}",
            fields[0], fields[3], fields[4], fields[5], fields[6]
        ));
    }
    Ok(done)
}

/// Run every (density, seed) cell for one stereo pair. The unguided
/// baseline is computed once and reused for density 0 and as the guided
/// runs' comparison anchor.
pub fn sweep_pair(
    name: &str,
    left: &GrayImage,
    right: &GrayImage,
    gt: &DisparityMap,
    cfg: &SweepConfig,
    skip: &HashSet<String>,
    mut on_row: impl FnMut(&SweepRow) -> Result<()>,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let baseline = if cfg.densities.contains(&0.0) {
        Some(run_pipeline(left, right, None, &cfg.guide, &cfg.sgm, &cfg.cost)?)
    } else {
        None
    };

    for &density in &cfg.densities {
        for seed in 0..cfg.seed_count {
            if skip.contains(&cell_key(name, density, seed, cfg.guide.k(), cfg.guide.c())) {
                continue;
            }
            let (pred, hints) = if density == 0.0 {
                (baseline.clone().unwrap(), None)
            } else {
                let hints = sample_hints(gt, density, seed, cfg.restrict_to_valid)?;
                let pred = run_pipeline(
                    left,
                    right,
                    Some(&hints),
                    &cfg.guide,
                    &cfg.sgm,
                    &cfg.cost,
                )?;
                (pred, Some(hints))
            };
            let report = evaluate(&pred, gt, &cfg.eval, hints.as_ref())?;
            let row = SweepRow {
                pair: name.to_string(),
                density_requested: density,
                seed,
                report,
            };
            on_row(&row)?;
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Append rows to a CSV file, writing the header when the file is new.
pub struct CsvAppender {
    file: std::fs::File,
}

impl CsvAppender {
    pub fn open(path: &Path, thresholds: &[f64]) -> Result<Self> {
        let fresh = !path.is_file() || std::fs::metadata(path)?.len() == 0;
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        if fresh {
            writeln!(file, "{}", sweep_csv_header(thresholds))?;
        }
        Ok(Self { file })
    }

    pub fn append(&mut self, line: &str) -> Result<()> {
        writeln!(self.file, "{line}")?;
        Ok(())
    }
}
