//! Command-line front end: disparity computation, hint sampling,
//! evaluation, and density/parameter sweeps.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use guided_stereo::cost::CostKind;
use guided_stereo::eval::{
    compare, csv_header, csv_row, evaluate, EvalParams, InvalidPolicy, MaskMode,
};
use guided_stereo::guide::{enhance_volume, read_hints, sample_hints, write_hints};
use guided_stereo::harness::{
    completed_cells, sweep_csv_row, sweep_pair, CsvAppender, SweepConfig,
};
use guided_stereo::io::{
    read_calibration, read_gray_image, read_kitti_disparity, read_manifest, read_pfm,
    write_kitti_disparity, write_pfm, write_preview,
};
use guided_stereo::sgm::{
    aggregate, compute_right_disparity, left_right_check, wta, CostConfig, PathCount, SgmParams,
};
use guided_stereo::{DisparityMap, Error, GuideParams, Result};

#[derive(Parser)]
#[command(
    name = "gsm",
    about = "Guided semi-global stereo matching",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a disparity map for a rectified stereo pair, optionally
    /// guided by sparse hints.
    Compute(ComputeArgs),
    /// Sample hints from a ground-truth disparity map.
    SampleHints(SampleHintsArgs),
    /// Evaluate a predicted disparity map against ground truth.
    Eval(EvalArgs),
    /// Factorial sweep over pairs x densities x seeds.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Pfm,
    KittiPng,
}

#[derive(Clone, Copy, ValueEnum)]
enum CostFlag {
    Census,
    Sad,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskFlag {
    All,
    Nog,
}

/// Pipeline knobs shared by compute and sweep. All optional; resolution
/// order is flag > config file > built-in default.
#[derive(Args, Clone)]
struct PipelineFlags {
    /// Gaussian peak magnitude k (default 10)
    #[arg(long)]
    k: Option<f64>,
    /// Gaussian width c in disparity units (default 1)
    #[arg(long)]
    c: Option<f64>,
    /// Small-jump penalty (default 10)
    #[arg(long)]
    p1: Option<f32>,
    /// Large-jump penalty (default 120)
    #[arg(long)]
    p2: Option<f32>,
    /// Scanline directions: 4 or 8 (default 8)
    #[arg(long)]
    paths: Option<u32>,
    /// Disparity search range (default 64)
    #[arg(long)]
    max_disp: Option<usize>,
    /// Census window radius (default 2)
    #[arg(long)]
    census_radius: Option<usize>,
    /// Matching cost: census or sad (default census)
    #[arg(long, value_enum)]
    cost: Option<CostFlag>,
    /// Max left-right disparity difference in pixels (default 1)
    #[arg(long)]
    lr_threshold: Option<f32>,
    /// Skip the left-right consistency check
    #[arg(long)]
    no_lr_check: bool,
    /// Skip the parabola subpixel refinement
    #[arg(long)]
    no_subpixel: bool,
    /// Optional key=value config file supplying defaults for the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

struct Resolved {
    guide: GuideParams,
    sgm: SgmParams,
    cost: CostConfig,
}

impl PipelineFlags {
    fn resolve(&self) -> Result<Resolved> {
        let cfg = match &self.config {
            Some(path) => read_config(path)?,
            None => HashMap::new(),
        };
        let lookup = |key: &str| -> Result<Option<f64>> {
            cfg.get(key)
                .map(|v| {
                    v.parse::<f64>().map_err(|_| {
                        Error::InvalidInput(format!("config key {key}: bad value {v:?}"))
                    })
                })
                .transpose()
        };
        let k = match self.k {
            Some(v) => v,
            None => lookup("k")?.unwrap_or(10.0),
        };
        let c = match self.c {
            Some(v) => v,
            None => lookup("c")?.unwrap_or(1.0),
        };
        let p1 = match self.p1 {
            Some(v) => v,
            None => lookup("p1")?.unwrap_or(10.0) as f32,
        };
        let p2 = match self.p2 {
            Some(v) => v,
            None => lookup("p2")?.unwrap_or(120.0) as f32,
        };
        let paths = match self.paths {
            Some(v) => v,
            None => lookup("paths")?.unwrap_or(8.0) as u32,
        };
        let paths = match paths {
            4 => PathCount::Four,
            8 => PathCount::Eight,
            other => {
                return Err(Error::InvalidInput(format!(
                    "paths must be 4 or 8, got {other}"
                )))
            }
        };
        let max_disp = match self.max_disp {
            Some(v) => v,
            None => lookup("max_disp")?.unwrap_or(64.0) as usize,
        };
        let radius = match self.census_radius {
            Some(v) => v,
            None => lookup("census_radius")?.unwrap_or(2.0) as usize,
        };
        let lr = if self.no_lr_check {
            None
        } else {
            Some(match self.lr_threshold {
                Some(v) => v,
                None => lookup("lr_threshold")?.unwrap_or(1.0) as f32,
            })
        };
        let kind = match self.cost.unwrap_or(CostFlag::Census) {
            CostFlag::Census => CostKind::Census { radius },
            CostFlag::Sad => CostKind::Sad { radius },
        };
        Ok(Resolved {
            guide: GuideParams::new(k, c)?,
            sgm: SgmParams::new(p1, p2, paths, lr, !self.no_subpixel)?,
            cost: CostConfig {
                kind,
                max_disparity: max_disp,
            },
        })
    }
}

fn read_config(path: &Path) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, line) in std::fs::read_to_string(path)?.lines().enumerate() {
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| {
            Error::format_at(path, lineno + 1, "expected key=value")
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

#[derive(Args)]
struct ComputeArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Hint file (`row col disparity` lines); omit for the unguided baseline
    #[arg(long)]
    hints: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pfm")]
    out_format: OutFormat,
    /// Also write a colormapped PNG preview here
    #[arg(long)]
    preview: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Args)]
struct SampleHintsArgs {
    /// Ground-truth disparity map (.pfm or .png)
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Compute the density over the labeled region instead of the full image
    #[arg(long)]
    restrict_to_valid: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Comma-separated error thresholds in pixels
    #[arg(long, default_value = "2,3,4,5", value_delimiter = ',')]
    thresholds: Vec<f64>,
    #[arg(long, value_enum, default_value = "all")]
    mask: MaskFlag,
    /// Hint file; required for --mask nog
    #[arg(long)]
    hints: Option<PathBuf>,
    /// Append a report row to this CSV file
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Pair name used in the CSV row
    #[arg(long, default_value = "pair")]
    pair: String,
    /// Charge LR-invalidated pixels this error in the average instead of
    /// excluding them
    #[arg(long)]
    invalid_as_error: Option<f64>,
    /// Baseline CSV-free comparison: evaluate this second prediction too and
    /// print deltas (baseline = --pred, guided = this)
    #[arg(long)]
    compare_with: Option<PathBuf>,
    /// k value recorded in the CSV row (label only)
    #[arg(long, default_value_t = 10.0)]
    k: f64,
    /// c value recorded in the CSV row (label only)
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "0,0.01,0.05", value_delimiter = ',')]
    densities: Vec<f64>,
    /// Number of sampling seeds per density (seeds 0..N)
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    #[arg(long, default_value = "2,3,4,5", value_delimiter = ',')]
    thresholds: Vec<f64>,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    restrict_to_valid: bool,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

fn read_disparity(path: &Path) -> Result<DisparityMap> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pfm") => read_pfm(path),
        Some("png") => read_kitti_disparity(path),
        _ => Err(Error::format(
            path,
            "unknown disparity format (expected .pfm or .png)",
        )),
    }
}

fn cmd_compute(args: &ComputeArgs) -> Result<()> {
    let resolved = args.pipeline.resolve()?;
    let t0 = Instant::now();
    let left = read_gray_image(&args.left)?;
    let right = read_gray_image(&args.right)?;
    println!("load:       {:>8.1} ms", t0.elapsed().as_secs_f64() * 1e3);

    let hints = args
        .hints
        .as_deref()
        .map(|p| read_hints(p, left.width(), left.height()))
        .transpose()?;

    let t = Instant::now();
    let mut vol = guided_stereo::cost::build_volume(
        &left,
        &right,
        resolved.cost.kind,
        resolved.cost.max_disparity,
    )?;
    println!("cost:       {:>8.1} ms", t.elapsed().as_secs_f64() * 1e3);

    if let Some(hints) = &hints {
        let t = Instant::now();
        vol = enhance_volume(&vol, hints, &resolved.guide)?;
        println!(
            "enhance:    {:>8.1} ms (hint density {:.4})",
            t.elapsed().as_secs_f64() * 1e3,
            hints.density()
        );
    }

    let t = Instant::now();
    let agg = aggregate(&vol, &resolved.sgm)?;
    println!("aggregate:  {:>8.1} ms", t.elapsed().as_secs_f64() * 1e3);

    let t = Instant::now();
    let mut disp = wta(&agg, resolved.sgm.subpixel());
    println!("wta:        {:>8.1} ms", t.elapsed().as_secs_f64() * 1e3);

    if let Some(threshold) = resolved.sgm.lr_threshold() {
        let t = Instant::now();
        let right_disp = compute_right_disparity(&left, &right, &resolved.sgm, &resolved.cost)?;
        disp = left_right_check(&disp, &right_disp, threshold)?;
        println!("lr check:   {:>8.1} ms", t.elapsed().as_secs_f64() * 1e3);
    }

    match args.out_format {
        OutFormat::Pfm => write_pfm(&disp, &args.out)?,
        OutFormat::KittiPng => write_kitti_disparity(&disp, &args.out)?,
    }
    if let Some(preview) = &args.preview {
        write_preview(&disp, preview)?;
    }
    println!(
        "total:      {:>8.1} ms -> {}",
        t0.elapsed().as_secs_f64() * 1e3,
        args.out.display()
    );
    Ok(())
}

fn cmd_sample_hints(args: &SampleHintsArgs) -> Result<()> {
    let gt = read_disparity(&args.gt)?;
    let hints = sample_hints(&gt, args.density, args.seed, args.restrict_to_valid)?;
    write_hints(&hints, &args.out)?;
    println!(
        "sampled {} hints, achieved density {:.6}",
        hints.valid_count(),
        hints.density()
    );
    Ok(())
}

fn print_report(report: &guided_stereo::eval::EvalReport) {
    let cols: Vec<String> = report
        .thresholds
        .iter()
        .zip(&report.error_rates)
        .map(|(t, r)| format!(">{t}: {r:.3}%"))
        .collect();
    println!(
        "mask={} pixels={} {} avg={:.4}px invalid={:.4}",
        report.mask,
        report.evaluated_pixels,
        cols.join(" "),
        report.avg_error,
        report.invalid_fraction
    );
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let pred = read_disparity(&args.pred)?;
    let gt = read_disparity(&args.gt)?;
    let hints = args
        .hints
        .as_deref()
        .map(|p| read_hints(p, gt.width(), gt.height()))
        .transpose()?;
    let mask = match args.mask {
        MaskFlag::All => MaskMode::All,
        MaskFlag::Nog => MaskMode::NoG,
    };
    let mut params = EvalParams::new(args.thresholds.clone(), mask)?;
    if let Some(penalty) = args.invalid_as_error {
        params.invalid_policy = InvalidPolicy::CountAsError(penalty);
    }
    let report = evaluate(&pred, &gt, &params, hints.as_ref())?;
    print_report(&report);

    if let Some(other) = &args.compare_with {
        let guided = evaluate(&read_disparity(other)?, &gt, &params, hints.as_ref())?;
        print_report(&guided);
        let cmp = compare(&report, &guided)?;
        for (t, d) in cmp.thresholds.iter().zip(&cmp.rate_deltas) {
            match d.relative_percent {
                Some(rel) => println!(">{t}: {:+.3} ({rel:+.1}%)", d.absolute),
                None => println!(">{t}: {:+.3} (rel n/a)", d.absolute),
            }
        }
        println!("avg: {:+.4}", cmp.avg_delta.absolute);
    }

    if let Some(csv_path) = &args.csv {
        let fresh = !csv_path.is_file() || std::fs::metadata(csv_path)?.len() == 0;
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(csv_path)?;
        use std::io::Write;
        if fresh {
            writeln!(file, "{}", csv_header(&report.thresholds))?;
        }
        writeln!(file, "{}", csv_row(&args.pair, &report, args.k, args.c))?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let resolved = args.pipeline.resolve()?;
    let pairs = read_manifest(&args.manifest)?;
    let cfg = SweepConfig {
        densities: args.densities.clone(),
        seed_count: args.seeds,
        guide: resolved.guide,
        sgm: resolved.sgm,
        cost: resolved.cost,
        eval: EvalParams::new(args.thresholds.clone(), MaskMode::All)?,
        restrict_to_valid: args.restrict_to_valid,
    };
    let done = completed_cells(&args.csv)?;
    let mut csv = CsvAppender::open(&args.csv, &args.thresholds)?;
    for rec in &pairs {
        let gt_path = rec.gt_disparity.as_ref().ok_or_else(|| {
            Error::InvalidInput(format!("pair {} has no ground truth for sweeping", rec.name))
        })?;
        if let Some(cal_path) = &rec.calibration {
            // Parsed for validity; the sweep itself works in disparity space.
            let _ = read_calibration(cal_path)?;
        }
        let left = read_gray_image(&rec.left)?;
        let right = read_gray_image(&rec.right)?;
        let gt = read_disparity(gt_path)?;
        let rows = sweep_pair(&rec.name, &left, &right, &gt, &cfg, &done, |row| {
            csv.append(&sweep_csv_row(row, &cfg.guide))
        })?;
        println!("{}: {} new cells", rec.name, rows.len());
    }
    println!("sweep written to {}", args.csv.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version exit 0; anything else is a usage error.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match &cli.command {
        Command::Compute(args) => cmd_compute(args),
        Command::SampleHints(args) => cmd_sample_hints(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
