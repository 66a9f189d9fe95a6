//! Command-line front end: `inspect`, `evaluate` and `synth`.
//!
//! Exit codes: 0 success, 1 output/internal failure, 2 bad arguments,
//! 3 unreadable or undecodable image, 4 fewer than two whole periods along
//! an axis, 5 malformed truth or synthetic spec.

pub mod raster;
pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use tempfile::NamedTempFile;

use crate::error::Error;
use crate::evaluation::{generate_texture, ground_truth_blocks, SyntheticSpec};
use crate::fusion::{CannyParams, DefectMask};
use crate::image::GrayImage;
use crate::pipeline::{inspect_image, Inspection, InspectParams};
use crate::tiling::{block_grid, four_crops, Corner, Periodicity};
use raster::Format;
use report::{metrics_text, parse_truth, truth_to_text, MetricsTable, Report};

/// Environment variable capping the number of crop workers (0 = auto).
pub const THREADS_ENV: &str = "GI_THREADS";

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const IMAGE: i32 = 3;
    pub const PERIODS: i32 = 4;
    pub const MALFORMED: i32 = 5;
}

#[derive(Debug, Parser)]
#[command(name = "gi", version, about = "Defect detection for periodic textures in gradient space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect defective periodic blocks and write masks, overlay and report.
    Inspect(InspectArgs),
    /// Inspect, then score every crop against ground truth.
    Evaluate {
        #[command(flatten)]
        inspect: InspectArgs,
        /// Truth file: per-crop block lists (TOML) or a defect mask image (.pgm/.png).
        #[arg(long)]
        truth: PathBuf,
    },
    /// Render a synthetic texture with its defect mask and truth lists.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Input image (binary PGM or PNG).
    #[arg(long)]
    pub input: PathBuf,
    /// Rows in one periodic unit.
    #[arg(long)]
    pub period_rows: usize,
    /// Columns in one periodic unit.
    #[arg(long)]
    pub period_cols: usize,
    /// Filled defect mask output.
    #[arg(long)]
    pub out_mask: Option<PathBuf>,
    /// Defect contour output.
    #[arg(long)]
    pub out_edges: Option<PathBuf>,
    /// Input with the contour burnt in.
    #[arg(long)]
    pub out_overlay: Option<PathBuf>,
    /// JSON report output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 1.4)]
    pub canny_sigma: f64,
    #[arg(long, default_value_t = 90.0)]
    pub canny_high_pct: f64,
    #[arg(long, default_value_t = 0.4)]
    pub canny_low_ratio: f64,
    /// Report no defect when last-but-one / last linkage distance is below this (0 = off).
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    /// Include stage timings in the report (makes it non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthetic spec (TOML).
    #[arg(long)]
    pub spec: PathBuf,
    /// Override the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Generated image output.
    #[arg(long)]
    pub out_image: PathBuf,
    /// Defect pixel mask output.
    #[arg(long)]
    pub out_mask: Option<PathBuf>,
    /// Per-crop ground-truth block lists output.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::TooFewPeriods { .. } => exit::PERIODS,
            Error::Spec(_) | Error::Truth(_) => exit::MALFORMED,
            Error::Decode(_) | Error::InvalidImage(_) => exit::IMAGE,
            Error::CannyParams(_) | Error::InvalidPeriodicity(_) => exit::USAGE,
            _ => exit::FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match execute(cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Inspect(args) => inspect(&args, None),
        Command::Evaluate { inspect: args, truth } => inspect(&args, Some(&truth)),
        Command::Synth(args) => synth(&args),
    }
}

fn thread_setting() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::new(exit::USAGE, format!("{THREADS_ENV} must be a nonnegative integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

fn read_image(path: &Path) -> CliResult<GrayImage> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::new(exit::IMAGE, format!("cannot read {}: {e}", path.display())))?;
    raster::decode(&bytes).map_err(|e| CliError::new(exit::IMAGE, format!("{}: {e}", path.display())))
}

fn encode_for(path: &Path, height: usize, width: usize, samples: &[u8]) -> CliResult<Vec<u8>> {
    Ok(raster::encode(Format::for_path(path), height, width, samples)?)
}

/// Writes every file to a temporary sibling first and renames only once all
/// of them were written.
fn write_all(outputs: Vec<(PathBuf, Vec<u8>)>) -> CliResult<()> {
    let io_err = |p: &Path, e: std::io::Error| CliError::new(exit::FAILURE, format!("cannot write {}: {e}", p.display()));
    let mut staged = Vec::with_capacity(outputs.len());
    for (path, bytes) in outputs {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = NamedTempFile::new_in(&dir).map_err(|e| io_err(&path, e))?;
        tmp.write_all(&bytes).map_err(|e| io_err(&path, e))?;
        tmp.flush().map_err(|e| io_err(&path, e))?;
        staged.push((path, tmp));
    }
    for (path, tmp) in staged {
        tmp.persist(&path).map_err(|e| io_err(&path, e.error))?;
    }
    Ok(())
}

fn load_truth(path: &Path, inspection: &Inspection) -> CliResult<Vec<Vec<usize>>> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::new(exit::MALFORMED, format!("cannot read truth {}: {e}", path.display())))?;
    let malformed = |msg: String| CliError::new(exit::MALFORMED, format!("truth {}: {msg}", path.display()));
    if bytes.starts_with(b"P5") || bytes.starts_with(b"\x89PNG") {
        let img = raster::decode(&bytes).map_err(|e| malformed(e.to_string()))?;
        let (h, w) = (inspection.overlay.height(), inspection.overlay.width());
        if (img.height(), img.width()) != (h, w) {
            return Err(malformed(format!(
                "mask is {}x{} but the input is {h}x{w}",
                img.height(),
                img.width()
            )));
        }
        let mask = DefectMask::from_bits(h, w, img.pixels().iter().map(|&v| v > 0.0).collect())?;
        inspection
            .crops
            .iter()
            .map(|c| ground_truth_blocks(&mask, &c.grid).map_err(CliError::from))
            .collect()
    } else {
        let text = String::from_utf8(bytes).map_err(|_| malformed("not UTF-8 text".into()))?;
        let parsed = parse_truth(&text).map_err(|e| malformed(e.to_string()))?;
        let truth: Vec<Vec<usize>> = inspection
            .crops
            .iter()
            .map(|c| {
                parsed
                    .iter()
                    .find(|(corner, _)| *corner == c.grid.crop.corner)
                    .map(|(_, b)| b.clone())
                    .unwrap_or_default()
            })
            .collect();
        for (c, blocks) in inspection.crops.iter().zip(&truth) {
            if let Some(&k) = blocks.iter().find(|&&k| k > c.grid.n_blocks) {
                return Err(malformed(format!(
                    "{} block {k} exceeds the crop's {} blocks",
                    c.grid.crop.corner.name(),
                    c.grid.n_blocks
                )));
            }
        }
        Ok(truth)
    }
}

fn inspect(args: &InspectArgs, truth: Option<&Path>) -> CliResult<()> {
    let period = Periodicity::new(args.period_rows, args.period_cols)?;
    let canny = CannyParams {
        sigma: args.canny_sigma,
        high_percentile: args.canny_high_pct,
        low_ratio: args.canny_low_ratio,
    };
    canny.validate()?;
    if !(args.tau.is_finite() && args.tau >= 0.0) {
        return Err(CliError::new(exit::USAGE, format!("--tau must be >= 0, got {}", args.tau)));
    }
    let threads = thread_setting()?;
    let params = InspectParams { period, canny, tau: args.tau };

    let t0 = Instant::now();
    let img = read_image(&args.input)?;
    let t_read = t0.elapsed();
    let inspection = inspect_image(&img, &params, threads)?;
    let t_inspect = t0.elapsed() - t_read;

    let mut rep = Report::new(&args.input.display().to_string(), &inspection, &params);
    if let Some(truth_path) = truth {
        let truth = load_truth(truth_path, &inspection)?;
        let metrics = inspection.score(&truth)?;
        print!("{}", metrics_text(&metrics));
        rep.metrics = Some(MetricsTable::from_report(&metrics));
    } else {
        for c in &inspection.crops {
            println!("{}: {:?}", c.grid.crop.corner.name(), c.cut.defective_blocks);
        }
    }
    if args.timings {
        let mut t = BTreeMap::new();
        t.insert("decode", t_read.as_secs_f64() * 1e3);
        t.insert("inspect", t_inspect.as_secs_f64() * 1e3);
        rep.timings_ms = Some(t);
    }

    let (h, w) = (img.height(), img.width());
    let mut outputs = Vec::new();
    if let Some(p) = &args.out_mask {
        outputs.push((p.clone(), encode_for(p, h, w, &inspection.fused.filled.to_u8())?));
    }
    if let Some(p) = &args.out_edges {
        outputs.push((p.clone(), encode_for(p, h, w, &inspection.fused.edges.to_u8())?));
    }
    if let Some(p) = &args.out_overlay {
        outputs.push((p.clone(), encode_for(p, h, w, &inspection.overlay.to_u8())?));
    }
    if let Some(p) = &args.report {
        outputs.push((p.clone(), rep.to_json()));
    }
    write_all(outputs)
}

/// Ground-truth block lists of every corner crop for a rendered spec.
pub fn synth_truth(spec: &SyntheticSpec, mask: &DefectMask) -> crate::Result<Vec<(Corner, Vec<usize>)>> {
    let period = Periodicity::new(spec.period_rows, spec.period_cols)?;
    four_crops(spec.height(), spec.width(), period)?
        .iter()
        .map(|crop| {
            let grid = block_grid(*crop, period)?;
            Ok((crop.corner, ground_truth_blocks(mask, &grid)?))
        })
        .collect()
}

fn synth(args: &SynthArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::new(exit::MALFORMED, format!("cannot read spec {}: {e}", args.spec.display())))?;
    let mut spec = SyntheticSpec::parse(&text)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let (img, mask) = generate_texture(&spec)?;
    let (h, w) = (img.height(), img.width());
    let mut outputs = vec![(args.out_image.clone(), encode_for(&args.out_image, h, w, &img.to_u8())?)];
    if let Some(p) = &args.out_mask {
        outputs.push((p.clone(), encode_for(p, h, w, &mask.to_u8())?));
    }
    if let Some(p) = &args.truth {
        let truth = synth_truth(&spec, &mask).map_err(|e| match e {
            Error::TooFewPeriods { .. } => CliError::new(exit::MALFORMED, format!("spec cannot be cropped: {e}")),
            other => other.into(),
        })?;
        outputs.push((p.clone(), truth_to_text(&truth).into_bytes()));
    }
    write_all(outputs)
}
