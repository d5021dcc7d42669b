//! Command-line entry point for the upward-lightning risk pipeline.
//!
//! Every subcommand reads its inputs read-only and writes all artifacts
//! into `--out`. A flat key=value config file can hold any long flag's
//! value; explicit flags win. Exit codes: 0 success, 2 configuration
//! error, 3 data error, 4 internal invariant violation. Failures emit a
//! single machine-readable JSON line on stderr.

mod commands;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "ulrisk", version, about = "Upward-lightning risk maps from conditional-inference forests")]
struct Cli {
    /// Flat key=value config file; explicit flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed driving every randomized stage (config key: seed)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread cap; results do not depend on it (config key: workers)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory, created if missing (config key: out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a feature table and write its canonical form
    Ingest(IngestArgs),
    /// Generate synthetic datasets or gridded fields with known truth
    Synth(SynthArgs),
    /// Fit an ensemble of forests on balanced event/pool samples
    Train(TrainArgs),
    /// Leave-one-event-day-out cross-validation
    Cv(CvArgs),
    /// Permutation variable importance for a saved ensemble
    Importance(ImportanceArgs),
    /// Match strike locations to turbines within a radius
    Match(MatchArgs),
    /// Evaluate an ensemble on grid-cell centers for a list of hours
    DiagnoseGrid(DiagnoseGridArgs),
    /// Threshold-exceedance risk maps from probability rasters
    Riskmap(RiskmapArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Feature table CSV (config key: features)
    #[arg(long)]
    features: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// What to generate: tower | pool | samples | grid
    #[arg(long)]
    kind: Option<String>,
    /// Distinct event days for kind=tower (config key: event-days)
    #[arg(long = "event-days")]
    event_days: Option<usize>,
    /// Row count for kind=pool/samples (config key: rows)
    #[arg(long)]
    rows: Option<usize>,
    /// Nonzero logistic weights as idx:weight pairs (config key: signal)
    #[arg(long)]
    signal: Option<String>,
    /// Logistic intercept (config key: intercept)
    #[arg(long)]
    intercept: Option<f64>,
    /// Spatial pattern for kind=grid: uniform | west-gradient | frontal-band
    #[arg(long)]
    pattern: Option<String>,
    /// Grid as lat_min,lat_max,lon_min,lon_max,step (config key: grid)
    #[arg(long)]
    grid: Option<String>,
    /// First hour for kind=grid (config key: start)
    #[arg(long)]
    start: Option<String>,
    /// Hour count for kind=grid (config key: hours)
    #[arg(long)]
    hours: Option<usize>,
    /// Use the canonical three-block cold-season hour list instead
    /// (config key: cold-season)
    #[arg(long = "cold-season", num_args = 0..=1, default_missing_value = "true")]
    cold_season: Option<bool>,
    /// Field file format for kind=grid: csv | binary
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct ForestArgs {
    /// Trees per forest (config key: trees)
    #[arg(long)]
    trees: Option<usize>,
    /// In-bag fraction, drawn without replacement (config key: subsample)
    #[arg(long)]
    subsample: Option<f64>,
    /// Candidate variables per split (config key: mtry)
    #[arg(long)]
    mtry: Option<usize>,
    /// Split significance level after correction (config key: alpha)
    #[arg(long)]
    alpha: Option<f64>,
    /// Smallest node eligible for splitting (config key: min-split)
    #[arg(long = "min-split")]
    min_split: Option<usize>,
    /// Smallest allowed child node (config key: min-bucket)
    #[arg(long = "min-bucket")]
    min_bucket: Option<usize>,
    /// Largest n for exact permutation p-values (config key: max-perm-n)
    #[arg(long = "max-perm-n")]
    max_perm_n: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Event rows CSV; only UL rows are used (config key: events)
    #[arg(long)]
    events: Option<PathBuf>,
    /// No-UL pool CSV (config key: pool)
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Ensemble size (config key: models)
    #[arg(long)]
    models: Option<usize>,
    #[command(flatten)]
    forest: ForestArgs,
}

#[derive(Args)]
struct CvArgs {
    /// Labeled event table CSV (config key: data)
    #[arg(long)]
    data: Option<PathBuf>,
    /// No-UL pool CSV (config key: pool)
    #[arg(long)]
    pool: Option<PathBuf>,
    #[command(flatten)]
    forest: ForestArgs,
    /// Ensemble size for the false-positive panel; 0 skips it
    /// (config key: fp-models)
    #[arg(long = "fp-models")]
    fp_models: Option<usize>,
    /// No-UL days sampled per season and year for the panel
    /// (config key: no-ul-days)
    #[arg(long = "no-ul-days")]
    no_ul_days: Option<usize>,
    /// Permutation repeats for fold-model importance, each fold model
    /// scored on its balanced training sample; 0 skips it
    /// (config key: importance-repeats)
    #[arg(long = "importance-repeats")]
    importance_repeats: Option<usize>,
    /// Importance metric: accuracy@0.5 | auc (config key: metric)
    #[arg(long)]
    metric: Option<String>,
}

#[derive(Args)]
struct ImportanceArgs {
    /// Saved ensemble directory (config key: models)
    #[arg(long)]
    models: Option<PathBuf>,
    /// Labeled evaluation CSV, scored against every member
    /// (config key: eval)
    #[arg(long)]
    eval: Option<PathBuf>,
    /// Metric: accuracy@0.5 | auc (config key: metric)
    #[arg(long)]
    metric: Option<String>,
    /// Permutations per variable (config key: repeats)
    #[arg(long)]
    repeats: Option<usize>,
}

#[derive(Args)]
struct MatchArgs {
    /// Strike events CSV (config key: strikes)
    #[arg(long)]
    strikes: Option<PathBuf>,
    /// Turbine locations CSV (config key: turbines)
    #[arg(long)]
    turbines: Option<PathBuf>,
    /// Match radius in degrees (config key: radius)
    #[arg(long)]
    radius: Option<f64>,
    /// Distance mode: euclidean | great-circle (config key: mode)
    #[arg(long)]
    mode: Option<String>,
    /// Also write per-cell distinct flash hours on the grid
    /// (config key: flash-hours)
    #[arg(long = "flash-hours", num_args = 0..=1, default_missing_value = "true")]
    flash_hours: Option<bool>,
    /// Grid as lat_min,lat_max,lon_min,lon_max,step (config key: grid)
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
struct DiagnoseGridArgs {
    /// Saved ensemble directory (config key: models)
    #[arg(long)]
    models: Option<PathBuf>,
    /// Gridded fields directory (config key: fields)
    #[arg(long)]
    fields: Option<PathBuf>,
    /// Comma-separated hour list (config key: hours)
    #[arg(long)]
    hours: Option<String>,
    /// File with one hour per line (config key: hours-file)
    #[arg(long = "hours-file")]
    hours_file: Option<PathBuf>,
    /// Diagnose every hour present in the fields (config key: all-hours)
    #[arg(long = "all-hours", num_args = 0..=1, default_missing_value = "true")]
    all_hours: Option<bool>,
}

#[derive(Args)]
struct RiskmapArgs {
    /// Probability rasters CSV (config key: rasters)
    #[arg(long)]
    rasters: Option<PathBuf>,
    /// Comma-separated thresholds in (0,1) (config key: thresholds)
    #[arg(long)]
    thresholds: Option<String>,
    /// Turbine locations CSV; cells without turbines get flagged
    /// (config key: turbines)
    #[arg(long)]
    turbines: Option<PathBuf>,
}

/// CLI-level failure: an exit code, a coarse kind, and a message.
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> CliError {
        CliError {
            code: 2,
            kind: "config",
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> CliError {
        CliError {
            code: 3,
            kind: "data",
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> CliError {
        CliError {
            code: 4,
            kind: "internal",
            message: message.into(),
        }
    }
}

impl From<ulrisk_core::Error> for CliError {
    fn from(err: ulrisk_core::Error) -> CliError {
        use ulrisk_core::Error::*;
        match err {
            // bad knobs and limits: the caller's configuration
            InvalidParams { .. } | InvalidThreshold { .. } | TooLarge { .. } => {
                CliError::config(err.to_string())
            }
            Internal { .. } => CliError::internal(err.to_string()),
            // everything else is a problem with the supplied data
            _ => CliError::data(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Values from a key=value config file; flags take precedence over these.
pub struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    fn empty() -> ConfigMap {
        ConfigMap(BTreeMap::new())
    }

    fn load(path: &Path) -> CliResult<ConfigMap> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "config line {} is not key=value: '{line}'",
                    i + 1
                )));
            };
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(ConfigMap(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::config(format!("config key '{key}' has unusable value '{raw}'"))
            }),
        }
    }
}

/// Flag value if given, else config value, else the default.
pub fn resolve<T: FromStr>(
    flag: Option<T>,
    cfg: &ConfigMap,
    key: &str,
    default: T,
) -> CliResult<T> {
    Ok(flag.or(cfg.get(key)?).unwrap_or(default))
}

/// Flag value if given, else config value, else None.
pub fn resolve_opt<T: FromStr>(flag: Option<T>, cfg: &ConfigMap, key: &str) -> CliResult<Option<T>> {
    Ok(flag.or(cfg.get(key)?))
}

/// Flag value if given, else config value, else a config error.
pub fn resolve_required<T: FromStr>(flag: Option<T>, cfg: &ConfigMap, key: &str) -> CliResult<T> {
    resolve_opt(flag, cfg, key)?
        .ok_or_else(|| CliError::config(format!("missing required option --{key} (config key: {key})")))
}

/// Input paths must exist before any work starts.
pub fn require_exists(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "input path does not exist: {}",
            path.display()
        )))
    }
}

/// Globals shared by every subcommand.
pub struct Ctx {
    pub seed: u64,
    pub out: PathBuf,
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::empty(),
    };
    let seed = resolve(cli.seed, &cfg, "seed", 1)?;
    let out: PathBuf = resolve(cli.out, &cfg, "out", PathBuf::from("out"))?;
    if let Some(workers) = resolve_opt(cli.workers, &cfg, "workers")? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::internal(format!("worker pool: {e}")))?;
    }
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::config(format!("cannot create output dir {}: {e}", out.display())))?;
    let ctx = Ctx { seed, out };
    match cli.command {
        Command::Ingest(args) => commands::ingest(&ctx, &cfg, args),
        Command::Synth(args) => commands::synth(&ctx, &cfg, args),
        Command::Train(args) => commands::train(&ctx, &cfg, args),
        Command::Cv(args) => commands::cv(&ctx, &cfg, args),
        Command::Importance(args) => commands::importance(&ctx, &cfg, args),
        Command::Match(args) => commands::match_strikes(&ctx, &cfg, args),
        Command::DiagnoseGrid(args) => commands::diagnose_grid(&ctx, &cfg, args),
        Command::Riskmap(args) => commands::riskmap(&ctx, &cfg, args),
    }
}

fn main() -> ExitCode {
    // Exit quietly when a downstream reader (pager, `head`) closes stdout
    // early, like conventional Unix filters, instead of panicking on EPIPE.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config(e.to_string());
            eprintln!(
                "{}",
                json!({"error": {"kind": err.kind, "code": err.code, "message": err.message}})
            );
            return ExitCode::from(err.code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!(
                "{}",
                json!({"error": {"kind": err.kind, "code": err.code, "message": err.message}})
            );
            ExitCode::from(err.code)
        }
    }
}
