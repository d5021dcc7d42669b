//! One function per subcommand. Inputs are read-only; every artifact
//! lands in the output directory.

use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeDelta, Utc};

use ulrisk_core::dataset::{parse_timestamp, Dataset, Label};
use ulrisk_core::forest::{
    EnsembleModel, ForestModel, ForestParams, DEFAULT_IMPORTANCE_REPEATS, DEFAULT_N_TREES,
    DEFAULT_SUBSAMPLE_FRACTION,
};
use ulrisk_core::grid::{load_fieldset_dir, save_fieldset_dir, GridFileFormat, GridSpec};
use ulrisk_core::matching::{
    flash_hours_per_cell, load_strikes_csv, match_strikes_to_turbines, DistanceMode, TurbineSet,
    DEFAULT_MATCH_RADIUS_DEG,
};
use ulrisk_core::metrics::Metric;
use ulrisk_core::riskmap::{
    canonical_cold_season_hours, diagnose_grid_hour, exceedance_counts, load_rasters_csv,
    save_rasters_csv, DEFAULT_THRESHOLD,
};
use ulrisk_core::schema::FeatureSchema;
use ulrisk_core::synth::{
    generate_grid_fields, generate_negative_pool, generate_samples, generate_tower_dataset,
    SpatialPattern, SynthConfig,
};
use ulrisk_core::tree::TreeParams;
use ulrisk_core::validation::{
    diagnostic_summary, fit_ensemble, loocv_by_day, sample_no_ul_rows, save_cv_results,
    save_summary, DEFAULT_NO_UL_DAYS_PER_SEASON_YEAR,
};

use crate::{
    require_exists, resolve, resolve_opt, resolve_required, CliError, CliResult, ConfigMap, Ctx,
    CvArgs, DiagnoseGridArgs, ForestArgs, ImportanceArgs, IngestArgs, MatchArgs, RiskmapArgs,
    SynthArgs, TrainArgs,
};

fn load_table(path: &Path) -> CliResult<Dataset> {
    require_exists(path)?;
    Ok(Dataset::load_feature_table(path, &FeatureSchema::canonical())?)
}

fn parse_grid_spec(raw: &str) -> CliResult<GridSpec> {
    let parts: Vec<f64> = raw
        .split(',')
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::config(format!("grid '{raw}' is not five numbers")))?;
    let [lat_min, lat_max, lon_min, lon_max, step] = parts.as_slice() else {
        return Err(CliError::config(format!(
            "grid '{raw}' needs lat_min,lat_max,lon_min,lon_max,step"
        )));
    };
    Ok(GridSpec::new(*lat_min, *lat_max, *lon_min, *lon_max, *step)?)
}

fn resolve_grid_spec(flag: Option<String>, cfg: &ConfigMap, key: &str) -> CliResult<GridSpec> {
    match resolve_opt(flag, cfg, key)? {
        Some(raw) => parse_grid_spec(&raw),
        None => Ok(GridSpec::canonical()),
    }
}

/// "0:2.0,1:-1.5" -> full-length coefficient vector.
fn parse_signal(raw: &str) -> CliResult<Vec<f64>> {
    let mut coefficients = vec![0.0; FeatureSchema::canonical().count()];
    for pair in raw.split(',') {
        let bad = || CliError::config(format!("signal entry '{pair}' is not idx:weight"));
        let (idx, weight) = pair.split_once(':').ok_or_else(bad)?;
        let idx: usize = idx.trim().parse().map_err(|_| bad())?;
        let weight: f64 = weight.trim().parse().map_err(|_| bad())?;
        if idx >= coefficients.len() {
            return Err(CliError::config(format!(
                "signal index {idx} exceeds the {}-variable schema",
                coefficients.len()
            )));
        }
        coefficients[idx] = weight;
    }
    Ok(coefficients)
}

fn parse_hour(raw: &str) -> CliResult<DateTime<Utc>> {
    parse_timestamp(raw.trim())
        .ok_or_else(|| CliError::config(format!("cannot parse timestamp '{raw}'")))
}

fn parse_metric(raw: &str) -> CliResult<Metric> {
    raw.parse()
        .map_err(|_| CliError::config(format!("unknown metric '{raw}'")))
}

fn forest_params(args: &ForestArgs, cfg: &ConfigMap, seed: u64) -> CliResult<ForestParams> {
    let d = TreeParams::default();
    Ok(ForestParams {
        n_trees: resolve(args.trees, cfg, "trees", DEFAULT_N_TREES)?,
        subsample_fraction: resolve(args.subsample, cfg, "subsample", DEFAULT_SUBSAMPLE_FRACTION)?,
        tree_params: TreeParams {
            alpha: resolve(args.alpha, cfg, "alpha", d.alpha)?,
            min_split: resolve(args.min_split, cfg, "min-split", d.min_split)?,
            min_bucket: resolve(args.min_bucket, cfg, "min-bucket", d.min_bucket)?,
            mtry: resolve(args.mtry, cfg, "mtry", d.mtry)?,
            max_permutation_n: resolve(args.max_perm_n, cfg, "max-perm-n", d.max_permutation_n)?,
        },
        seed,
    })
}

fn write_truth_column(probs: &[f64], path: &Path) -> CliResult<()> {
    let mut text = String::from("true_probability\n");
    for p in probs {
        text.push_str(&format!("{p}\n"));
    }
    std::fs::write(path, text).map_err(|e| CliError::data(e.to_string()))
}

pub fn ingest(ctx: &Ctx, cfg: &ConfigMap, args: IngestArgs) -> CliResult<()> {
    let features = resolve_required(args.features, cfg, "features")?;
    let data = load_table(&features)?;
    let out = ctx.out.join("data.csv");
    data.save_csv(&out)?;
    println!(
        "ingested {} rows ({} positive, {} event days) -> {}",
        data.len(),
        data.count_positive(),
        data.event_days().len(),
        out.display()
    );
    Ok(())
}

pub fn synth(ctx: &Ctx, cfg: &ConfigMap, args: SynthArgs) -> CliResult<()> {
    let kind: String = resolve_required(args.kind, cfg, "kind")?;
    let pattern: String = resolve(args.pattern, cfg, "pattern", "uniform".into())?;
    let config = SynthConfig {
        coefficients: parse_signal(&resolve(
            args.signal,
            cfg,
            "signal",
            "0:2.0,1:-1.5,2:1.0".into(),
        )?)?,
        intercept: resolve(args.intercept, cfg, "intercept", 0.0)?,
        n_event_days: resolve(args.event_days, cfg, "event-days", 40)?,
        seed: ctx.seed,
        spatial_pattern: pattern
            .parse::<SpatialPattern>()
            .map_err(|e| CliError::config(e.to_string()))?,
    };
    match kind.as_str() {
        "tower" => {
            let (data, probs) = generate_tower_dataset(&config)?;
            let out = ctx.out.join("events.csv");
            data.save_csv(&out)?;
            write_truth_column(&probs, &ctx.out.join("events_truth.csv"))?;
            println!(
                "{} event rows on {} days -> {}",
                data.len(),
                data.event_days().len(),
                out.display()
            );
        }
        "pool" => {
            let rows = resolve(args.rows, cfg, "rows", 1000)?;
            let (data, probs) = generate_negative_pool(&config, rows)?;
            let out = ctx.out.join("pool.csv");
            data.save_csv(&out)?;
            write_truth_column(&probs, &ctx.out.join("pool_truth.csv"))?;
            println!("{} no-UL rows -> {}", data.len(), out.display());
        }
        "samples" => {
            let rows = resolve(args.rows, cfg, "rows", 1000)?;
            let (data, probs) = generate_samples(&config, rows)?;
            let out = ctx.out.join("samples.csv");
            data.save_csv(&out)?;
            write_truth_column(&probs, &ctx.out.join("samples_truth.csv"))?;
            println!(
                "{} rows ({} positive) -> {}",
                data.len(),
                data.count_positive(),
                out.display()
            );
        }
        "grid" => {
            let spec = resolve_grid_spec(args.grid, cfg, "grid")?;
            let hours = if resolve(args.cold_season, cfg, "cold-season", false)? {
                canonical_cold_season_hours()
            } else {
                let start = parse_hour(&resolve(args.start, cfg, "start", "2019-01-01T00:00Z".into())?)?;
                let n: usize = resolve(args.hours, cfg, "hours", 24)?;
                (0..n as i64).map(|i| start + TimeDelta::hours(i)).collect()
            };
            let (fields, truths) = generate_grid_fields(&config, spec, &hours)?;
            let format = match resolve(args.format, cfg, "format", "csv".into())?.as_str() {
                "csv" => GridFileFormat::Csv,
                "binary" => GridFileFormat::Binary,
                other => return Err(CliError::config(format!("unknown field format '{other}'"))),
            };
            let fields_dir = ctx.out.join("fields");
            save_fieldset_dir(&fields, &fields_dir, format)?;
            let mut truth_text = String::from("time,row,col,true_probability\n");
            for (t, per_hour) in hours.iter().zip(&truths) {
                for row in 0..spec.n_rows() {
                    for col in 0..spec.n_cols() {
                        truth_text.push_str(&format!(
                            "{},{row},{col},{}\n",
                            ulrisk_core::dataset::format_timestamp(*t),
                            per_hour[row * spec.n_cols() + col]
                        ));
                    }
                }
            }
            std::fs::write(ctx.out.join("grid_truth.csv"), truth_text)
                .map_err(|e| CliError::data(e.to_string()))?;
            println!(
                "{} variables x {} hours on {} cells -> {}",
                FeatureSchema::canonical().count(),
                hours.len(),
                spec.n_cells(),
                fields_dir.display()
            );
        }
        other => {
            return Err(CliError::config(format!(
                "unknown synth kind '{other}' (tower | pool | samples | grid)"
            )))
        }
    }
    Ok(())
}

pub fn train(ctx: &Ctx, cfg: &ConfigMap, args: TrainArgs) -> CliResult<()> {
    let events_path: PathBuf = resolve_required(args.events, cfg, "events")?;
    let pool_path: PathBuf = resolve_required(args.pool, cfg, "pool")?;
    let n_models = resolve(args.models, cfg, "models", 100)?;
    let params = forest_params(&args.forest, cfg, ctx.seed)?;
    let events = load_table(&events_path)?;
    let pool = load_table(&pool_path)?;
    let positives = events.filter(|r| r.label == Label::Ul);
    let ensemble = fit_ensemble(&positives, &pool, n_models, &params)?;
    let dir = ctx.out.join("ensemble");
    ensemble.save_dir(&dir)?;
    println!(
        "{} models x {} trees on {} positives -> {}",
        ensemble.len(),
        params.n_trees,
        positives.len(),
        dir.display()
    );
    Ok(())
}

pub fn cv(ctx: &Ctx, cfg: &ConfigMap, args: CvArgs) -> CliResult<()> {
    let data_path: PathBuf = resolve_required(args.data, cfg, "data")?;
    let pool_path: PathBuf = resolve_required(args.pool, cfg, "pool")?;
    let params = forest_params(&args.forest, cfg, ctx.seed)?;
    let data = load_table(&data_path)?;
    let pool = load_table(&pool_path)?;
    let results = loocv_by_day(&data, &pool, &params)?;
    let results_path = ctx.out.join("cv_results.csv");
    save_cv_results(&results, &results_path)?;
    println!("{} folds -> {}", results.len(), results_path.display());

    let fp_models = resolve(args.fp_models, cfg, "fp-models", 0)?;
    if fp_models > 0 {
        let no_ul_days = resolve(
            args.no_ul_days,
            cfg,
            "no-ul-days",
            DEFAULT_NO_UL_DAYS_PER_SEASON_YEAR,
        )?;
        let no_ul = sample_no_ul_rows(&pool, no_ul_days, ctx.seed)?;
        let positives = data.filter(|r| r.label == Label::Ul);
        let ensemble = fit_ensemble(&positives, &pool, fp_models, &params)?;
        let summary = diagnostic_summary(&results, &no_ul, &ensemble)?;
        let summary_path = ctx.out.join("summary.csv");
        save_summary(&summary, &summary_path)?;
        println!(
            "tp median {} vs fp median {} -> {}",
            summary.tp_quartiles.median,
            summary.fp_quartiles.median,
            summary_path.display()
        );
    }

    let repeats = resolve(args.importance_repeats, cfg, "importance-repeats", 0)?;
    if repeats > 0 {
        let metric = parse_metric(&resolve(args.metric, cfg, "metric", "accuracy@0.5".into())?)?;
        let models: Vec<ForestModel> = results.iter().map(|r| r.model.clone()).collect();
        // fold test sets hold only the held-out day's events, so score
        // each fold model on its balanced training sample instead
        let evals: Vec<Dataset> = results.iter().map(|r| r.fold.train.clone()).collect();
        let report = ulrisk_core::forest::median_importance(&models, &evals, metric, repeats, ctx.seed)?;
        let path = ctx.out.join("importance.csv");
        report.save_csv(&path)?;
        println!("importance over {} fold models -> {}", models.len(), path.display());
    }
    Ok(())
}

pub fn importance(ctx: &Ctx, cfg: &ConfigMap, args: ImportanceArgs) -> CliResult<()> {
    let models_dir: PathBuf = resolve_required(args.models, cfg, "models")?;
    let eval_path: PathBuf = resolve_required(args.eval, cfg, "eval")?;
    require_exists(&models_dir)?;
    let metric = parse_metric(&resolve(args.metric, cfg, "metric", "accuracy@0.5".into())?)?;
    let repeats = resolve(args.repeats, cfg, "repeats", DEFAULT_IMPORTANCE_REPEATS)?;
    let ensemble = EnsembleModel::load_dir(&models_dir)?;
    let eval = load_table(&eval_path)?;
    let evals: Vec<Dataset> = vec![eval; ensemble.len()];
    let report =
        ulrisk_core::forest::median_importance(&ensemble.models, &evals, metric, repeats, ctx.seed)?;
    let path = ctx.out.join("importance.csv");
    report.save_csv(&path)?;
    let top: Vec<&str> = report.ranked().iter().take(3).map(|v| v.name.as_str()).collect();
    println!("top variables: {} -> {}", top.join(", "), path.display());
    Ok(())
}

pub fn match_strikes(ctx: &Ctx, cfg: &ConfigMap, args: MatchArgs) -> CliResult<()> {
    let strikes_path: PathBuf = resolve_required(args.strikes, cfg, "strikes")?;
    let turbines_path: PathBuf = resolve_required(args.turbines, cfg, "turbines")?;
    require_exists(&strikes_path)?;
    require_exists(&turbines_path)?;
    let radius = resolve(args.radius, cfg, "radius", DEFAULT_MATCH_RADIUS_DEG)?;
    let mode = match resolve(args.mode, cfg, "mode", "euclidean".into())?.as_str() {
        "euclidean" => DistanceMode::DegreeEuclidean,
        "great-circle" => DistanceMode::GreatCircle,
        other => return Err(CliError::config(format!("unknown distance mode '{other}'"))),
    };
    let strikes = load_strikes_csv(&strikes_path)?;
    let turbines = TurbineSet::load_csv(&turbines_path)?;
    let matches = match_strikes_to_turbines(&strikes, &turbines, radius, mode)?;
    let matches_path = ctx.out.join("matches.csv");
    ulrisk_core::matching::save_matches_csv(&matches, &matches_path)?;
    println!(
        "{} matches from {} strikes x {} turbines -> {}",
        matches.len(),
        strikes.len(),
        turbines.len(),
        matches_path.display()
    );
    if resolve(args.flash_hours, cfg, "flash-hours", false)? {
        let spec = resolve_grid_spec(args.grid, cfg, "grid")?;
        let counts = flash_hours_per_cell(&matches, &spec);
        let mut text = String::from("row,col,hours\n");
        for row in 0..spec.n_rows() {
            for col in 0..spec.n_cols() {
                text.push_str(&format!("{row},{col},{}\n", counts[(row, col)]));
            }
        }
        let path = ctx.out.join("flash_hours.csv");
        std::fs::write(&path, text).map_err(|e| CliError::data(e.to_string()))?;
        println!("flash hours per cell -> {}", path.display());
    }
    Ok(())
}

pub fn diagnose_grid(ctx: &Ctx, cfg: &ConfigMap, args: DiagnoseGridArgs) -> CliResult<()> {
    let models_dir: PathBuf = resolve_required(args.models, cfg, "models")?;
    let fields_dir: PathBuf = resolve_required(args.fields, cfg, "fields")?;
    require_exists(&models_dir)?;
    require_exists(&fields_dir)?;
    let hours_flag: Option<String> = resolve_opt(args.hours, cfg, "hours")?;
    let hours_file: Option<PathBuf> = resolve_opt(args.hours_file, cfg, "hours-file")?;
    let all_hours = resolve(args.all_hours, cfg, "all-hours", false)?;
    let sources = hours_flag.is_some() as u8 + hours_file.is_some() as u8 + all_hours as u8;
    if sources != 1 {
        return Err(CliError::config(
            "give exactly one of --hours, --hours-file, --all-hours",
        ));
    }
    let ensemble = EnsembleModel::load_dir(&models_dir)?;
    let fields = load_fieldset_dir(&fields_dir, &FeatureSchema::canonical())?;
    let mut hours: Vec<DateTime<Utc>> = if let Some(raw) = hours_flag {
        raw.split(',').map(parse_hour).collect::<CliResult<_>>()?
    } else if let Some(path) = hours_file {
        require_exists(&path)?;
        std::fs::read_to_string(&path)
            .map_err(|e| CliError::data(e.to_string()))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(parse_hour)
            .collect::<CliResult<_>>()?
    } else {
        fields.times().to_vec()
    };
    hours.sort_unstable();
    hours.dedup();
    let rasters = hours
        .iter()
        .map(|&t| diagnose_grid_hour(&ensemble, &fields, t))
        .collect::<Result<Vec<_>, _>>()?;
    let path = ctx.out.join("rasters.csv");
    save_rasters_csv(&rasters, &path)?;
    println!(
        "{} hourly rasters on {} cells -> {}",
        rasters.len(),
        fields.spec().n_cells(),
        path.display()
    );
    Ok(())
}

pub fn riskmap(ctx: &Ctx, cfg: &ConfigMap, args: RiskmapArgs) -> CliResult<()> {
    let rasters_path: PathBuf = resolve_required(args.rasters, cfg, "rasters")?;
    require_exists(&rasters_path)?;
    let thresholds: Vec<f64> = resolve(
        args.thresholds,
        cfg,
        "thresholds",
        DEFAULT_THRESHOLD.to_string(),
    )?
    .split(',')
    .map(|p| {
        p.trim()
            .parse()
            .map_err(|_| CliError::config(format!("threshold '{p}' is not a number")))
    })
    .collect::<CliResult<_>>()?;
    if thresholds.is_empty() {
        return Err(CliError::config("no thresholds given"));
    }
    let turbines = match resolve_opt::<PathBuf>(args.turbines, cfg, "turbines")? {
        Some(path) => {
            require_exists(&path)?;
            Some(TurbineSet::load_csv(&path)?)
        }
        None => None,
    };
    let rasters = load_rasters_csv(&rasters_path)?;
    let mut summary = String::new();
    for &threshold in &thresholds {
        let mut map = exceedance_counts(&rasters, threshold)?;
        if let Some(turbines) = &turbines {
            map = map.mask_no_turbine_cells(turbines);
        }
        map.save_csv(&ctx.out.join(format!("riskmap_{threshold}.csv")))?;
        map.save_geojson(&ctx.out.join(format!("riskmap_{threshold}.geojson")))?;
        summary.push_str(&map.summary_text());
        summary.push('\n');
    }
    let summary_path = ctx.out.join("summary.txt");
    std::fs::write(&summary_path, &summary).map_err(|e| CliError::data(e.to_string()))?;
    print!("{summary}");
    println!("{} thresholds -> {}", thresholds.len(), summary_path.display());
    Ok(())
}
