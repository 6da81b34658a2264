//! Command-line driver: single runs, grid sweeps and plots.
//!
//! Exit status is 0 on success, 1 for usage and configuration errors and 2
//! for file system errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bitworld::config::{Config, Grid};
use bitworld::dynamics::run_simulation;
use bitworld::report::{
    self, HeatmapMetric, SummaryDocument, TrajectoryField, TrajectoryPlot, TrajectoryTable,
};
use bitworld::sweep::run_sweep_with;
use bitworld::{Config64, Error, Result};
use clap::{Args, Parser, Subcommand};

/// Worker count used by `sweep` when `--workers` is not given.
const WORKERS_ENV: &str = "BITWORLD_WORKERS";

#[derive(Parser)]
#[command(name = "bitworld", version, about = "Simulate co-evolving technological systems and search spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its trajectory.
    Run(RunArgs),
    /// Run every cell of an eta x lambda grid.
    Sweep(SweepArgs),
    /// Render SVG figures from earlier output.
    Plot(PlotArgs),
}

#[derive(Args)]
struct Common {
    /// JSON configuration; missing keys take the defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// Run seed for `run`, master seed for `sweep`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_generations: Option<u64>,
    /// Record every n-th generation.
    #[arg(long)]
    thin: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated eta grid.
    #[arg(long, value_delimiter = ',')]
    eta: Vec<f64>,
    /// Comma-separated lambda grid.
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    /// Runs per grid cell.
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads; falls back to BITWORLD_WORKERS, then the config.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    /// Output directory of `run` or `sweep`, or a summary JSON or trajectory CSV.
    #[arg(long, short, default_value = "out")]
    input: PathBuf,
    /// Where to write the SVGs; defaults to the input directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Heatmap metric.
    #[arg(long, value_parser = ["log2_survival", "mean_c_t", "barrier_fraction"])]
    metric: Option<String>,
    /// Trajectory field.
    #[arg(long, value_parser = ["c_t", "c_s", "effectiveness"])]
    field: Option<String>,
    /// Logarithmic y axis for trajectories.
    #[arg(long)]
    log_y: bool,
    /// One trajectory panel per grid cell.
    #[arg(long)]
    facet: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Plot(args) => plot(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}

fn load(common: &Common) -> Result<Config64> {
    let mut config = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(g) = common.max_generations {
        config.max_generations = g;
    }
    if let Some(thin) = common.thin {
        config.trajectory_thinning = thin;
    }
    Ok(config)
}

/// Creates the output directory and records the resolved configuration.
fn prepare_output(dir: &Path, config: &Config64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("config.json");
    std::fs::write(&path, config.to_json()).map_err(|e| Error::io(&path, e))
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = load(&args.common)?;
    config.seed = args.common.seed.unwrap_or(config.seed);
    config.eta = args.eta.unwrap_or(config.eta);
    config.lambda = args.lambda.unwrap_or(config.lambda);
    config.validate()?;
    let params = config.params();
    prepare_output(&args.common.out, &config)?;

    let result = run_simulation(&params)?;
    let mut table = TrajectoryTable::new();
    table.push_run(params.eta, params.lambda, 0, &result);
    report::write_trajectories(&table, &args.common.out.join("trajectory.csv"))?;
    println!(
        "eta={} lambda={} seed={} halt={} generations={} survival={} final_c_t={} final_c_s={} max_c_t={}",
        params.eta,
        params.lambda,
        params.seed,
        result.halt_reason.as_str(),
        result.generations,
        result.survival(params.max_generations),
        result.final_c_t,
        result.final_c_s,
        result.max_c_t,
    );
    Ok(())
}

fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(WORKERS_ENV, format!("expected a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut config = load(&args.common)?;
    config.master_seed = args.common.seed.unwrap_or(config.master_seed);
    if !args.eta.is_empty() {
        config.eta_grid = Grid::Values(args.eta);
    }
    if !args.lambda.is_empty() {
        config.lambda_grid = Grid::Values(args.lambda);
    }
    config.runs_per_cell = args.runs.unwrap_or(config.runs_per_cell);
    let workers = match args.workers {
        Some(n) => Some(n),
        None => workers_from_env()?,
    };
    if workers.is_some() {
        config.workers = workers;
    }
    config.validate()?;
    let sweep = config.sweep()?;
    let out = &args.common.out;
    let trajectories = out.join("trajectories");
    prepare_output(out, &config)?;
    std::fs::create_dir_all(&trajectories).map_err(|e| Error::io(&trajectories, e))?;

    let outcome = run_sweep_with(&sweep, |r| {
        let mut table = TrajectoryTable::new();
        table.push_run(r.eta, r.lambda, r.run, &r.result);
        let name = format!("eta{:03}_lambda{:03}_run{:06}.csv", r.eta_index, r.lambda_index, r.run);
        report::write_trajectories(&table, &trajectories.join(name))?;
        r.result.trajectory = Vec::new();
        Ok(())
    })?;
    report::write_summary(&config, &outcome.cells, &out.join("summary.json"))?;
    println!(
        "cells={} runs={} barrier_fraction={}",
        outcome.cells.len(),
        outcome.runs.len(),
        outcome.barrier_fraction()
    );
    Ok(())
}

fn plot(args: PlotArgs) -> Result<()> {
    let input = &args.input;
    let is_csv = input.extension().is_some_and(|e| e == "csv");
    let (summary, csvs) = if input.is_dir() {
        (input.join("summary.json"), trajectory_files(input)?)
    } else if is_csv {
        (PathBuf::new(), vec![input.clone()])
    } else {
        (input.clone(), Vec::new())
    };
    let out = args.out.clone().unwrap_or_else(|| {
        if input.is_dir() {
            input.clone()
        } else {
            input.parent().map(Path::to_path_buf).unwrap_or_default()
        }
    });

    let metric = args.metric.as_deref().map(|m| HeatmapMetric::parse(m).expect("checked by clap"));
    let field = args.field.as_deref().map(|f| TrajectoryField::parse(f).expect("checked by clap"));
    let (metric, field) = match (metric, field) {
        (None, None) if summary.is_file() => (Some(HeatmapMetric::Log2Survival), None),
        (None, None) => (None, Some(TrajectoryField::CT)),
        chosen => chosen,
    };
    if metric.is_some() && !summary.is_file() {
        return Err(Error::invalid(format!("no summary file at {}", summary.display())));
    }
    if field.is_some() && csvs.is_empty() {
        return Err(Error::invalid(format!("no trajectory CSV under {}", input.display())));
    }

    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    if let Some(metric) = metric {
        let doc: SummaryDocument<Config64, f64> = report::read_summary(&summary)?;
        let path = out.join(format!("heatmap_{}.svg", metric.as_str()));
        report::render_heatmap(&doc.cells, metric, &path)?;
        println!("{}", path.display());
    }
    if let Some(field) = field {
        let mut table = TrajectoryTable::<f64>::new();
        for csv in &csvs {
            table.rows.extend(report::read_trajectories::<f64>(csv)?.rows);
        }
        let plot = TrajectoryPlot {
            field,
            log_y: args.log_y,
            facet: args.facet,
        };
        let path = out.join(format!("trajectories_{}.svg", field.as_str()));
        report::render_trajectories(&table, plot, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}

/// `trajectory.csv` from `run`, or the per-run files from `sweep` in name
/// order.
fn trajectory_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let single = dir.join("trajectory.csv");
    if single.is_file() {
        return Ok(vec![single]);
    }
    let sub = dir.join("trajectories");
    if !sub.is_dir() {
        return Ok(Vec::new());
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(&sub).map_err(|e| Error::io(&sub, e))? {
        let path = entry.map_err(|e| Error::io(&sub, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}
