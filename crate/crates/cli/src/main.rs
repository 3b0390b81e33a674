use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use frontier_core::bandwidth::{simulation_bandwidth, AdaptiveConfig, ThresholdRule};
use frontier_core::estimator::{fit_grid, Dataset, EmptyWindowPolicy, EstimatorConfig, FallbackPolicy};
use frontier_core::harness::{
    evaluation_grid, run_adaptive, run_mse, run_rate_study, write_adaptive_csv, CellResult, ExperimentSpec,
};

const THREADS_ENV: &str = "FRONTIER_THREADS";

#[derive(Parser)]
#[command(name = "frontier", version, about = "Local polynomial frontier estimation and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the frontier of a dataset at given points.
    Fit(FitArgs),
    /// Run a Monte Carlo MSE experiment.
    Simulate(RunArgs),
    /// Estimate the log-log slope of the sup-error over the configured sample sizes.
    RateStudy(RunArgs),
    /// Run the adaptive bandwidth rule on simulated samples.
    Adaptive(RunArgs),
}

#[derive(clap::Args)]
struct FitArgs {
    /// CSV with header x1,...,xq,y.
    data: PathBuf,
    /// Evaluation point as comma-separated coordinates; repeatable.
    #[arg(long, value_delimiter = ';', conflicts_with = "grid")]
    point: Vec<String>,
    /// Evaluate on the lattice {i/N : i = 1..N}^q.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = 1)]
    beta_star: u32,
    /// Defaults to n^(-1/(beta*+1+q)).
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, value_enum, default_value_t = Fallback::DegradeDegree)]
    fallback: Fallback,
    #[arg(long, value_enum, default_value_t = EmptyWindow::Expand)]
    empty_window: EmptyWindow,
    /// Write the estimates here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fallback {
    Error,
    DegradeDegree,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmptyWindow {
    Error,
    Expand,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML experiment file.
    config: PathBuf,
    /// Directory for the CSV and JSON outputs.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Override the configured replication count.
    #[arg(long)]
    replications: Option<usize>,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
}

/// Top-level layout of an experiment file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: ExperimentSpec,
    adaptive: Option<AdaptiveSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdaptiveSection {
    #[serde(default = "default_s")]
    s: f64,
    #[serde(default = "default_rho")]
    rho: f64,
    /// Points per axis of the comparison grid.
    #[serde(default = "default_grid_per_axis")]
    grid_per_axis: usize,
    #[serde(default = "default_threshold")]
    threshold: ThresholdRule,
}

fn default_s() -> f64 {
    0.5
}

fn default_rho() -> f64 {
    1.25
}

fn default_grid_per_axis() -> usize {
    10
}

fn default_threshold() -> ThresholdRule {
    ThresholdRule::Default { constant: 1.0 }
}

impl AdaptiveSection {
    fn to_config(&self, dim: usize) -> AdaptiveConfig {
        AdaptiveConfig::new(self.s, self.rho, evaluation_grid(dim, self.grid_per_axis), self.threshold.clone())
    }
}

fn load_config(args: &RunArgs) -> Result<(ExperimentSpec, Option<AdaptiveSection>)> {
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let file: ConfigFile = toml::from_str(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    let mut spec = file.experiment;
    if let Some(r) = args.replications {
        spec.replications = r;
    }
    if let Some(s) = args.seed {
        spec.master_seed = s;
    }
    spec.validate()?;
    Ok((spec, file.adaptive))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().with_context(|| format!("bad coordinate {c:?} in point {s:?}")))
        .collect()
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let data = Dataset::read_csv_file(&args.data)?;
    let points = match args.grid {
        Some(n) => evaluation_grid(data.dim(), n),
        None if args.point.is_empty() => bail!("pass --point or --grid"),
        None => args.point.iter().map(|p| parse_point(p)).collect::<Result<_>>()?,
    };
    let h = args
        .bandwidth
        .unwrap_or_else(|| simulation_bandwidth(data.len(), data.dim(), args.beta_star));
    let cfg = EstimatorConfig::new(args.beta_star, h)
        .with_fallback(match args.fallback {
            Fallback::Error => FallbackPolicy::Error,
            Fallback::DegradeDegree => FallbackPolicy::DegradeDegree,
        })
        .with_empty_window(match args.empty_window {
            EmptyWindow::Error => EmptyWindowPolicy::Error,
            EmptyWindow::Expand => EmptyWindowPolicy::Expand,
        });
    let fits = fit_grid(&data, &points, &cfg)?;

    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let coords: Vec<String> = (1..=data.dim()).map(|r| format!("x{r}")).collect();
    writeln!(out, "{},value,status,n_active", coords.join(","))?;
    for (x, fit) in points.iter().zip(&fits) {
        let xs: Vec<String> = x.iter().map(f64::to_string).collect();
        writeln!(out, "{},{},{},{}", xs.join(","), fit.value, fit.status.label(), fit.n_active)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    master_seed: u64,
    spec: &'a ExperimentSpec,
    cells: &'a [CellResult],
}

fn cmd_simulate(args: RunArgs) -> Result<()> {
    let (spec, _) = load_config(&args)?;
    let table = run_mse(&spec)?;
    let mut csv = create(&args.out_dir, "results.csv")?;
    table.write_csv(&mut csv)?;
    csv.flush()?;
    write_json(
        &args.out_dir,
        "summary.json",
        &SimulateSummary {
            master_seed: spec.master_seed,
            spec: &spec,
            cells: &table.cells,
        },
    )?;
    print!("{}", table.display_grid());
    Ok(())
}

fn cmd_rate_study(args: RunArgs) -> Result<()> {
    let (spec, _) = load_config(&args)?;
    let studies = run_rate_study(&spec, &spec.n_list)?;
    let mut csv = create(&args.out_dir, "rate_study.csv")?;
    for (i, s) in studies.iter().enumerate() {
        let mut buf = Vec::new();
        s.write_csv(&mut buf)?;
        // one header for the whole file
        let text = String::from_utf8(buf)?;
        let body = if i == 0 { &text[..] } else { text.split_once('\n').map_or("", |(_, b)| b) };
        csv.write_all(body.as_bytes())?;
    }
    csv.flush()?;
    write_json(
        &args.out_dir,
        "rate_study.json",
        &serde_json::json!({ "master_seed": spec.master_seed, "spec": &spec, "studies": &studies }),
    )?;
    for s in &studies {
        let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        println!(
            "beta* = {}: slope {} (expected {})",
            s.beta_star,
            fmt(s.slope),
            fmt(s.expected_slope)
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct AdaptiveRecord {
    beta_star: u32,
    n: usize,
    replication: usize,
    k_hat: usize,
    bandwidth: f64,
    trigger: Option<(usize, usize)>,
    tail_index: Option<f64>,
}

fn cmd_adaptive(args: RunArgs) -> Result<()> {
    let (spec, section) = load_config(&args)?;
    let section = section.unwrap_or_else(|| AdaptiveSection {
        s: default_s(),
        rho: default_rho(),
        grid_per_axis: default_grid_per_axis(),
        threshold: default_threshold(),
    });
    let cfg = section.to_config(spec.dim);
    let runs = run_adaptive(&spec, &cfg)?;
    let mut csv = create(&args.out_dir, "adaptive.csv")?;
    write_adaptive_csv(&runs, &mut csv)?;
    csv.flush()?;
    let records: Vec<AdaptiveRecord> = runs
        .iter()
        .map(|r| AdaptiveRecord {
            beta_star: r.beta_star,
            n: r.n,
            replication: r.replication,
            k_hat: r.result.selection.k_hat,
            bandwidth: r.result.bandwidth,
            trigger: r.result.selection.trigger,
            tail_index: r.result.tail_index,
        })
        .collect();
    write_json(
        &args.out_dir,
        "adaptive.json",
        &serde_json::json!({
            "master_seed": spec.master_seed,
            "spec": &spec,
            "adaptive": &section,
            "runs": &records,
        }),
    )?;
    for r in &records {
        println!(
            "beta* = {}, n = {}, replication {}: k_hat = {}, h = {:.4}",
            r.beta_star, r.n, r.replication, r.k_hat, r.bandwidth
        );
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?,
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn error_record(kind: &str, err: &anyhow::Error) -> serde_json::Value {
    let chain: Vec<String> = err.chain().map(ToString::to_string).collect();
    serde_json::json!({ "error": { "kind": kind, "message": chain.join(": ") } })
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<frontier_core::Error>() {
            return e.kind();
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return "config";
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return "io";
        }
    }
    "usage"
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = anyhow::Error::msg(e.to_string().trim().to_string());
            eprintln!("{}", error_record("usage", &err));
            return ExitCode::from(2);
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::RateStudy(a) => cmd_rate_study(a),
        Command::Adaptive(a) => cmd_adaptive(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_record(error_kind(&err), &err));
            ExitCode::FAILURE
        }
    }
}
