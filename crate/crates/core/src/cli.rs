//! Command-line front end: `remesh`, `metrics` and `sweep`.
//!
//! Exit codes: 0 success, 1 I/O or malformed input, 2 invalid arguments or
//! configuration, 3 the pipeline finished but its diagnostics failed (outputs
//! are still written).

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::cvt::{Config, ConfigError, IterationStats, Remesher, SiteUpdate};
use crate::extract::{extract_mesh, ExtractError, Extraction};
use crate::mesh::{load_mesh, sample_uniform, save_mesh, MeshError, TriangleMesh};
use crate::metrics::{quality_report, quality_stats, MetricsError, DEFAULT_SAMPLES};

/// Largest tolerated fraction of sites whose cell was not certified in the
/// final iteration.
pub const MAX_UNSECURED_FRACTION: f64 = 0.05;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("{0}")]
    Diagnostic(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Mesh(_) | CliError::Write { .. } => 1,
            CliError::Extract(_) | CliError::Diagnostic(_) => 3,
            CliError::Config(_) | CliError::Usage(_) | CliError::Metrics(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "facetclip", version, about = "CVT surface remeshing with adaptive facet clipping")]
pub struct Cli {
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Remesh a triangle mesh with a given number of sites.
    Remesh(RemeshArgs),
    /// Compare an input mesh with a remeshed output.
    Metrics(MetricsArgs),
    /// Remesh over a grid of alpha and beta values.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Number of output sites.
    #[arg(long)]
    pub sites: usize,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.7)]
    pub beta: f64,
    #[arg(long, default_value_t = 3)]
    pub max_clips: u8,
    /// Neighbours clipped against per Voronoi cell.
    #[arg(long, default_value_t = 24)]
    pub knn: usize,
    /// Stop once the largest site move, relative to the bounding-box diagonal, is at most this.
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Mesh vertices searched when projecting a centroid onto the surface.
    #[arg(long, default_value_t = 8)]
    pub k_proj: usize,
    /// Bounding-box padding as a fraction of its diagonal.
    #[arg(long, default_value_t = 0.05)]
    pub padding: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

impl ConfigArgs {
    pub fn config(&self) -> Config {
        Config {
            n: self.sites,
            alpha: self.alpha,
            beta: self.beta,
            max_clips: self.max_clips,
            knn: self.knn,
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            k_proj: self.k_proj,
            seed: self.seed,
            padding: self.padding,
        }
    }
}

#[derive(Debug, Args)]
pub struct RemeshArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Write a quality report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write a run manifest with configuration and phase timings (JSON).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Surface samples per mesh for the distance metrics in the report.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Run time to record in the report instead of the measured one.
    #[arg(long)]
    pub time: Option<f64>,
    /// Print per-iteration statistics and per-site decisions as JSON lines on stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output_mesh: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Remeshing time in seconds, for the per-time improvement column.
    #[arg(long)]
    pub time: Option<f64>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Inclusive grid `start:stop:step`.
    #[arg(long, default_value = "0.6:0.9:0.1")]
    pub alpha_grid: String,
    #[arg(long, default_value = "0.5:0.8:0.1")]
    pub beta_grid: String,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Parses `start:stop:step` into the inclusive list of grid values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("grid `{spec}` is not start:stop:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // Round to 12 decimals so 0.6 + 3 * 0.1 prints as 0.9.
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PhaseTimes {
    pub sampling: f64,
    pub iterations: f64,
    pub extraction: f64,
    pub metrics: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub config: Config,
    pub input: PathBuf,
    pub output: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub phases: PhaseTimes,
    pub total: f64,
    pub iterations: usize,
    pub final_delta: Option<f64>,
    pub non_manifold_edges: usize,
}

pub struct PipelineOutput {
    pub extraction: Extraction,
    pub stats: Vec<IterationStats>,
    pub phases: PhaseTimes,
}

/// Sampling, Lloyd iterations and extraction. `observe` sees every iteration.
pub fn run_pipeline(
    mesh: &TriangleMesh,
    cfg: &Config,
    observe: impl FnMut(&IterationStats, &[SiteUpdate]),
) -> Result<PipelineOutput, CliError> {
    let remesher = Remesher::new(mesh, cfg.clone())?;
    let mut phases = PhaseTimes::default();
    let t = Instant::now();
    let initial = sample_uniform(mesh, cfg.n, cfg.seed)?;
    phases.sampling = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let (sites, stats) = remesher.optimize(initial, observe);
    phases.iterations = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let extraction = extract_mesh(mesh, &sites, cfg.knn)?;
    phases.extraction = t.elapsed().as_secs_f64();
    Ok(PipelineOutput {
        extraction,
        stats,
        phases,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_remesh(args: &RemeshArgs, threads: usize) -> Result<(), CliError> {
    let cfg = args.config.config();
    cfg.validate()?;
    if let Some(t) = args.time {
        if !(t > 0.0) {
            return Err(MetricsError::NonPositiveTime(t).into());
        }
    }
    let mesh = load_mesh(&args.input)?;
    let start = Instant::now();
    let verbose = args.verbose;
    let out = run_pipeline(&mesh, &cfg, |stats, updates| {
        if verbose {
            let mut err = std::io::stderr().lock();
            for u in updates {
                let _ = writeln!(
                    err,
                    "{}",
                    serde_json::json!({ "iteration": stats.iteration, "site": u.site, "decision": u.decision,
                        "fell_back": u.fell_back, "secured": u.secured, "knn": u.knn_used })
                );
            }
            let _ = writeln!(err, "{}", serde_json::to_string(stats).expect("stats serialize"));
        }
    })?;
    save_mesh(&out.extraction.mesh, &args.output)?;
    let remesh_time = start.elapsed().as_secs_f64();

    let mut phases = out.phases.clone();
    if let Some(path) = &args.report {
        let t = Instant::now();
        let time = args.time.unwrap_or(remesh_time);
        let report = quality_report(&mesh, &out.extraction.mesh, Some(time), args.samples, cfg.seed)?;
        phases.metrics = t.elapsed().as_secs_f64();
        write_file(path, &(report.to_json() + "\n"))?;
        print!("{report}");
    }
    if let Some(path) = &args.manifest {
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION"),
            config: cfg.clone(),
            input: args.input.clone(),
            output: args.output.clone(),
            seed: cfg.seed,
            threads,
            phases,
            total: start.elapsed().as_secs_f64(),
            iterations: out.stats.len(),
            final_delta: out.stats.last().map(|s| s.delta),
            non_manifold_edges: out.extraction.non_manifold_edges,
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_file(path, &(json + "\n"))?;
    }
    if out.extraction.non_manifold_edges > 0 {
        eprintln!(
            "warning: {} output edges are shared by more than two triangles",
            out.extraction.non_manifold_edges
        );
    }
    if let Some(last) = out.stats.last() {
        let n = cfg.n as f64;
        let unsecured = last.unsecured as f64 / n;
        let stuck = last.stuck as f64 / n;
        if unsecured > MAX_UNSECURED_FRACTION || stuck > MAX_UNSECURED_FRACTION {
            return Err(CliError::Diagnostic(format!(
                "final iteration: {} unsecured and {} stuck sites of {}",
                last.unsecured, last.stuck, cfg.n
            )));
        }
    }
    Ok(())
}

fn cmd_metrics(args: &MetricsArgs) -> Result<(), CliError> {
    if let Some(t) = args.time {
        if !(t > 0.0) {
            return Err(MetricsError::NonPositiveTime(t).into());
        }
    }
    let input = load_mesh(&args.input)?;
    let output = load_mesh(&args.output_mesh)?;
    let report = quality_report(&input, &output, args.time, args.samples, args.seed)?;
    print!("{report}");
    if let Some(path) = &args.json {
        write_file(path, &(report.to_json() + "\n"))?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let alphas = parse_grid(&args.alpha_grid)?;
    let betas = parse_grid(&args.beta_grid)?;
    let base = args.config.config();
    for &alpha in &alphas {
        for &beta in &betas {
            Config { alpha, beta, ..base.clone() }.validate()?;
        }
    }
    let mesh = load_mesh(&args.input)?;
    let mut csv = String::from("alpha,beta,Q_avg,T\n");
    for &alpha in &alphas {
        for &beta in &betas {
            let cfg = Config { alpha, beta, ..base.clone() };
            let start = Instant::now();
            let out = run_pipeline(&mesh, &cfg, |_, _| {})?;
            let t = start.elapsed().as_secs_f64();
            let (_, q_avg) = quality_stats(&out.extraction.mesh);
            csv.push_str(&format!("{alpha},{beta},{q_avg:.6},{t:.3}\n"));
        }
    }
    match &args.csv {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Remesh(a) => cmd_remesh(a, cli.threads),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", cli.threads);
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
