//! Command-line front end. [`run`] parses arguments, executes a subcommand
//! and returns the process exit code: 0 on success, 1 on runtime or solver
//! failure, 2 on usage or configuration errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use robustloc_core::metrics::localization_error;
use robustloc_core::model::Theta;
use robustloc_core::solver::{huber_toa, robust_localize, standard_nls, HuberSettings, SolveReport, SolverSettings};
use serde::Serialize;

use crate::config::{self, Config};
use crate::dataset_io::{read_dataset, write_dataset};
use crate::error::{AppError, AppResult};
use crate::experiments::{self, check_failure_budget, Method, MetricsReport};
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "robustloc", version, about = "Robust TOA/TDOA/TDST localization under NLOS contamination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a dataset and write it as CSV plus a JSON sidecar.
    Simulate {
        /// Scenario config path, or `builtin:<name>` (toa, tdoa, tdst, tdst_aux).
        #[arg(long)]
        config: String,
        /// Output CSV path; the sidecar goes next to it with a .json extension.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of samples; defaults to `experiment.n`.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Estimate node positions from a dataset and print a JSON summary.
    Localize {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "robust")]
        method: MethodArg,
        /// Corruption bound for the robust method; defaults to the config value or 0.2.
        #[arg(long)]
        eps_bound: Option<f64>,
        /// Optional config supplying solver settings.
        #[arg(long)]
        config: Option<String>,
        /// Where the robust method writes its weights (default: <dataset>.weights.csv).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Write the summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte-Carlo experiment and write CSV reports plus a manifest.
    Experiment {
        #[arg(long)]
        config: String,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        out: PathBuf,
        /// Overwrite a nonempty output directory.
        #[arg(long)]
        force: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Standard,
    Robust,
    Huber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Cdf,
    RmseSweep,
    Spatial,
    Detect,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Cdf => "cdf",
            Kind::RmseSweep => "rmse-sweep",
            Kind::Spatial => "spatial",
            Kind::Detect => "detect",
        }
    }
}

/// Loads a config from a path or a `builtin:<name>` reference.
pub fn load_config(spec: &str) -> AppResult<Config> {
    match spec.strip_prefix("builtin:") {
        Some(name) => config::builtin(name).ok_or_else(|| {
            let names: Vec<&str> = config::BUILTIN.iter().map(|(n, _)| *n).collect();
            AppError::Usage(format!("unknown builtin scenario '{name}' (available: {})", names.join(", ")))
        }),
        None => Config::load(Path::new(spec)),
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("ROBUSTLOC_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Runs the command line `args` (program name first), writing results to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> AppResult<()> {
    match cmd {
        Command::Simulate { config, out: path, seed, n } => simulate(&config, &path, seed, n, out),
        Command::Localize { dataset, method, eps_bound, config, weights, out: dest } => {
            localize(&dataset, method, eps_bound, config.as_deref(), weights, dest, out)
        }
        Command::Experiment { config, kind, out: dir, force, jobs, seed } => {
            experiment(&config, kind, &dir, force, jobs, seed, out)
        }
    }
}

fn simulate(config: &str, path: &Path, seed: Option<u64>, n: Option<usize>, out: &mut dyn Write) -> AppResult<()> {
    let cfg = load_config(config)?;
    let r = cfg.resolve()?;
    let seed = seed.unwrap_or(r.seed);
    let n = n.unwrap_or(r.experiment.n);
    if n == 0 {
        return Err(AppError::Usage("--n must be at least 1".into()));
    }
    let ds = robustloc_core::sim::generate(&r.network, &r.sequences, &r.theta_star, &r.noise, n, seed)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    }
    write_dataset(&ds, path)?;
    log::info!("wrote {} samples to {}", ds.len(), path.display());
    writeln!(out, "{}", path.display()).map_err(|e| AppError::io("<stdout>", e))
}

#[derive(Debug, Serialize)]
struct Estimate {
    method: &'static str,
    technique: &'static str,
    num_samples: usize,
    eps_bound: Option<f64>,
    /// Estimated unknown-node positions (m).
    theta: Vec<Vec<f64>>,
    /// Per-node error against the sidecar ground truth, when present (m).
    errors: Option<Vec<f64>>,
    report: Option<SolveReport>,
    weights_file: Option<PathBuf>,
}

fn theta_points(theta: &Theta) -> Vec<Vec<f64>> {
    (0..theta.num_nodes()).map(|k| theta.node(k).to_vec()).collect()
}

fn localize(
    dataset: &Path,
    method: MethodArg,
    eps_bound: Option<f64>,
    config: Option<&str>,
    weights: Option<PathBuf>,
    dest: Option<PathBuf>,
    out: &mut dyn Write,
) -> AppResult<()> {
    let (mut settings, huber) = match config {
        Some(c) => {
            let r = load_config(c)?.resolve()?;
            (r.solver, r.huber)
        }
        None => (SolverSettings::default(), HuberSettings::default()),
    };
    if let Some(e) = eps_bound {
        if !(0.0..1.0).contains(&e) {
            return Err(AppError::Usage(format!("--eps-bound must lie in [0, 1), got {e}")));
        }
        settings.eps_bound = e;
    }
    let ds = read_dataset(dataset)?;
    let (theta, report, weights_file, bound) = match method {
        MethodArg::Standard => {
            let (theta, report) = standard_nls(&ds, &settings)?;
            (theta, Some(report), None, None)
        }
        MethodArg::Robust => {
            let fit = robust_localize(&ds, &settings)?;
            let path = weights.unwrap_or_else(|| dataset.with_extension("weights.csv"));
            write_weights(&path, fit.weights.as_slice(), &ds.labels())?;
            (fit.theta, Some(fit.report), Some(path), Some(settings.eps_bound))
        }
        MethodArg::Huber => (huber_toa(&ds, &huber)?, None, None, None),
    };
    let errors = ds.theta_star.as_ref().map(|truth| {
        (0..truth.num_nodes()).map(|k| localization_error(&theta, truth, k).unwrap_or(f64::NAN)).collect()
    });
    let estimate = Estimate {
        method: match method {
            MethodArg::Standard => "standard",
            MethodArg::Robust => "robust",
            MethodArg::Huber => "huber",
        },
        technique: ds.technique().name(),
        num_samples: ds.len(),
        eps_bound: bound,
        theta: theta_points(&theta),
        errors,
        report,
        weights_file,
    };
    let json = serde_json::to_string_pretty(&estimate).expect("estimate serializes");
    match dest {
        Some(p) => fs::write(&p, json + "\n").map_err(|e| AppError::io(&p, e)),
        None => writeln!(out, "{json}").map_err(|e| AppError::io("<stdout>", e)),
    }
}

fn write_weights(path: &Path, weights: &[f64], labels: &[bool]) -> AppResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::format(path, e))?;
    w.write_record(["sample_id", "weight", "corrupted"]).map_err(|e| AppError::format(path, e))?;
    for (i, (p, c)) in weights.iter().zip(labels).enumerate() {
        w.write_record([i.to_string(), format!("{p:e}"), u8::from(*c).to_string()])
            .map_err(|e| AppError::format(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

fn prepare_dir(dir: &Path, force: bool) -> AppResult<()> {
    if dir.exists() {
        let nonempty = fs::read_dir(dir).map_err(|e| AppError::io(dir, e))?.next().is_some();
        if nonempty && !force {
            return Err(AppError::Usage(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

fn experiment(
    config: &str,
    kind: Kind,
    dir: &Path,
    force: bool,
    jobs: Option<usize>,
    seed: Option<u64>,
    out: &mut dyn Write,
) -> AppResult<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let mut spec = cfg.resolve()?.experiment;
    if kind == Kind::Detect && !spec.methods.contains(&Method::Robust) {
        spec.methods.push(Method::Robust);
    }
    if kind == Kind::Spatial && spec.spatial_grid.is_none() {
        return Err(AppError::Config("experiment.spatial_grid is required for --kind spatial".into()));
    }
    if jobs == Some(0) {
        return Err(AppError::Usage("--jobs must be at least 1".into()));
    }
    prepare_dir(dir, force)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| AppError::Usage(format!("thread pool: {e}")))?;

    let (file, reports): (&str, Vec<MetricsReport>) = pool.install(|| -> AppResult<_> {
        Ok(match kind {
            Kind::Cdf => {
                let r = experiments::run_monte_carlo(&spec)?;
                report::write_cdf(&dir.join("cdf.csv"), &r)?;
                ("cdf.csv", vec![r])
            }
            Kind::RmseSweep => {
                let pts = experiments::rmse_vs_epsilon(&spec)?;
                report::write_rmse_vs_eps(&dir.join("rmse_vs_eps.csv"), &pts)?;
                ("rmse_vs_eps.csv", pts.into_iter().map(|p| p.report).collect())
            }
            Kind::Spatial => {
                let pts = experiments::spatial_rmse_grid(&spec)?;
                report::write_spatial(&dir.join("spatial_grid.csv"), &pts)?;
                ("spatial_grid.csv", pts.into_iter().map(|p| p.report).collect())
            }
            Kind::Detect => {
                let pts = experiments::detection_sweep(&spec)?;
                report::write_detection(&dir.join("detection.csv"), &pts)?;
                ("detection.csv", pts.into_iter().map(|p| p.report).collect())
            }
        })
    })?;
    let refs: Vec<&MetricsReport> = reports.iter().collect();
    report::write_manifest(dir, kind.name(), &[file], &refs, &cfg)?;
    writeln!(out, "{}", dir.join(file).display()).map_err(|e| AppError::io("<stdout>", e))?;
    check_failure_budget(refs)
}
