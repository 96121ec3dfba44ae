//! Monte-Carlo harness: error distributions, RMSE sweeps, spatial maps and
//! NLOS detection from the learned weights.

use rayon::prelude::*;
use robustloc_core::metrics::{self, DetectionCounts};
use robustloc_core::model::{Network, Sequence, Technique, Theta};
use robustloc_core::scenario::Scenario;
use robustloc_core::sim::{generate, Dataset, Mixing, NoiseSpec};
use robustloc_core::solver::{huber_toa, robust_localize, standard_nls, HuberSettings, SolverSettings};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// Largest tolerated fraction of failed solver runs.
pub const FAILURE_BUDGET: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Standard,
    Robust,
    Huber,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::Robust => "robust",
            Method::Huber => "huber",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "standard" => Ok(Method::Standard),
            "robust" => Ok(Method::Robust),
            "huber" => Ok(Method::Huber),
            other => Err(format!("unknown method '{other}' (expected standard, robust or huber)")),
        }
    }
}

/// Rectangular grid of receiver positions, endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialGrid {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl SpatialGrid {
    fn axis(range: [f64; 2], count: usize) -> Vec<f64> {
        if count == 1 {
            return vec![0.5 * (range[0] + range[1])];
        }
        (0..count).map(|i| range[0] + (range[1] - range[0]) * i as f64 / (count - 1) as f64).collect()
    }

    /// Grid points in row-major order, `x` varying fastest.
    pub fn points(&self) -> Vec<[f64; 2]> {
        let xs = Self::axis(self.x, self.nx);
        let ys = Self::axis(self.y, self.ny);
        ys.iter().flat_map(|&y| xs.iter().map(move |&x| [x, y])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub network: Network,
    pub theta_star: Theta,
    pub sequences: Vec<Sequence>,
    pub noise: NoiseSpec,
    /// Samples per dataset.
    pub n: usize,
    pub runs: usize,
    pub eps_grid: Vec<f64>,
    pub spatial_grid: Option<SpatialGrid>,
    pub methods: Vec<Method>,
    /// Corruption bound handed to the robust estimator.
    pub eps_bound: f64,
    pub detect_threshold: f64,
    pub base_seed: u64,
    pub solver: SolverSettings,
    pub huber: HuberSettings,
}

/// Corruption fractions 0, 0.05, ..., 0.5.
pub fn default_eps_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 * 0.05).collect()
}

impl ExperimentSpec {
    /// Default settings on a bundled scenario: 100 samples and 100 runs,
    /// 3 ns LOS noise, 75 ns mean NLOS excess, 15% corruption, bound 20%.
    pub fn from_scenario(scenario: Scenario) -> Self {
        let mut methods = vec![Method::Standard, Method::Robust];
        if scenario.technique() == Technique::Toa && scenario.network.num_aux() == 0 {
            methods.push(Method::Huber);
        }
        ExperimentSpec {
            network: scenario.network,
            theta_star: scenario.theta_star,
            sequences: scenario.sequences,
            noise: NoiseSpec {
                sigma_los: 3e-9,
                mu_nlos: 75e-9,
                q_style: scenario.q_style,
                epsilon: 0.15,
                mixing: Mixing::Bernoulli,
            },
            n: 100,
            runs: 100,
            eps_grid: default_eps_grid(),
            spatial_grid: None,
            methods,
            eps_bound: 0.2,
            detect_threshold: 1e-5,
            base_seed: 0,
            solver: SolverSettings::default(),
            huber: HuberSettings::default(),
        }
    }

    pub fn technique(&self) -> Technique {
        self.sequences[0].technique()
    }

    pub fn validate(&self) -> AppResult<()> {
        let bad = |m: String| Err(AppError::Config(m));
        if self.runs == 0 {
            return bad("experiment.runs must be at least 1".into());
        }
        if self.n == 0 {
            return bad("experiment.n must be at least 1".into());
        }
        if !(self.detect_threshold > 0.0) {
            return bad(format!("experiment.detect_threshold must be positive, got {}", self.detect_threshold));
        }
        if self.methods.is_empty() {
            return bad("experiment.methods must not be empty".into());
        }
        if self.sequences.is_empty() {
            return bad("sequences must not be empty".into());
        }
        if self.methods.contains(&Method::Huber)
            && (self.technique() != Technique::Toa || self.network.num_aux() != 0)
        {
            return bad("experiment.methods: huber needs TOA data without auxiliary nodes".into());
        }
        if let Some(e) = self.eps_grid.iter().find(|e| !(0.0..1.0).contains(*e)) {
            return bad(format!("experiment.eps_grid: {e} is outside [0, 1)"));
        }
        if let Some(g) = &self.spatial_grid {
            if g.nx == 0 || g.ny == 0 {
                return bad("experiment.spatial_grid needs at least one point per axis".into());
            }
        }
        self.noise.validate().map_err(|e| AppError::Config(format!("noise: {e}")))?;
        self.solver
            .clone()
            .with_eps_bound(self.eps_bound)
            .validate()
            .map_err(|e| AppError::Config(format!("solver: {e}")))?;
        self.network.check_theta(&self.theta_star).map_err(|e| AppError::Config(format!("theta_star: {e}")))?;
        for seq in &self.sequences {
            seq.check_against(&self.network).map_err(|e| AppError::Config(format!("sequences: {e}")))?;
        }
        Ok(())
    }

    fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut spec = self.clone();
        spec.noise.epsilon = epsilon;
        spec
    }
}

/// Result of one estimator on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum MethodOutcome {
    /// Localization error of every unknown node (m).
    Ok { errors: Vec<f64> },
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    /// One entry per method, in the order of [`MetricsReport::methods`].
    pub outcomes: Vec<MethodOutcome>,
    /// Weight-threshold detection counts of the robust estimator.
    pub detection: Option<DetectionCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub methods: Vec<Method>,
    pub num_unknowns: usize,
    pub runs: Vec<RunRecord>,
}

impl MetricsReport {
    fn slot(&self, method: Method) -> Option<usize> {
        self.methods.iter().position(|&m| m == method)
    }

    /// Errors of `node` over the successful runs of `method`, in run order.
    pub fn errors(&self, method: Method, node: usize) -> Vec<f64> {
        let Some(k) = self.slot(method) else { return Vec::new() };
        self.runs
            .iter()
            .filter_map(|r| match &r.outcomes[k] {
                MethodOutcome::Ok { errors } => errors.get(node).copied(),
                MethodOutcome::Failed { .. } => None,
            })
            .collect()
    }

    pub fn rmse(&self, method: Method, node: usize) -> Option<f64> {
        metrics::compute_rmse(&self.errors(method, node)).ok()
    }

    pub fn cdf(&self, method: Method, node: usize) -> Vec<(f64, f64)> {
        metrics::compute_cdf(&self.errors(method, node)).unwrap_or_default()
    }

    pub fn failures(&self, method: Method) -> usize {
        let Some(k) = self.slot(method) else { return 0 };
        self.runs.iter().filter(|r| matches!(r.outcomes[k], MethodOutcome::Failed { .. })).count()
    }

    pub fn total_failures(&self) -> usize {
        self.methods.iter().map(|&m| self.failures(m)).sum()
    }

    pub fn attempts(&self) -> usize {
        self.runs.len() * self.methods.len()
    }

    /// Detection counts pooled over all runs.
    pub fn detection(&self) -> Option<DetectionCounts> {
        self.runs.iter().filter_map(|r| r.detection).reduce(|a, b| a.merge(&b))
    }
}

/// Fails when more than [`FAILURE_BUDGET`] of the solver runs failed.
pub fn check_failure_budget<'a>(reports: impl IntoIterator<Item = &'a MetricsReport>) -> AppResult<()> {
    let (failed, attempted) =
        reports.into_iter().fold((0, 0), |(f, a), r| (f + r.total_failures(), a + r.attempts()));
    if failed as f64 > FAILURE_BUDGET * attempted as f64 {
        return Err(AppError::FailureBudget { failed, attempted });
    }
    Ok(())
}

fn node_errors(theta_hat: &Theta, theta_star: &Theta) -> Vec<f64> {
    (0..theta_star.num_nodes())
        .map(|k| metrics::localization_error(theta_hat, theta_star, k).unwrap_or(f64::NAN))
        .collect()
}

fn run_once(spec: &ExperimentSpec, run: usize) -> AppResult<RunRecord> {
    let seed = spec.base_seed.wrapping_add(run as u64);
    let ds: Dataset = generate(&spec.network, &spec.sequences, &spec.theta_star, &spec.noise, spec.n, seed)?;
    let settings = spec.solver.clone().with_eps_bound(spec.eps_bound);
    let mut detection = None;
    let outcomes = spec
        .methods
        .iter()
        .map(|&method| {
            let estimate = match method {
                Method::Standard => standard_nls(&ds, &settings).map(|(theta, _)| theta),
                Method::Robust => robust_localize(&ds, &settings).and_then(|fit| {
                    detection = Some(metrics::detection_metrics(
                        fit.weights.as_slice(),
                        &ds.labels(),
                        spec.detect_threshold,
                    )?);
                    Ok(fit.theta)
                }),
                Method::Huber => huber_toa(&ds, &spec.huber),
            };
            match estimate {
                Ok(theta) => MethodOutcome::Ok { errors: node_errors(&theta, &spec.theta_star) },
                Err(e) => {
                    log::warn!("run {run} ({}): {e}", method.name());
                    MethodOutcome::Failed { message: e.to_string() }
                }
            }
        })
        .collect();
    Ok(RunRecord { run, seed, outcomes, detection })
}

/// Runs every method on `spec.runs` datasets seeded `base_seed + k`.
///
/// Runs execute on the current rayon pool; the report is ordered by run
/// index, so it does not depend on the number of workers. Solver failures
/// are recorded per run; simulation errors abort.
pub fn run_monte_carlo(spec: &ExperimentSpec) -> AppResult<MetricsReport> {
    spec.validate()?;
    let runs = (0..spec.runs).into_par_iter().map(|k| run_once(spec, k)).collect::<AppResult<Vec<_>>>()?;
    Ok(MetricsReport { methods: spec.methods.clone(), num_unknowns: spec.theta_star.num_nodes(), runs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPoint {
    pub epsilon: f64,
    pub report: MetricsReport,
}

/// One Monte-Carlo batch per corruption fraction in `eps_grid`.
pub fn rmse_vs_epsilon(spec: &ExperimentSpec) -> AppResult<Vec<EpsilonPoint>> {
    if spec.eps_grid.is_empty() {
        return Err(AppError::Config("experiment.eps_grid must not be empty".into()));
    }
    spec.eps_grid
        .iter()
        .map(|&epsilon| Ok(EpsilonPoint { epsilon, report: run_monte_carlo(&spec.with_epsilon(epsilon))? }))
        .collect()
}

/// Detection sweep over `eps_grid`; always runs the robust estimator.
pub fn detection_sweep(spec: &ExperimentSpec) -> AppResult<Vec<EpsilonPoint>> {
    let mut spec = spec.clone();
    if !spec.methods.contains(&Method::Robust) {
        spec.methods.push(Method::Robust);
    }
    rmse_vs_epsilon(&spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub report: MetricsReport,
}

/// Moves the receiver to every grid point and reruns the Monte-Carlo batch.
pub fn spatial_rmse_grid(spec: &ExperimentSpec) -> AppResult<Vec<GridPoint>> {
    let grid = spec
        .spatial_grid
        .as_ref()
        .ok_or_else(|| AppError::Config("experiment.spatial_grid is required for spatial maps".into()))?;
    if spec.network.dim() != 2 {
        return Err(AppError::Config("spatial maps need a planar network".into()));
    }
    grid.points()
        .into_iter()
        .map(|[x, y]| {
            let mut moved = spec.clone();
            moved.theta_star.node_mut(0).copy_from_slice(&[x, y]);
            Ok(GridPoint { x, y, report: run_monte_carlo(&moved)? })
        })
        .collect()
}
