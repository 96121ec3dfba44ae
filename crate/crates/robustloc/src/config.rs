//! JSON scenario configuration.
//!
//! Times are given in nanoseconds and positions in meters; [`Config::resolve`]
//! converts to SI and builds the library types. Unknown keys are rejected.

use std::path::Path;

use robustloc_core::model::{Network, Sequence, Technique, Theta, SPEED_OF_LIGHT};
use robustloc_core::sim::{Mixing, NoiseSpec, QStyle};
use robustloc_core::solver::{HuberSettings, InitPolicy, LmSettings, SolverSettings};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::experiments::{default_eps_grid, ExperimentSpec, Method, SpatialGrid};

const NS_PER_S: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub network: NetworkConfig,
    /// One coordinate list per unknown node: the receiver first, then auxiliary nodes.
    pub theta_star: Vec<Vec<f64>>,
    pub technique: Technique,
    pub sequences: Vec<SequenceConfig>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub dim: usize,
    #[serde(default)]
    pub num_aux: usize,
    pub anchors: Vec<Vec<f64>>,
    /// Propagation speed (m/s).
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub delta_ns: f64,
}

fn default_c() -> f64 {
    SPEED_OF_LIGHT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub name: String,
    pub nodes: Vec<usize>,
    /// Overrides the network processing delay for this sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "default_sigma")]
    pub sigma_los_ns: f64,
    #[serde(default = "default_mu")]
    pub mu_nlos_ns: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Defaults to identity for TOA and adjacent correlation otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_style: Option<QStyle>,
    #[serde(default = "default_mixing")]
    pub mixing: Mixing,
}

fn default_sigma() -> f64 {
    3.0
}
fn default_mu() -> f64 {
    75.0
}
fn default_epsilon() -> f64 {
    0.15
}
fn default_mixing() -> Mixing {
    Mixing::Bernoulli
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma_los_ns: default_sigma(),
            mu_nlos_ns: default_mu(),
            epsilon: default_epsilon(),
            q_style: None,
            mixing: default_mixing(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_outer: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temp_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lm: Option<LmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub huber_k: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    Grid {
        #[serde(default = "default_grid")]
        resolution: usize,
        #[serde(default = "default_aux_grid")]
        aux_resolution: usize,
    },
    Fixed {
        theta: Vec<Vec<f64>>,
    },
}

fn default_grid() -> usize {
    robustloc_core::solver::init::DEFAULT_GRID
}
fn default_aux_grid() -> usize {
    robustloc_core::solver::init::DEFAULT_AUX_GRID
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial_grid: Option<SpatialGrid>,
    #[serde(default = "default_threshold")]
    pub detect_threshold: f64,
    /// Defaults to standard and robust, plus huber for TOA.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<Method>>,
    /// Corruption bound for the robust estimator; falls back to `solver.eps_bound`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_bound: Option<f64>,
}

fn default_runs() -> usize {
    100
}
fn default_n() -> usize {
    100
}
fn default_threshold() -> f64 {
    1e-5
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            runs: default_runs(),
            n: default_n(),
            eps_grid: default_eps_grid(),
            spatial_grid: None,
            detect_threshold: default_threshold(),
            methods: None,
            eps_bound: None,
        }
    }
}

/// Library-level view of a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub network: Network,
    pub theta_star: Theta,
    pub sequences: Vec<Sequence>,
    pub sequence_names: Vec<String>,
    pub noise: NoiseSpec,
    pub solver: SolverSettings,
    pub huber: HuberSettings,
    pub experiment: ExperimentSpec,
    pub seed: u64,
}

fn field(name: &str) -> impl Fn(robustloc_core::Error) -> AppError + '_ {
    move |e| AppError::Config(format!("{name}: {e}"))
}

fn check(ok: bool, name: &str, message: impl std::fmt::Display) -> AppResult<()> {
    if ok {
        Ok(())
    } else {
        Err(AppError::Config(format!("{name}: {message}")))
    }
}

fn points_to_theta(name: &str, dim: usize, points: &[Vec<f64>]) -> AppResult<Theta> {
    for (k, p) in points.iter().enumerate() {
        check(p.len() == dim, &format!("{name}[{k}]"), format_args!("expected {dim} coordinates, got {}", p.len()))?;
    }
    Theta::new(dim, points.concat()).map_err(field(name))
}

impl Config {
    /// Parses JSON text; errors carry the offending key path and position.
    pub fn parse(text: &str) -> AppResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            AppError::Config(format!("{path}: {inner}"))
        })
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            AppError::Config(m) => AppError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates every field and converts to SI library types.
    pub fn resolve(&self) -> AppResult<Resolved> {
        let net = &self.network;
        check(net.c > 0.0 && net.c.is_finite(), "network.c", format_args!("must be positive, got {}", net.c))?;
        check(net.delta_ns.is_finite(), "network.delta_ns", "must be finite")?;
        for (k, a) in net.anchors.iter().enumerate() {
            check(
                a.len() == net.dim,
                &format!("network.anchors[{k}]"),
                format_args!("expected {} coordinates, got {}", net.dim, a.len()),
            )?;
        }
        let network =
            Network::new(net.dim, net.num_aux, &net.anchors, net.c, net.delta_ns / NS_PER_S).map_err(field("network"))?;
        check(
            self.theta_star.len() == net.num_aux + 1,
            "theta_star",
            format_args!("expected {} points (receiver and auxiliary nodes), got {}", net.num_aux + 1, self.theta_star.len()),
        )?;
        let theta_star = points_to_theta("theta_star", net.dim, &self.theta_star)?;

        check(!self.sequences.is_empty(), "sequences", "at least one sequence is required")?;
        let mut sequences = Vec::with_capacity(self.sequences.len());
        for (k, s) in self.sequences.iter().enumerate() {
            let name = format!("sequences[{k}] ({})", s.name);
            let mut seq = Sequence::new(self.technique, s.nodes.clone()).map_err(field(&name))?;
            if let Some(d) = s.delta_ns {
                seq = seq.with_delay(d / NS_PER_S).map_err(field(&name))?;
            }
            seq.check_against(&network).map_err(field(&name))?;
            sequences.push(seq);
        }

        let nz = &self.noise;
        check(
            nz.sigma_los_ns > 0.0 && nz.sigma_los_ns.is_finite(),
            "noise.sigma_los_ns",
            format_args!("must be positive, got {}", nz.sigma_los_ns),
        )?;
        check(
            nz.mu_nlos_ns >= 0.0 && nz.mu_nlos_ns.is_finite(),
            "noise.mu_nlos_ns",
            format_args!("must be nonnegative, got {}", nz.mu_nlos_ns),
        )?;
        check((0.0..1.0).contains(&nz.epsilon), "noise.epsilon", format_args!("must lie in [0, 1), got {}", nz.epsilon))?;
        let default_q = if self.technique == Technique::Toa { QStyle::Identity } else { QStyle::AdjacentThird };
        let noise = NoiseSpec {
            sigma_los: nz.sigma_los_ns / NS_PER_S,
            mu_nlos: nz.mu_nlos_ns / NS_PER_S,
            q_style: nz.q_style.unwrap_or(default_q),
            epsilon: nz.epsilon,
            mixing: nz.mixing,
        };

        let (solver, huber) = self.resolve_solver()?;
        let ex = &self.experiment;
        let eps_bound = ex.eps_bound.unwrap_or(solver.eps_bound);
        check((0.0..1.0).contains(&eps_bound), "experiment.eps_bound", format_args!("must lie in [0, 1), got {eps_bound}"))?;
        check(ex.runs >= 1, "experiment.runs", "must be at least 1")?;
        check(ex.n >= 1, "experiment.n", "must be at least 1")?;
        check(
            ex.detect_threshold > 0.0,
            "experiment.detect_threshold",
            format_args!("must be positive, got {}", ex.detect_threshold),
        )?;
        for (k, e) in ex.eps_grid.iter().enumerate() {
            check((0.0..1.0).contains(e), &format!("experiment.eps_grid[{k}]"), format_args!("must lie in [0, 1), got {e}"))?;
        }
        let methods = ex.methods.clone().unwrap_or_else(|| {
            let mut m = vec![Method::Standard, Method::Robust];
            if self.technique == Technique::Toa && net.num_aux == 0 {
                m.push(Method::Huber);
            }
            m
        });
        let experiment = ExperimentSpec {
            network: network.clone(),
            theta_star: theta_star.clone(),
            sequences: sequences.clone(),
            noise,
            n: ex.n,
            runs: ex.runs,
            eps_grid: ex.eps_grid.clone(),
            spatial_grid: ex.spatial_grid.clone(),
            methods,
            eps_bound,
            detect_threshold: ex.detect_threshold,
            base_seed: self.seed,
            solver: solver.clone(),
            huber,
        };
        experiment.validate()?;

        Ok(Resolved {
            network,
            theta_star,
            sequences,
            sequence_names: self.sequences.iter().map(|s| s.name.clone()).collect(),
            noise,
            solver,
            huber,
            experiment,
            seed: self.seed,
        })
    }

    fn resolve_solver(&self) -> AppResult<(SolverSettings, HuberSettings)> {
        let sc = &self.solver;
        let mut s = SolverSettings::default();
        if let Some(v) = sc.eps_bound {
            check((0.0..1.0).contains(&v), "solver.eps_bound", format_args!("must lie in [0, 1), got {v}"))?;
            s.eps_bound = v;
        }
        if let Some(v) = sc.max_outer {
            check(v >= 1, "solver.max_outer", "must be at least 1")?;
            s.max_outer = v;
        }
        if let Some(v) = sc.outer_tol {
            check(v > 0.0, "solver.outer_tol", format_args!("must be positive, got {v}"))?;
            s.outer_tol = v;
        }
        if let Some(v) = sc.temp_tol {
            check(v > 0.0, "solver.temp_tol", format_args!("must be positive, got {v}"))?;
            s.temp_tol = v;
        }
        if let Some(lm) = &sc.lm {
            let d = LmSettings::default();
            s.lm = LmSettings {
                initial_damping: lm.initial_damping.unwrap_or(d.initial_damping),
                damping_scale: lm.damping_scale.unwrap_or(d.damping_scale),
                max_iterations: lm.max_iterations.unwrap_or(d.max_iterations),
                gradient_tol: lm.gradient_tol.unwrap_or(d.gradient_tol),
            };
            s.lm.validate().map_err(field("solver.lm"))?;
        }
        if let Some(init) = &sc.init {
            s.init = match init {
                InitConfig::Grid { resolution, aux_resolution } => {
                    check(*resolution >= 1 && *aux_resolution >= 1, "solver.init", "grid resolution must be positive")?;
                    InitPolicy::Grid { resolution: *resolution, aux_resolution: *aux_resolution }
                }
                InitConfig::Fixed { theta } => {
                    check(
                        theta.len() == self.network.num_aux + 1,
                        "solver.init.theta",
                        format_args!("expected {} points, got {}", self.network.num_aux + 1, theta.len()),
                    )?;
                    InitPolicy::Fixed { theta: points_to_theta("solver.init.theta", self.network.dim, theta)? }
                }
            };
        }
        let mut huber = HuberSettings::default();
        if let Some(k) = sc.huber_k {
            check(k > 0.0, "solver.huber_k", format_args!("must be positive, got {k}"))?;
            huber.k = k;
        }
        Ok((s, huber))
    }
}

/// Bundled scenario files.
pub const BUILTIN: &[(&str, &str)] = &[
    ("toa", include_str!("../configs/toa.json")),
    ("tdoa", include_str!("../configs/tdoa.json")),
    ("tdst", include_str!("../configs/tdst.json")),
    ("tdst_aux", include_str!("../configs/tdst_aux.json")),
];

pub fn builtin(name: &str) -> Option<Config> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, text)| Config::parse(text).expect("bundled config parses"))
}
