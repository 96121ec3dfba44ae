//! Estimators: standard nonlinear least squares, the entropy-constrained
//! robust estimator and the TOA Huber baseline.
//!
//! The robust estimator alternates two exact block minimizations of
//! `sum_i pi_i * ||y_i - mu(s_i, theta)||^2` subject to
//! `H(pi) >= ln((1 - eps_bound) * n)`: a weighted least-squares fit of
//! `theta` for fixed weights, then the weight update of [`weights`] for
//! fixed `theta`. Objectives reported here are range-scaled, i.e. multiplied
//! by `c^2`, and so carry units of square meters.

pub mod huber;
pub mod init;
pub mod lm;
pub mod weights;

use alloc::{vec, vec::Vec};

use crate::error::{Error, Result};
use crate::model::{self, Theta};
use crate::sim::Dataset;

pub use huber::{huber_toa, HuberSettings};
pub use init::{initialize_theta, InitPolicy};
pub use lm::{solve_theta, weighted_objective, LmSettings, ThetaFit};
pub use weights::{entropy, solve_weights, solve_weights_detailed, WeightSolution, Weights};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverSettings {
    /// Upper bound on the corrupted fraction, in `[0, 1)`.
    pub eps_bound: f64,
    pub max_outer: usize,
    /// Relative objective decrease below which the alternation stops.
    pub outer_tol: f64,
    pub lm: LmSettings,
    /// Allowed entropy excess over the bound in the weight step.
    pub temp_tol: f64,
    pub init: InitPolicy,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            eps_bound: 0.2,
            max_outer: 100,
            outer_tol: 1e-8,
            lm: LmSettings::default(),
            temp_tol: 1e-12,
            init: InitPolicy::default(),
        }
    }
}

impl SolverSettings {
    pub fn with_eps_bound(mut self, eps_bound: f64) -> Self {
        self.eps_bound = eps_bound;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eps_bound) {
            return Err(Error::InvalidSettings(alloc::format!(
                "eps_bound must lie in [0, 1), got {}",
                self.eps_bound
            )));
        }
        if self.max_outer == 0 || !(self.outer_tol > 0.0) || !(self.temp_tol > 0.0) {
            return Err(Error::InvalidSettings("iteration caps and tolerances must be positive".into()));
        }
        self.lm.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveReport {
    /// Objective at the start and after every half-step (m^2).
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub final_entropy: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustFit {
    pub theta: Theta,
    pub weights: Weights,
    pub report: SolveReport,
}

/// Unweighted per-sample squared residuals `||y_i - mu(s_i, theta)||^2` (s^2).
pub fn per_sample_loss(ds: &Dataset, theta: &Theta) -> Result<Vec<f64>> {
    ds.network.check_theta(theta)?;
    let mut out = Vec::with_capacity(ds.len());
    for s in &ds.samples {
        let mu = model::predict(&ds.sequences[s.seq_id], theta, &ds.network)?;
        out.push(s.y.iter().zip(&mu).map(|(y, m)| (y - m) * (y - m)).sum());
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| if *x == 0.0 { 0.0 } else { x * y }).sum()
}

/// Alternating minimization over `theta` and the sample weights.
pub fn robust_localize(ds: &Dataset, settings: &SolverSettings) -> Result<RobustFit> {
    settings.validate()?;
    ds.validate()?;
    let n = ds.len();
    let mut pi = Weights::uniform(n);
    // Fails early on an infeasible bound.
    solve_weights(&vec![0.0; n], settings.eps_bound, settings.temp_tol)?;
    let mut theta = initialize_theta(ds, &settings.init)?;
    let mut trace = vec![weighted_objective(ds, pi.as_slice(), &theta)];
    let mut inner = 0;
    let mut converged = false;
    let mut outer = 0;

    while outer < settings.max_outer {
        outer += 1;
        let start = *trace.last().unwrap_or(&0.0);
        let fit = solve_theta(ds, pi.as_slice(), &theta, &settings.lm)?;
        inner += fit.iterations;
        theta = fit.theta;
        trace.push(fit.objective);

        let losses = lm::scaled_losses(ds, &theta);
        let next = solve_weights(&losses, settings.eps_bound, settings.temp_tol)?;
        let mut obj = dot(next.as_slice(), &losses);
        let current = dot(pi.as_slice(), &losses);
        // The bisection leaves the weights within tolerance of optimal; never step uphill.
        let unchanged = next == pi || obj >= current;
        if unchanged {
            obj = obj.min(current);
        } else {
            pi = next;
        }
        trace.push(obj);

        if unchanged || start - obj <= settings.outer_tol * start.abs() {
            converged = true;
            break;
        }
    }

    let report = SolveReport {
        objective_trace: trace,
        converged,
        outer_iterations: outer,
        inner_iterations: inner,
        final_entropy: pi.entropy(),
        weights: pi.as_slice().to_vec(),
    };
    Ok(RobustFit { theta, weights: pi, report })
}

/// Nonlinear least squares with uniform weights.
pub fn standard_nls(ds: &Dataset, settings: &SolverSettings) -> Result<(Theta, SolveReport)> {
    settings.validate()?;
    ds.validate()?;
    let pi = Weights::uniform(ds.len());
    let theta0 = initialize_theta(ds, &settings.init)?;
    let start = weighted_objective(ds, pi.as_slice(), &theta0);
    let fit = solve_theta(ds, pi.as_slice(), &theta0, &settings.lm)?;
    let report = SolveReport {
        objective_trace: vec![start, fit.objective],
        converged: fit.converged,
        outer_iterations: 1,
        inner_iterations: fit.iterations,
        final_entropy: pi.entropy(),
        weights: pi.into_vec(),
    };
    Ok((fit.theta, report))
}
