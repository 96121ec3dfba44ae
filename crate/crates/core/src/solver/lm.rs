//! Weighted nonlinear least squares by damped Gauss-Newton steps.
//!
//! Residuals are range-scaled, `sqrt(pi_i) * c * (y_i - mu(s_i, theta))`,
//! so the objective is in square meters and the gradient in meters.

use alloc::{vec, vec::Vec};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{self, Theta};
use crate::sim::Dataset;

/// Offset applied to every coordinate when an iterate lands on a node.
const ROUNDOFF: f64 = 8.0 * f64::EPSILON;
const SINGULAR_NUDGE: f64 = 1e-9;
const MAX_DAMPING: f64 = 1e20;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LmSettings {
    pub initial_damping: f64,
    pub damping_scale: f64,
    pub max_iterations: usize,
    /// Stop once the objective gradient norm falls to this value (m).
    pub gradient_tol: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        LmSettings { initial_damping: 1e-3, damping_scale: 10.0, max_iterations: 200, gradient_tol: 1e-10 }
    }
}

impl LmSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.initial_damping > 0.0
            && self.damping_scale > 1.0
            && self.max_iterations > 0
            && self.gradient_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSettings("damped least-squares settings out of range".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaFit {
    pub theta: Theta,
    /// Range-scaled weighted objective at `theta` (m^2).
    pub objective: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Weighted range-scaled objective `sum_i pi_i * c^2 * ||y_i - mu(s_i, theta)||^2`.
pub fn weighted_objective(ds: &Dataset, weights: &[f64], theta: &Theta) -> f64 {
    let c = ds.network.c();
    let mut mu = Vec::new();
    let mut total = 0.0;
    for (s, &w) in ds.samples.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let seq = &ds.sequences[s.seq_id];
        mu.resize(seq.num_rows(), 0.0);
        model::predict_into(seq, theta, &ds.network, &mut mu);
        let sq: f64 = s.y.iter().zip(&mu).map(|(y, m)| (c * (y - m)) * (c * (y - m))).sum();
        total += w * sq;
    }
    total
}

struct Linearization {
    jac: DMatrix<f64>,
    residual: DVector<f64>,
}

fn linearize(ds: &Dataset, weights: &[f64], theta: &Theta, rows: usize) -> Result<Linearization> {
    let c = ds.network.c();
    let mut jac = DMatrix::zeros(rows, theta.as_slice().len());
    let mut residual = DVector::zeros(rows);
    let mut mu = Vec::new();
    let mut r0 = 0;
    for (s, &w) in ds.samples.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let seq = &ds.sequences[s.seq_id];
        let m = seq.num_rows();
        let sw = libm::sqrt(w);
        mu.resize(m, 0.0);
        model::predict_into(seq, theta, &ds.network, &mut mu);
        for k in 0..m {
            residual[r0 + k] = sw * c * (s.y[k] - mu[k]);
        }
        // d residual / d theta = -sqrt(pi) * c * d mu / d theta
        model::jacobian_into(seq, theta, &ds.network, &mut jac, r0, -sw * c)?;
        r0 += m;
    }
    Ok(Linearization { jac, residual })
}

/// Linearizes at `theta`, nudging it once off a node if the Jacobian is singular.
fn linearize_or_nudge(
    ds: &Dataset,
    weights: &[f64],
    theta: &mut Theta,
    rows: usize,
) -> Result<Linearization> {
    match linearize(ds, weights, theta, rows) {
        Err(Error::SingularGeometry { .. }) => {
            for v in theta.as_mut_slice() {
                *v += SINGULAR_NUDGE;
            }
            linearize(ds, weights, theta, rows)
        }
        other => other,
    }
}

/// Minimizes the weighted objective over `theta` starting from `theta_init`.
pub fn solve_theta(ds: &Dataset, weights: &[f64], theta_init: &Theta, lm: &LmSettings) -> Result<ThetaFit> {
    lm.validate()?;
    ds.network.check_theta(theta_init)?;
    if weights.len() != ds.len() {
        return Err(Error::LengthMismatch(weights.len(), ds.len()));
    }
    let rows: usize = ds
        .samples
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w != 0.0)
        .map(|(s, _)| ds.sequences[s.seq_id].num_rows())
        .sum();
    let p = theta_init.as_slice().len();

    let mut theta = theta_init.clone();
    let mut lin = linearize_or_nudge(ds, weights, &mut theta, rows)?;
    let mut objective = weighted_objective(ds, weights, &theta);
    let mut damping = lm.initial_damping;
    let mut iterations = 0;
    let mut converged = false;
    let mut grad_norm;

    loop {
        let g = lin.jac.tr_mul(&lin.residual);
        grad_norm = 2.0 * g.norm();
        if grad_norm <= lm.gradient_tol {
            converged = true;
            break;
        }
        if iterations >= lm.max_iterations || damping > MAX_DAMPING {
            break;
        }
        iterations += 1;

        let jtj = lin.jac.tr_mul(&lin.jac);
        let diag_max = (0..p).map(|k| jtj[(k, k)]).fold(0.0, f64::max);
        let floor = if diag_max > 0.0 { 1e-12 * diag_max } else { 1.0 };
        let mut lhs = jtj.clone();
        for k in 0..p {
            lhs[(k, k)] += damping * jtj[(k, k)].max(floor);
        }
        let Some(chol) = lhs.cholesky() else {
            damping *= lm.damping_scale;
            continue;
        };
        let step = chol.solve(&(-&g));
        let mut trial = theta.clone();
        for (v, d) in trial.as_mut_slice().iter_mut().zip(step.iter()) {
            *v += d;
        }
        if trial.as_slice().iter().any(|v| !v.is_finite()) {
            damping *= lm.damping_scale;
            continue;
        }
        let trial_obj = weighted_objective(ds, weights, &trial);
        if trial_obj < objective {
            theta = trial;
            objective = trial_obj;
            let before = theta.clone();
            lin = linearize_or_nudge(ds, weights, &mut theta, rows)?;
            if theta != before {
                objective = weighted_objective(ds, weights, &theta);
            }
            damping = (damping / lm.damping_scale).max(1e-15);
        } else if trial_obj <= objective + ROUNDOFF * objective.abs() {
            // Objective flat to rounding: take the step if it shrinks the gradient.
            match linearize(ds, weights, &trial, rows) {
                Ok(next) if 2.0 * next.jac.tr_mul(&next.residual).norm() < grad_norm => {
                    theta = trial;
                    objective = trial_obj.min(objective);
                    lin = next;
                }
                _ => damping *= lm.damping_scale,
            }
        } else {
            damping *= lm.damping_scale;
        }
    }

    Ok(ThetaFit { theta, objective, gradient_norm: grad_norm, iterations, converged })
}

/// Range-scaled per-sample squared residuals `c^2 * ||y_i - mu(s_i, theta)||^2`.
pub(crate) fn scaled_losses(ds: &Dataset, theta: &Theta) -> Vec<f64> {
    let c = ds.network.c();
    let mut out = vec![0.0; ds.len()];
    let mut mu = Vec::new();
    for (o, s) in out.iter_mut().zip(&ds.samples) {
        let seq = &ds.sequences[s.seq_id];
        mu.resize(seq.num_rows(), 0.0);
        model::predict_into(seq, theta, &ds.network, &mut mu);
        *o = s.y.iter().zip(&mu).map(|(y, m)| (c * (y - m)) * (c * (y - m))).sum();
    }
    out
}
