//! Huber M-estimator for TOA on the linearized range model.
//!
//! Each TOA value gives a range `r = c (y - delta) / 2` to anchor `x_a`, and
//! `r^2 - ||x_a||^2 = -2 x_a^T x_0 + alpha` is linear in `(x_0, alpha)`.
//! `alpha` is estimated freely and discarded.

use alloc::{format, vec, vec::Vec};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{Technique, Theta};
use crate::sim::Dataset;

/// Consistency factor turning a median absolute deviation into a Gaussian scale.
pub const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HuberSettings {
    /// Threshold in units of the robust residual scale.
    pub k: f64,
    pub max_iterations: usize,
    /// Relative parameter change that ends the reweighting.
    pub tol: f64,
}

impl Default for HuberSettings {
    fn default() -> Self {
        HuberSettings { k: 1.345, max_iterations: 100, tol: 1e-10 }
    }
}

/// Linear design `[-2 x_a^T, 1]` and targets `r^2 - ||x_a||^2`, one row per TOA value.
pub fn toa_linear_system(ds: &Dataset) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if ds.technique() != Technique::Toa {
        return Err(Error::UnsupportedTechnique(format!(
            "the Huber estimator needs TOA data, got {}",
            ds.technique().name()
        )));
    }
    let net = &ds.network;
    if net.num_aux() > 0 {
        return Err(Error::UnsupportedTechnique(
            "the Huber estimator cannot localize auxiliary nodes".into(),
        ));
    }
    let dim = net.dim();
    let c = net.c();
    let mut design = Vec::new();
    let mut target = Vec::new();
    for s in &ds.samples {
        let seq = &ds.sequences[s.seq_id];
        let delay = seq.delay(net);
        for (&node, &y) in seq.nodes().iter().zip(&s.y) {
            let xa = net.anchor(node - net.num_aux() - 1);
            let r = c * (y - delay) / 2.0;
            design.extend(xa.iter().map(|v| -2.0 * v));
            design.push(1.0);
            target.push(r * r - xa.iter().map(|v| v * v).sum::<f64>());
        }
    }
    let rows = target.len();
    if rows < dim + 2 {
        return Err(Error::Underdetermined { rows, unknowns: dim + 1 });
    }
    Ok((DMatrix::from_row_slice(rows, dim + 1, &design), DVector::from_vec(target)))
}

fn weighted_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, w: &[f64]) -> Result<DVector<f64>> {
    let mut aw = a.clone();
    let mut bw = b.clone();
    for (i, &wi) in w.iter().enumerate() {
        let s = libm::sqrt(wi);
        aw.row_mut(i).scale_mut(s);
        bw[i] *= s;
    }
    // Householder QR: R x = Q^T b.
    let qr = aw.qr();
    let r = qr.r();
    let diag_max = r.diagonal().amax();
    if !(diag_max > 0.0) || r.diagonal().iter().any(|d| d.abs() <= 1e-12 * diag_max) {
        return Err(Error::Numerical("rank-deficient Huber design".into()));
    }
    let mut rhs = bw;
    qr.q_tr_mul(&mut rhs);
    let p = r.ncols();
    r.solve_upper_triangular(&rhs.rows(0, p).into_owned())
        .ok_or_else(|| Error::Numerical("least-squares solve failed".into()))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Robust residual scale `1.4826 * median(|e - median(e)|)`.
pub fn mad_scale(residuals: &[f64]) -> f64 {
    let mut e = residuals.to_vec();
    let med = median(&mut e);
    let mut dev: Vec<f64> = residuals.iter().map(|v| (v - med).abs()).collect();
    MAD_SCALE * median(&mut dev)
}

/// Iteratively reweighted least squares with Huber weights; returns `(x_0, alpha)`.
pub fn huber_irls(a: &DMatrix<f64>, b: &DVector<f64>, settings: &HuberSettings) -> Result<DVector<f64>> {
    let mut w = vec![1.0; b.len()];
    let mut beta = weighted_lstsq(a, b, &w)?;
    for _ in 0..settings.max_iterations {
        let resid = b - a * &beta;
        let scale = mad_scale(resid.as_slice());
        if !(scale > 0.0) {
            break;
        }
        let threshold = settings.k * scale;
        for (wi, e) in w.iter_mut().zip(resid.iter()) {
            *wi = if e.abs() <= threshold { 1.0 } else { threshold / e.abs() };
        }
        let next = weighted_lstsq(a, b, &w)?;
        let change = (&next - &beta).norm();
        beta = next;
        if change <= settings.tol * (1.0 + beta.norm()) {
            break;
        }
    }
    Ok(beta)
}

pub fn huber_toa(ds: &Dataset, settings: &HuberSettings) -> Result<Theta> {
    let (a, b) = toa_linear_system(ds)?;
    let beta = huber_irls(&a, &b, settings)?;
    let dim = ds.network.dim();
    Theta::new(dim, beta.as_slice()[..dim].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_mad() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((mad_scale(&[1.0, -1.0, 1.0, -1.0]) - MAD_SCALE).abs() < 1e-15);
        assert_eq!(mad_scale(&[0.0; 5]), 0.0);
    }

    #[test]
    fn irls_downweights_gross_outlier() {
        // y = 2x + 1 with one wild point.
        let xs: Vec<f64> = (0..20).map(f64::from).collect();
        let a = DMatrix::from_fn(20, 2, |i, j| if j == 0 { xs[i] } else { 1.0 });
        let mut b = DVector::from_fn(20, |i, _| 2.0 * xs[i] + 1.0 + if i % 2 == 0 { 0.01 } else { -0.01 });
        b[7] += 100.0;
        let beta = huber_irls(&a, &b, &HuberSettings::default()).unwrap();
        assert!((beta[0] - 2.0).abs() < 0.01, "{beta}");
        assert!((beta[1] - 1.0).abs() < 0.1, "{beta}");
    }
}
