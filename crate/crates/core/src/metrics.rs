//! Localization error, empirical CDF, RMSE and NLOS detection rates.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::Theta;

/// Euclidean error of unknown node `node` (0 is the self-localizing node).
pub fn localization_error(theta_hat: &Theta, theta_star: &Theta, node: usize) -> Result<f64> {
    if theta_hat.dim() != theta_star.dim() || theta_hat.num_nodes() != theta_star.num_nodes() {
        return Err(Error::LengthMismatch(theta_hat.as_slice().len(), theta_star.as_slice().len()));
    }
    if node >= theta_star.num_nodes() {
        return Err(Error::IndexOutOfRange { index: node, count: theta_star.num_nodes() });
    }
    Ok(crate::model::distance(theta_hat.node(node), theta_star.node(node)))
}

/// Empirical CDF at the distinct sorted sample points, `(value, P[X <= value])`.
pub fn compute_cdf(errors: &[f64]) -> Result<Vec<(f64, f64)>> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = errors.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => out.push((v, frac)),
        }
    }
    Ok(out)
}

/// Value of the empirical CDF's quantile function at probability `p`.
pub fn quantile(errors: &[f64], p: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = errors.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let rank = libm::ceil(p * n as f64) as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

pub fn compute_rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(libm::sqrt(errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectionCounts {
    pub corrupted: usize,
    pub detected: usize,
    pub clean: usize,
    pub false_alarms: usize,
}

impl DetectionCounts {
    /// Fraction of corrupted samples flagged; `None` without corrupted samples.
    pub fn p_d(&self) -> Option<f64> {
        (self.corrupted > 0).then(|| self.detected as f64 / self.corrupted as f64)
    }

    /// Fraction of clean samples flagged; `None` without clean samples.
    pub fn p_fa(&self) -> Option<f64> {
        (self.clean > 0).then(|| self.false_alarms as f64 / self.clean as f64)
    }

    pub fn merge(&self, other: &DetectionCounts) -> DetectionCounts {
        DetectionCounts {
            corrupted: self.corrupted + other.corrupted,
            detected: self.detected + other.detected,
            clean: self.clean + other.clean,
            false_alarms: self.false_alarms + other.false_alarms,
        }
    }
}

/// Flags sample `i` as corrupted iff `weights[i] < threshold`.
pub fn detection_metrics(weights: &[f64], labels: &[bool], threshold: f64) -> Result<DetectionCounts> {
    if weights.len() != labels.len() {
        return Err(Error::LengthMismatch(weights.len(), labels.len()));
    }
    let mut c = DetectionCounts::default();
    for (&w, &corrupted) in weights.iter().zip(labels) {
        let flagged = w < threshold;
        if corrupted {
            c.corrupted += 1;
            c.detected += usize::from(flagged);
        } else {
            c.clean += 1;
            c.false_alarms += usize::from(flagged);
        }
    }
    Ok(c)
}
