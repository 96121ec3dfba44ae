//! Entropy-constrained sample weights.
//!
//! For fixed losses `l`, the weights minimize `sum(pi_i * l_i)` over the
//! probability simplex subject to `H(pi) >= ln((1 - eps_bound) * n)`. The
//! minimizer is a Gibbs distribution `pi_i(T) ∝ exp(-(l_i - min l) / T)`
//! whose temperature `T` puts the entropy exactly on the bound, unless the
//! bound is already met by the zero-temperature limit (uniform over the
//! minimizers). `H(pi(T))` is nondecreasing in `T`, so `T` is found by
//! bracketing and bisection in `log T`.

use alloc::{vec, vec::Vec};

use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 200;
const MAX_DOUBLINGS: usize = 4096;

/// Probability weights over samples.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Weights {
    pi: Vec<f64>,
}

impl Weights {
    pub fn uniform(n: usize) -> Self {
        Weights { pi: vec![1.0 / n as f64; n] }
    }

    /// Wraps a probability vector, checking nonnegativity and unit mass.
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::EmptyInput);
        }
        if pi.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Numerical("weights must be finite and nonnegative".into()));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > 1e-12 * pi.len().max(1) as f64 {
            return Err(Error::Numerical(alloc::format!("weights sum to {total}, expected 1")));
        }
        Ok(Weights { pi })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.pi)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.pi
    }
}

/// `-sum(p ln p)` with `0 ln 0 = 0`.
pub fn entropy(pi: &[f64]) -> f64 {
    -pi.iter().filter(|&&p| p > 0.0).map(|&p| p * libm::log(p)).sum::<f64>()
}

/// Weights together with the Gibbs temperature that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSolution {
    pub weights: Weights,
    /// `None` when the weights are uniform over all samples or over the minimizers.
    pub temperature: Option<f64>,
    pub target_entropy: f64,
}

pub fn solve_weights(losses: &[f64], eps_bound: f64, temp_tol: f64) -> Result<Weights> {
    solve_weights_detailed(losses, eps_bound, temp_tol).map(|s| s.weights)
}

pub fn solve_weights_detailed(losses: &[f64], eps_bound: f64, temp_tol: f64) -> Result<WeightSolution> {
    let n = losses.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if !(0.0..1.0).contains(&eps_bound) {
        return Err(Error::InvalidSettings(alloc::format!(
            "eps_bound must lie in [0, 1), got {eps_bound}"
        )));
    }
    if !(temp_tol > 0.0) {
        return Err(Error::InvalidSettings(alloc::format!("temp_tol must be positive, got {temp_tol}")));
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numerical("non-finite loss".into()));
    }
    let support = (1.0 - eps_bound) * n as f64;
    // A support of one sample lets the weights collapse onto a single point.
    if support < 1.0 || (support <= 1.0 && n > 1) {
        return Err(Error::InfeasibleBound(support));
    }
    let target = libm::log(support);
    if eps_bound == 0.0 {
        return Ok(WeightSolution { weights: Weights::uniform(n), temperature: None, target_entropy: target });
    }

    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = losses.iter().map(|l| l - min).collect();
    let minimizers = shifted.iter().filter(|&&d| d == 0.0).count();
    if target <= libm::log(minimizers as f64) {
        let p = 1.0 / minimizers as f64;
        let pi = shifted.iter().map(|&d| if d == 0.0 { p } else { 0.0 }).collect();
        return Ok(WeightSolution { weights: Weights { pi }, temperature: None, target_entropy: target });
    }

    let range = shifted.iter().copied().fold(0.0, f64::max);
    let mut lo = 1e-12 * range;
    let mut hi = range;
    let mut h_hi = gibbs_entropy(&shifted, hi);
    let mut doublings = 0;
    while h_hi < target {
        lo = hi;
        hi *= 2.0;
        h_hi = gibbs_entropy(&shifted, hi);
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::Numerical("failed to bracket the temperature".into()));
        }
    }
    if gibbs_entropy(&shifted, lo) >= target {
        hi = lo;
    } else {
        for _ in 0..MAX_BISECTIONS {
            if h_hi - target <= temp_tol {
                break;
            }
            let mid = libm::sqrt(lo * hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            let h_mid = gibbs_entropy(&shifted, mid);
            if h_mid >= target {
                hi = mid;
                h_hi = h_mid;
            } else {
                lo = mid;
            }
        }
    }
    Ok(WeightSolution {
        weights: Weights { pi: gibbs(&shifted, hi) },
        temperature: Some(hi),
        target_entropy: target,
    })
}

/// Gibbs weights for nonnegative shifted losses with a zero minimum.
fn gibbs(shifted: &[f64], temperature: f64) -> Vec<f64> {
    let mut pi: Vec<f64> = shifted.iter().map(|d| libm::exp(-d / temperature)).collect();
    let z: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= z;
    }
    pi
}

fn gibbs_entropy(shifted: &[f64], temperature: f64) -> f64 {
    let z: f64 = shifted.iter().map(|d| libm::exp(-d / temperature)).sum();
    let mean: f64 = shifted.iter().map(|d| d * libm::exp(-d / temperature)).sum::<f64>() / z;
    libm::log(z) + mean / temperature
}
