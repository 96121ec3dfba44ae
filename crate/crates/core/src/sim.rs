//! Synthetic data from the LOS/NLOS mixture.
//!
//! LOS samples are Gaussian around the ideal interarrival times with
//! covariance `sigma_los^2 * Q`. NLOS samples add an i.i.d. nonnegative
//! exponential excess delay with mean `mu_nlos` to every component.

use alloc::{format, vec, vec::Vec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{self, Network, Sequence, Theta};

/// Name of the generator behind [`generate`]; recorded in dataset metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum QStyle {
    /// Uncorrelated measurement errors.
    Identity,
    /// Unit diagonal, 1/3 on the first off-diagonals.
    AdjacentThird,
    /// Unit diagonal, 1/3 on every off-diagonal.
    ConstantThird,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Mixing {
    /// Each sample is corrupted independently with probability epsilon.
    Bernoulli,
    /// Exactly `round(epsilon * n)` uniformly chosen samples are corrupted.
    FixedCount,
}

/// Noise parameters in SI units (seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseSpec {
    pub sigma_los: f64,
    pub mu_nlos: f64,
    pub q_style: QStyle,
    pub epsilon: f64,
    pub mixing: Mixing,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_los > 0.0) || !self.sigma_los.is_finite() {
            return Err(Error::InvalidNoise(format!("sigma_los must be positive, got {}", self.sigma_los)));
        }
        if !(self.mu_nlos >= 0.0) || !self.mu_nlos.is_finite() {
            return Err(Error::InvalidNoise(format!("mu_nlos must be nonnegative, got {}", self.mu_nlos)));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidNoise(format!("epsilon must lie in [0, 1), got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub seq_id: usize,
    /// Measured interarrival times (seconds).
    pub y: Vec<f64>,
    /// Ground truth: drawn from the NLOS component.
    pub corrupted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub network: Network,
    pub sequences: Vec<Sequence>,
    pub samples: Vec<Sample>,
    pub seed: Option<u64>,
    pub noise: Option<NoiseSpec>,
    pub theta_star: Option<Theta>,
}

impl Dataset {
    /// Assembles a dataset from measured samples, checking its invariants.
    pub fn new(network: Network, sequences: Vec<Sequence>, samples: Vec<Sample>) -> Result<Self> {
        let ds = Dataset { network, sequences, samples, seed: None, noise: None, theta_star: None };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::InvalidDataset(format!("dataset has no samples")));
        }
        if self.sequences.is_empty() {
            return Err(Error::InvalidDataset(format!("dataset has no sequences")));
        }
        let technique = self.sequences[0].technique();
        for seq in &self.sequences {
            seq.check_against(&self.network)?;
            if seq.technique() != technique {
                return Err(Error::InvalidDataset(format!("sequences mix techniques")));
            }
        }
        for (i, s) in self.samples.iter().enumerate() {
            let seq = self.sequences.get(s.seq_id).ok_or_else(|| {
                Error::InvalidDataset(format!("sample {i} refers to missing sequence {}", s.seq_id))
            })?;
            if s.y.len() != seq.num_rows() {
                return Err(Error::InvalidDataset(format!(
                    "sample {i} has {} values, sequence {} yields {}",
                    s.y.len(),
                    s.seq_id,
                    seq.num_rows()
                )));
            }
            if s.y.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("sample {i} has non-finite values")));
            }
        }
        if let Some(theta) = &self.theta_star {
            self.network.check_theta(theta)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn technique(&self) -> model::Technique {
        self.sequences[0].technique()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.corrupted).collect()
    }
}

/// Covariance structure of an `m`-component measurement.
pub fn build_q(m: usize, style: QStyle) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            1.0
        } else {
            match style {
                QStyle::Identity => 0.0,
                QStyle::AdjacentThird if i.abs_diff(j) == 1 => 1.0 / 3.0,
                QStyle::AdjacentThird => 0.0,
                QStyle::ConstantThird => 1.0 / 3.0,
            }
        }
    })
}

/// Lower Cholesky factor of `Q`.
fn q_factor(m: usize, style: QStyle) -> Result<DMatrix<f64>> {
    build_q(m, style).cholesky().map(|c| c.l()).ok_or(Error::InvalidQ)
}

fn ideal(seq: &Sequence, net: &Network, theta_star: &Theta) -> Result<Vec<f64>> {
    model::predict(seq, theta_star, net)
}

fn add_los_noise<R: Rng + ?Sized>(y: &mut [f64], sigma: f64, l: &DMatrix<f64>, rng: &mut R) {
    let z = DVector::from_fn(y.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let e = l * z;
    for (v, ei) in y.iter_mut().zip(e.iter()) {
        *v += sigma * ei;
    }
}

fn add_nlos_noise<R: Rng + ?Sized>(y: &mut [f64], mean: f64, rng: &mut R) {
    for v in y.iter_mut() {
        *v += mean * rng.sample::<f64, _>(Exp1);
    }
}

/// One LOS draw: `mu(s, theta*) + sigma_los * L z`.
pub fn sample_los<R: Rng + ?Sized>(
    seq: &Sequence,
    net: &Network,
    theta_star: &Theta,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut y = ideal(seq, net, theta_star)?;
    let l = q_factor(y.len(), noise.q_style)?;
    add_los_noise(&mut y, noise.sigma_los, &l, rng);
    Ok(y)
}

/// One NLOS draw: `mu(s, theta*) + w` with `w_i ~ Exp(mean mu_nlos)`.
pub fn sample_nlos<R: Rng + ?Sized>(
    seq: &Sequence,
    net: &Network,
    theta_star: &Theta,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut y = ideal(seq, net, theta_star)?;
    add_nlos_noise(&mut y, noise.mu_nlos, rng);
    Ok(y)
}

/// Draws `n` i.i.d. samples from the contaminated mixture.
///
/// Each sample picks its sequence uniformly from `sequences`. The stream is
/// a [`RNG_ALGORITHM`] generator seeded with `seed`, so equal inputs give
/// identical datasets.
pub fn generate(
    net: &Network,
    sequences: &[Sequence],
    theta_star: &Theta,
    noise: &NoiseSpec,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    noise.validate()?;
    if n == 0 {
        return Err(Error::InvalidDataset(format!("sample count must be at least 1")));
    }
    if sequences.is_empty() {
        return Err(Error::InvalidDataset(format!("no sequences to draw from")));
    }
    net.check_theta(theta_star)?;
    let means = sequences
        .iter()
        .map(|s| ideal(s, net, theta_star))
        .collect::<Result<Vec<_>>>()?;
    let factors = sequences
        .iter()
        .map(|s| q_factor(s.num_rows(), noise.q_style))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fixed: Option<Vec<bool>> = match noise.mixing {
        Mixing::Bernoulli => None,
        Mixing::FixedCount => {
            let k = libm::round(noise.epsilon * n as f64) as usize;
            let mut flags = vec![false; n];
            for i in rand::seq::index::sample(&mut rng, n, k.min(n)) {
                flags[i] = true;
            }
            Some(flags)
        }
    };

    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let seq_id = rng.random_range(0..sequences.len());
        let corrupted = match &fixed {
            Some(flags) => flags[i],
            None => rng.random::<f64>() < noise.epsilon,
        };
        let mut y = means[seq_id].clone();
        if corrupted {
            add_nlos_noise(&mut y, noise.mu_nlos, &mut rng);
        } else {
            add_los_noise(&mut y, noise.sigma_los, &factors[seq_id], &mut rng);
        }
        samples.push(Sample { seq_id, y, corrupted });
    }

    Ok(Dataset {
        network: net.clone(),
        sequences: sequences.to_vec(),
        samples,
        seed: Some(seed),
        noise: Some(*noise),
        theta_star: Some(theta_star.clone()),
    })
}
