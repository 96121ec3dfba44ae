use alloc::{vec, vec::Vec};

use crate::error::Result;
use crate::model::Theta;
use crate::sim::Dataset;
use crate::solver::lm::weighted_objective;

pub const DEFAULT_GRID: usize = 20;
pub const DEFAULT_AUX_GRID: usize = 10;
/// Fractional growth of the anchor bounding box searched by the grid.
const BOX_INFLATION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "policy", rename_all = "snake_case")
)]
pub enum InitPolicy {
    /// Grid search of the uniform-weight objective over the inflated anchor box.
    Grid { resolution: usize, aux_resolution: usize },
    /// Start from a user-supplied point.
    Fixed { theta: Theta },
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy::Grid { resolution: DEFAULT_GRID, aux_resolution: DEFAULT_AUX_GRID }
    }
}

/// Axis-aligned anchor bounding box grown by 25% of its width.
fn search_box(ds: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let dim = ds.network.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for a in ds.network.anchors() {
        for k in 0..dim {
            lo[k] = lo[k].min(a[k]);
            hi[k] = hi[k].max(a[k]);
        }
    }
    for k in 0..dim {
        if !lo[k].is_finite() {
            lo[k] = -1.0;
            hi[k] = 1.0;
        }
        let width = (hi[k] - lo[k]).max(1.0);
        let mid = 0.5 * (lo[k] + hi[k]);
        let half = 0.5 * width * (1.0 + BOX_INFLATION);
        lo[k] = mid - half;
        hi[k] = mid + half;
    }
    (lo, hi)
}

/// Starting point for the estimators.
///
/// The grid policy places every unknown at the box center, then grids each
/// unknown in turn (node 0 at `resolution` cells per axis, auxiliary nodes at
/// `aux_resolution`) holding the others fixed, and keeps the best cell
/// center. Ties go to the lowest cell index.
pub fn initialize_theta(ds: &Dataset, policy: &InitPolicy) -> Result<Theta> {
    match policy {
        InitPolicy::Fixed { theta } => {
            ds.network.check_theta(theta)?;
            Ok(theta.clone())
        }
        InitPolicy::Grid { resolution, aux_resolution } => {
            let dim = ds.network.dim();
            let (lo, hi) = search_box(ds);
            let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
            let unknowns = ds.network.num_aux() + 1;
            let mut theta = Theta::new(dim, center.repeat(unknowns))?;
            let weights = vec![1.0 / ds.len() as f64; ds.len()];
            for node in 0..unknowns {
                let g = if node == 0 { *resolution } else { *aux_resolution }.max(1);
                let cells = g.pow(dim as u32);
                let mut best = (f64::INFINITY, theta.node(node).to_vec());
                let mut trial = theta.clone();
                for cell in 0..cells {
                    let mut rem = cell;
                    for k in 0..dim {
                        let idx = rem % g;
                        rem /= g;
                        let step = (hi[k] - lo[k]) / g as f64;
                        trial.node_mut(node)[k] = lo[k] + (idx as f64 + 0.5) * step;
                    }
                    let obj = weighted_objective(ds, &weights, &trial);
                    if obj < best.0 {
                        best = (obj, trial.node(node).to_vec());
                    }
                }
                theta.node_mut(node).copy_from_slice(&best.1);
            }
            Ok(theta)
        }
    }
}
