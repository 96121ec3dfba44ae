mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustloc_core::solver::{entropy, solve_weights_detailed};

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn agrees_with_both_convex_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = (0.0f64, 0.0f64);
    for &n in &[5usize, 20, 100] {
        for &eps in &[0.1, 0.3, 0.5] {
            for _ in 0..6 {
                let losses: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(2) * 50.0).collect();
                let sol = solve_weights_detailed(&losses, eps, 1e-12).unwrap();
                let pi = sol.weights.as_slice();
                let dual = oracles::dual_gradient_weights(&losses, eps, 1e-10);
                let barrier = oracles::barrier_weights(&losses, eps, 1e-10);
                worst.0 = worst.0.max(max_abs_diff(pi, &dual));
                worst.1 = worst.1.max(max_abs_diff(pi, &barrier));
                assert!((entropy(pi) - sol.target_entropy).abs() <= 1e-9);
                assert!(entropy(pi) >= sol.target_entropy);
            }
        }
    }
    assert!(worst.0 <= 1e-6 && worst.1 <= 1e-6, "worst deviations {worst:?}");
}

#[test]
fn oracles_agree_on_degenerate_minimizers() {
    let mut l = vec![4.0; 12];
    l[2] = 0.0;
    l[7] = 0.0;
    // Two minimizers out of twelve carry ln 2 < ln(0.5 * 12): interior solution.
    let ours = robustloc_core::solver::solve_weights(&l, 0.5, 1e-12).unwrap();
    let dual = oracles::dual_gradient_weights(&l, 0.5, 1e-10);
    assert!(max_abs_diff(ours.as_slice(), &dual) <= 1e-6);
}
