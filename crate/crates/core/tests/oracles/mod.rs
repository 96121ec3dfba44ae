//! Independent reference computations used only by tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use robustloc_core::model::{self, Network, Sequence, Technique, Theta};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Position of `node` without going through the library's lookup.
pub fn node_position(net: &Network, theta: &Theta, node: usize) -> Vec<f64> {
    let d = net.dim();
    if node <= net.num_aux() {
        theta.as_slice()[node * d..(node + 1) * d].to_vec()
    } else {
        net.anchors().nth(node - net.num_aux() - 1).unwrap().to_vec()
    }
}

/// Scalar TOA / TDOA / TDST formulas evaluated pair by pair.
pub fn scalar_predict(seq: &Sequence, theta: &Theta, net: &Network) -> Vec<f64> {
    let c = net.c();
    let delta = seq.delay(net);
    let x = |k: usize| node_position(net, theta, k);
    let x0 = x(0);
    let s = seq.nodes();
    match seq.technique() {
        Technique::Toa => s.iter().map(|&i| 2.0 * dist(&x(i), &x0) / c + delta).collect(),
        Technique::Tdoa => s
            .windows(2)
            .map(|w| dist(&x(w[1]), &x0) / c + delta - dist(&x(w[0]), &x0) / c)
            .collect(),
        Technique::Tdst => s
            .windows(2)
            .map(|w| {
                let (xi, xj) = (x(w[0]), x(w[1]));
                dist(&xi, &xj) / c + dist(&xj, &x0) / c + delta - dist(&xi, &x0) / c
            })
            .collect(),
    }
}

/// Central finite-difference Jacobian of `predict` with step `h` meters.
pub fn fd_jacobian(seq: &Sequence, theta: &Theta, net: &Network, h: f64) -> DMatrix<f64> {
    let p = theta.as_slice().len();
    let m = seq.num_rows();
    let mut jac = DMatrix::zeros(m, p);
    for k in 0..p {
        let mut plus = theta.as_slice().to_vec();
        let mut minus = theta.as_slice().to_vec();
        plus[k] += h;
        minus[k] -= h;
        let fp = scalar_predict(seq, &Theta::new(theta.dim(), plus).unwrap(), net);
        let fm = scalar_predict(seq, &Theta::new(theta.dim(), minus).unwrap(), net);
        for r in 0..m {
            jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac
}

/// Relative Frobenius error between two Jacobians.
pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / scale
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// Log-barrier interior-point solution of
/// `min l^T pi  s.t.  pi in simplex, H(pi) >= ln((1 - eps) n)`.
///
/// Equality-constrained Newton on
/// `t l^T pi - ln(H(pi) - h0) - sum ln pi_i`, with the Hessian
/// `diag(1/(pi g) + 1/pi^2) + u u^T` inverted by Sherman-Morrison. Stops once
/// the duality-gap bound `(n + 1) / t` is below `gap`.
pub fn barrier_weights(losses: &[f64], eps: f64, gap: f64) -> Vec<f64> {
    let n = losses.len();
    let h0 = ((1.0 - eps) * n as f64).ln();
    let lmax = losses.iter().copied().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let l: Vec<f64> = losses.iter().map(|v| v / lmax).collect();
    let mut pi = vec![1.0 / n as f64; n];
    let mut t = 1.0;
    let phi = |pi: &[f64], t: f64| -> f64 {
        let g = entropy(pi) - h0;
        t * l.iter().zip(pi).map(|(a, b)| a * b).sum::<f64>() - g.ln() - pi.iter().map(|p| p.ln()).sum::<f64>()
    };
    loop {
        for _ in 0..200 {
            let g = entropy(&pi) - h0;
            let grad_h: Vec<f64> = pi.iter().map(|p| -(p.ln() + 1.0)).collect();
            let grad: Vec<f64> = (0..n).map(|i| t * l[i] - grad_h[i] / g - 1.0 / pi[i]).collect();
            let dinv: Vec<f64> = pi.iter().map(|p| 1.0 / (1.0 / (p * g) + 1.0 / (p * p))).collect();
            let u: Vec<f64> = grad_h.iter().map(|v| v / g).collect();
            let du: Vec<f64> = (0..n).map(|i| dinv[i] * u[i]).collect();
            let denom = 1.0 + u.iter().zip(&du).map(|(a, b)| a * b).sum::<f64>();
            let hinv = |v: &[f64]| -> Vec<f64> {
                let proj = u.iter().zip(v).zip(&dinv).map(|((ui, vi), di)| ui * di * vi).sum::<f64>() / denom;
                (0..n).map(|i| dinv[i] * v[i] - du[i] * proj).collect()
            };
            let a = hinv(&grad);
            let b = hinv(&vec![1.0; n]);
            let w = -a.iter().sum::<f64>() / b.iter().sum::<f64>();
            let dx: Vec<f64> = (0..n).map(|i| -(a[i] + w * b[i])).collect();
            let decrement: f64 = -grad.iter().zip(&dx).map(|(g, d)| g * d).sum::<f64>();
            if decrement / 2.0 <= 1e-13 {
                break;
            }
            let f0 = phi(&pi, t);
            let mut s = 1.0;
            let mut moved = false;
            while s > 1e-14 {
                let cand: Vec<f64> = (0..n).map(|i| pi[i] + s * dx[i]).collect();
                if cand.iter().all(|&v| v > 0.0) && entropy(&cand) > h0 {
                    let f1 = phi(&cand, t);
                    if f1 <= f0 - 0.25 * s * decrement || (f1 <= f0 && s == 1.0) {
                        let total: f64 = cand.iter().sum();
                        pi = cand.iter().map(|v| v / total).collect();
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if (n as f64 + 1.0) / t <= gap {
            return pi;
        }
        t *= 8.0;
    }
}

/// Ordinary least squares via the normal equations.
pub fn ols(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let ata = a.transpose() * a;
    let atb = a.transpose() * b;
    ata.lu().solve(&atb).unwrap()
}

/// Exhaustive grid minimum of `f` over cell centers; ties to the lowest index.
pub fn grid_argmin(lo: [f64; 2], hi: [f64; 2], g: usize, f: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for iy in 0..g {
        for ix in 0..g {
            let x = lo[0] + (ix as f64 + 0.5) * (hi[0] - lo[0]) / g as f64;
            let y = lo[1] + (iy as f64 + 0.5) * (hi[1] - lo[1]) / g as f64;
            let v = f(x, y);
            if v < best.0 {
                best = (v, x, y);
            }
        }
    }
    (best.1, best.2)
}

/// Brute-force `||x_a - x_b||` for every pair, keyed by unordered pair.
pub fn all_distances(theta: &Theta, net: &Network) -> Vec<((usize, usize), f64)> {
    let n = net.num_nodes();
    let mut out = Vec::new();
    for a in 0..=n {
        for b in a + 1..=n {
            out.push(((a, b), dist(&node_position(net, theta, a), &node_position(net, theta, b))));
        }
    }
    out
}

pub fn predict(seq: &Sequence, theta: &Theta, net: &Network) -> Vec<f64> {
    model::predict(seq, theta, net).unwrap()
}

/// Projected gradient ascent on the Lagrange dual of the weight problem.
///
/// For a multiplier `lam >= 0` the inner minimizer over the simplex is
/// `pi ∝ exp(-l / lam)` and the dual is `d(lam) = -lam ln sum exp(-l / lam) + lam h0`
/// with `d'(lam) = h0 - H(pi(lam))`. Steps are projected onto `lam >= 0` and
/// accepted by an Armijo test. Stops once `|d'| <= tol` or a zero-multiplier
/// solution is optimal; then returns the weights at the final multiplier,
/// or uniform weights over the minimizers when the multiplier hit zero.
pub fn dual_gradient_weights(losses: &[f64], eps: f64, tol: f64) -> Vec<f64> {
    let n = losses.len();
    let h0 = ((1.0 - eps) * n as f64).ln();
    let lmin = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let l: Vec<f64> = losses.iter().map(|v| v - lmin).collect();
    let scale = l.iter().copied().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let l: Vec<f64> = l.iter().map(|v| v / scale).collect();
    let weights = |lam: f64| -> Vec<f64> {
        if lam <= 0.0 {
            let k = l.iter().filter(|&&v| v == 0.0).count() as f64;
            return l.iter().map(|&v| if v == 0.0 { 1.0 / k } else { 0.0 }).collect();
        }
        let w: Vec<f64> = l.iter().map(|v| (-v / lam).exp()).collect();
        let z: f64 = w.iter().sum();
        w.iter().map(|v| v / z).collect()
    };
    let dual = |lam: f64| -> f64 {
        if lam <= 0.0 {
            return 0.0;
        }
        let z: f64 = l.iter().map(|v| (-v / lam).exp()).sum();
        -lam * z.ln() + lam * h0
    };
    let mut lam = 1.0;
    let mut step = 1.0;
    for _ in 0..100_000 {
        let g = h0 - entropy(&weights(lam));
        if g.abs() <= tol || (lam == 0.0 && g <= 0.0) {
            break;
        }
        let d0 = dual(lam);
        step *= 4.0;
        loop {
            let cand = (lam + step * g).max(0.0);
            if dual(cand) >= d0 + 1e-4 * g * (cand - lam) || step < 1e-300 {
                lam = cand;
                break;
            }
            step *= 0.5;
        }
    }
    weights(lam)
}
