mod oracles;

use proptest::prelude::*;
use robustloc_core::model::{
    build_rho, build_selection_matrix, jacobian, predict, rho_index, Network, Sequence, Technique, Theta,
    SPEED_OF_LIGHT,
};

#[derive(Debug, Clone)]
struct Geometry {
    net: Network,
    theta: Theta,
    seq: Sequence,
}

fn technique() -> impl Strategy<Value = Technique> {
    prop_oneof![Just(Technique::Toa), Just(Technique::Tdoa), Just(Technique::Tdst)]
}

fn geometry() -> impl Strategy<Value = Geometry> {
    (2usize..=3, 0usize..=2, 3usize..=8, technique(), 0.0f64..1e-6)
        .prop_flat_map(|(dim, num_aux, num_anchors, tech, delta)| {
            let n = num_aux + num_anchors;
            let coords = prop::collection::vec(-50.0f64..50.0, dim * (num_anchors + num_aux + 1));
            let raw_seq = prop::collection::vec(1usize..=n, 2..10);
            (Just((dim, num_aux, num_anchors, tech, delta)), coords, raw_seq)
        })
        .prop_map(|((dim, num_aux, _, tech, delta), coords, mut raw)| {
            let (theta_c, anchor_c) = coords.split_at(dim * (num_aux + 1));
            let anchors: Vec<&[f64]> = anchor_c.chunks(dim).collect();
            let net = Network::new(dim, num_aux, &anchors, SPEED_OF_LIGHT, delta).unwrap();
            raw.dedup();
            if raw.len() < 2 {
                raw = vec![1, 2];
            }
            Geometry {
                net,
                theta: Theta::new(dim, theta_c.to_vec()).unwrap(),
                seq: Sequence::new(tech, raw).unwrap(),
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn predict_matches_scalar_formulas(g in geometry()) {
        let fast = predict(&g.seq, &g.theta, &g.net).unwrap();
        let slow = oracles::scalar_predict(&g.seq, &g.theta, &g.net);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-9), "{a} vs {b}");
        }
    }

    #[test]
    fn predict_matches_matrix_route(g in geometry()) {
        let n = g.net.num_nodes();
        let m = build_selection_matrix(&g.seq, n).unwrap();
        let rho = build_rho(&g.theta, &g.net).unwrap();
        let delay = g.seq.delay(&g.net);
        let fast = predict(&g.seq, &g.theta, &g.net).unwrap();
        for r in 0..m.rows() {
            let dot: f64 = m.row(r).iter().zip(&rho).map(|(&k, d)| f64::from(k) * d).sum();
            let via_matrix = dot / g.net.c() + delay;
            prop_assert!((fast[r] - via_matrix).abs() <= 1e-12 * via_matrix.abs().max(1e-9));
        }
    }

    #[test]
    fn selection_row_structure(g in geometry()) {
        let m = build_selection_matrix(&g.seq, g.net.num_nodes()).unwrap();
        let (sum, nonzeros) = match g.seq.technique() {
            Technique::Toa => (2, 1),
            Technique::Tdoa => (0, 2),
            Technique::Tdst => (1, 3),
        };
        for r in 0..m.rows() {
            let row = m.row(r);
            prop_assert_eq!(row.iter().map(|&v| i32::from(v)).sum::<i32>(), sum);
            prop_assert_eq!(row.iter().filter(|&&v| v != 0).count(), nonzeros);
        }
    }

    #[test]
    fn rho_matches_brute_force(g in geometry()) {
        let rho = build_rho(&g.theta, &g.net).unwrap();
        for ((a, b), d) in oracles::all_distances(&g.theta, &g.net) {
            if a == 0 && b == 0 { continue; }
            let idx = rho_index(a, b, g.net.num_nodes()).unwrap();
            prop_assert!((rho[idx] - d).abs() <= 1e-12 * d.max(1.0));
        }
    }

    #[test]
    fn translation_invariance(g in geometry(), shift in prop::collection::vec(-100.0f64..100.0, 3)) {
        let dim = g.net.dim();
        let anchors: Vec<Vec<f64>> =
            g.net.anchors().map(|a| a.iter().zip(&shift).map(|(x, s)| x + s).collect()).collect();
        let moved_net = Network::new(dim, g.net.num_aux(), &anchors, g.net.c(), g.net.delta()).unwrap();
        let coords: Vec<f64> =
            g.theta.as_slice().iter().enumerate().map(|(i, v)| v + shift[i % dim]).collect();
        let moved_theta = Theta::new(dim, coords).unwrap();
        let a = predict(&g.seq, &g.theta, &g.net).unwrap();
        let b = predict(&g.seq, &moved_theta, &moved_net).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * 1e-9 + 1e-12 * x.abs());
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(g in geometry()) {
        let analytic = match jacobian(&g.seq, &g.theta, &g.net) {
            Ok(j) => j,
            Err(_) => return Ok(()),
        };
        let fd = oracles::fd_jacobian(&g.seq, &g.theta, &g.net, 1e-6);
        if fd.norm() == 0.0 {
            prop_assert_eq!(analytic.norm(), 0.0);
        } else {
            prop_assert!(oracles::rel_err(&analytic, &fd) <= 1e-5, "{}", oracles::rel_err(&analytic, &fd));
        }
    }
}

#[test]
fn toa_microsecond_example() {
    let net = Network::new(2, 0, &[[0.0, 0.0], [3.0, 4.0], [0.0, 8.0]], 3e8, 0.0).unwrap();
    let theta = Theta::new(2, vec![0.0, 4.0]).unwrap();
    let seq = Sequence::new(Technique::Toa, vec![1, 2, 3]).unwrap();
    let mu = predict(&seq, &theta, &net).unwrap();
    assert!((mu[0] - 2.0 * 4.0 / 3e8).abs() < 1e-24);
}
