mod common;

use rand::Rng;
use urnsim_core::equilibrium::solve_start;
use urnsim_core::{
    community_closed_form, conforming_probability, default_starts, residual, solve_interior,
    BiasProfile, Graph, SolverOptions,
};

#[test]
fn residual_is_scaled_fixed_point_gap() {
    let mut rng = common::rng(3);
    for _ in 0..200 {
        let g = common::random_graph(&mut rng, 1..=8);
        let bias = common::random_bias(&mut rng, g.n(), 6.0);
        let beta = common::random_point(&mut rng, g.n(), 0.0, 1.0);
        let mu = g.neighborhood_average(&beta).unwrap();
        let r = residual(&beta, &g, &bias).unwrap();
        for i in 0..g.n() {
            let gm = bias.gamma()[i];
            let f = conforming_probability(mu[i].min(1.0), gm).unwrap();
            let expect = (beta[i] - f) * (1.0 + (gm - 1.0) * mu[i]);
            assert!((r[i] - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn found_equilibria_touching_boundary_are_boundary() {
    let mut rng = common::rng(4);
    let opts = SolverOptions::default();
    for _ in 0..40 {
        let g = common::random_graph(&mut rng, 2..=4);
        let bias = common::random_bias(&mut rng, g.n(), 4.0);
        for start in default_starts(g.n()).iter().take(9) {
            for beta in solve_start(start, &g, &bias, &opts) {
                for edge in [0.0, 1.0] {
                    if beta.iter().any(|b| (b - edge).abs() < 1e-9) {
                        assert!(
                            beta.iter().all(|b| (b - edge).abs() < 1e-6),
                            "mixed boundary point {beta:?}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn closed_form_agrees_with_solver() {
    let mut rng = common::rng(5);
    let opts = SolverOptions::default();
    let mut checked = 0;
    while checked < 100 {
        let p1: f64 = rng.random_range(0.05..0.95);
        let p2 = rng.random_range(0.05..0.95);
        let ratio = (p1 / p2).max(p2 / p1);
        let gamma = ratio * rng.random_range(1.05..4.0);
        let closed = community_closed_form(gamma, p1, p2).unwrap();
        let star = &closed.equilibria[2].beta;
        let g = Graph::community(p1, p2).unwrap();
        let bias = BiasProfile::new(vec![gamma, 1.0 / gamma]).unwrap();
        let rep = solve_interior(&g, &bias, &default_starts(2), &opts).unwrap();
        assert_eq!(rep.equilibria.len(), 1, "gamma {gamma} p1 {p1} p2 {p2}");
        let found = &rep.equilibria[0].beta;
        for i in 0..2 {
            assert!((found[i] - star[i]).abs() < 1e-8);
        }
        checked += 1;
    }
}

#[test]
fn symmetric_community_sums_to_one() {
    for &(gamma, p) in &[(2.0, 0.75), (1.5, 0.6), (5.0, 0.9), (3.0, 0.3)] {
        let rep = community_closed_form(gamma, p, p).unwrap();
        let b = &rep.equilibria[2].beta;
        assert!((b[0] + b[1] - 1.0).abs() < 1e-10);
    }
}
