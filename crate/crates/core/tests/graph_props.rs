mod common;

use proptest::prelude::*;
use urnsim_core::Graph;

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (1usize..12, 0.0f64..0.8, any::<u64>()).prop_map(|(n, density, seed)| {
        let mut rng = common::rng(seed);
        Graph::random_connected(n, density, (0.1, 3.0), &mut rng).unwrap()
    })
}

proptest! {
    #[test]
    fn walk_is_row_stochastic(g in graph_strategy()) {
        let w = g.normalized_adjacency().unwrap();
        for i in 0..g.n() {
            let s: f64 = w.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
        let ones = g.neighborhood_average(&vec![1.0; g.n()]).unwrap();
        prop_assert!(ones.iter().all(|m| (m - 1.0).abs() < 1e-12));
    }

    #[test]
    fn neighborhood_average_is_linear(
        g in graph_strategy(),
        a in 0.0f64..0.5,
        b in 0.0f64..0.5,
        seed in any::<u64>(),
    ) {
        let mut rng = common::rng(seed);
        let x = common::random_point(&mut rng, g.n(), 0.0, 1.0);
        let y = common::random_point(&mut rng, g.n(), 0.0, 1.0);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
        let lhs = g.neighborhood_average(&combo).unwrap();
        let mx = g.neighborhood_average(&x).unwrap();
        let my = g.neighborhood_average(&y).unwrap();
        for i in 0..g.n() {
            prop_assert!((lhs[i] - (a * mx[i] + b * my[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn self_loop_rules_out_bipartite(g in graph_strategy(), loop_at in 0usize..12, w in 0.1f64..2.0) {
        let n = g.n();
        let at = loop_at % n + 1;
        let mut edges: Vec<_> = g.edges().into_iter().filter(|e| !(e.0 == at && e.1 == at)).collect();
        edges.push((at, at, w));
        let h = Graph::build(n, &edges).unwrap();
        prop_assert!(!h.validate().bipartite);
    }

    #[test]
    fn degree_identity(g in graph_strategy(), seed in any::<u64>()) {
        // sum_j a_ij (b0_j + b1_j) = deg(i) when b0 + b1 = 1
        let mut rng = common::rng(seed);
        let b1 = common::random_point(&mut rng, g.n(), 0.01, 0.99);
        for i in 0..g.n() {
            let m1: f64 = (0..g.n()).map(|j| g.weight(i, j) * b1[j]).sum();
            let m0: f64 = (0..g.n()).map(|j| g.weight(i, j) * (1.0 - b1[j])).sum();
            prop_assert!((m0 + m1 - g.degree(i)).abs() < 1e-12);
        }
    }
}

#[test]
fn even_cycle_bipartite_odd_cycle_not() {
    let c4 = Graph::build(4, &[(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 1, 1.0)]).unwrap();
    assert!(c4.validate().bipartite);
    let c5 = Graph::build(5, &[(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 1.0), (5, 1, 1.0)])
        .unwrap();
    assert!(!c5.validate().bipartite);
    assert!(c5.validate().ok);
}
