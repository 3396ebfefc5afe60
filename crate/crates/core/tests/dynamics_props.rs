mod common;

use proptest::prelude::*;
use urnsim_core::dynamics::DEFAULT_B1;
use urnsim_core::{
    conforming_probability, derive_rng, expected_map, init_state, integrate_expected,
    inverse_conforming, simulate_run, step_stochastic, BiasProfile, Graph, InitialConditions,
    RunSpec,
};

proptest! {
    #[test]
    fn f_matches_reference_form(mu in 1e-9f64..1.0, gamma in 0.01f64..100.0) {
        let f = conforming_probability(mu, gamma).unwrap();
        prop_assert!((f - common::f_ref(mu, gamma)).abs() < 1e-13);
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn f_strictly_increasing(a in 0.0f64..1.0, b in 0.0f64..1.0, gamma in 0.01f64..100.0) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(
            conforming_probability(hi, gamma).unwrap() > conforming_probability(lo, gamma).unwrap()
        );
    }

    #[test]
    fn f_bijection_and_reflection(mu in 0.0f64..=1.0, gamma in 0.05f64..20.0) {
        let inv = inverse_conforming(mu, gamma).unwrap();
        prop_assert!((conforming_probability(inv, gamma).unwrap() - mu).abs() < 1e-12);
        let refl = 1.0 - conforming_probability(1.0 - mu, 1.0 / gamma).unwrap();
        prop_assert!((conforming_probability(mu, gamma).unwrap() - refl).abs() < 1e-12);
    }

    #[test]
    fn expected_map_preserves_order(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let g = common::random_graph(&mut rng, 2..=8);
        let bias = common::random_bias(&mut rng, g.n(), 5.0);
        let lo = common::random_point(&mut rng, g.n(), 0.0, 1.0);
        let hi: Vec<f64> = lo
            .iter()
            .map(|&x| x + (1.0 - x) * rand::Rng::random::<f64>(&mut rng))
            .collect();
        let f_lo = expected_map(&lo, &g, &bias).unwrap();
        let f_hi = expected_map(&hi, &g, &bias).unwrap();
        prop_assert!(f_lo.iter().zip(&f_hi).all(|(a, b)| a <= b));
        prop_assert!(f_hi.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn state_identity_and_bounds_over_long_run() {
    let mut rng = common::rng(5);
    let g = Graph::random_connected(30, 0.2, (0.1, 2.0), &mut rng).unwrap();
    let bias = common::random_bias(&mut rng, 30, 4.0);
    let init = InitialConditions::uniform(30, DEFAULT_B1).unwrap();
    let mut state = init_state(&g, &init).unwrap();
    let mut gen = derive_rng(99, 0);
    for _ in 0..20_000 {
        step_stochastic(&mut state, &g, &bias, &mut gen);
        assert!(state.beta().iter().all(|b| *b > 0.0 && *b < 1.0));
    }
    let exact = g.neighborhood_average(state.beta()).unwrap();
    let drift = exact
        .iter()
        .zip(state.mu())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(drift < 1e-10, "drift {drift}");
    for (b, c) in state.beta().iter().zip(state.counts_b1()) {
        assert_eq!(*b, c / state.t() as f64);
    }
}

#[test]
fn replay_is_bit_identical() {
    let g = Graph::community(0.6, 0.8).unwrap();
    let bias = BiasProfile::new(vec![3.0, 0.4]).unwrap();
    let init = InitialConditions::uniform(2, 0.5).unwrap();
    let spec = RunSpec::new(5_000, 1234, 7);
    let a = simulate_run(&g, &bias, &init, &spec, 3).unwrap();
    let b = simulate_run(&g, &bias, &init, &spec, 3).unwrap();
    assert_eq!(a.records, b.records);
    let c = simulate_run(&g, &bias, &init, &spec, 4).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn declaration_probability_two_thirds() {
    // mu_1 = 0.5 and gamma_1 = 2: P[psi = 1] = f(0.5, 2) = 2/3.
    let g = Graph::community(0.75, 0.75).unwrap();
    let bias = BiasProfile::new(vec![2.0, 0.5]).unwrap();
    let start = init_state(&g, &InitialConditions::uniform(2, 0.5).unwrap()).unwrap();
    let mut gen = derive_rng(8, 0);
    let trials = 60_000;
    let mut ones = 0;
    for _ in 0..trials {
        let mut s = start.clone();
        step_stochastic(&mut s, &g, &bias, &mut gen);
        ones += s.last_psi().unwrap()[0] as usize;
    }
    let p = ones as f64 / trials as f64;
    let se = (2.0f64 / 9.0 / trials as f64).sqrt();
    assert!((p - 2.0 / 3.0).abs() < 4.0 * se, "p = {p}");
}

#[test]
fn single_step_is_unbiased() {
    let mut rng = common::rng(21);
    let g = common::random_graph(&mut rng, 4..=6);
    let n = g.n();
    let bias = common::random_bias(&mut rng, n, 3.0);
    let init = InitialConditions::new(common::random_point(&mut rng, n, 0.1, 0.9)).unwrap();
    let mut start = init_state(&g, &init).unwrap();
    let mut gen = derive_rng(77, 0);
    for _ in 0..9 {
        step_stochastic(&mut start, &g, &bias, &mut gen);
    }
    let t = start.t() as f64;
    let f = expected_map(start.beta(), &g, &bias).unwrap();
    let expect: Vec<f64> = (0..n)
        .map(|i| (t * start.beta()[i] + f[i]) / (t + 1.0))
        .collect();

    let reps = 100_000;
    let mut mean = vec![0.0; n];
    for _ in 0..reps {
        let mut s = start.clone();
        step_stochastic(&mut s, &g, &bias, &mut gen);
        for (m, b) in mean.iter_mut().zip(s.beta()) {
            *m += b;
        }
    }
    for i in 0..n {
        let m = mean[i] / reps as f64;
        let se = (f[i] * (1.0 - f[i])).sqrt() / (t + 1.0) / (reps as f64).sqrt();
        assert!((m - expect[i]).abs() < 4.0 * se, "agent {i}: {m} vs {}", expect[i]);
    }
}

#[test]
fn every_agent_declares_both_opinions_early() {
    let mut hits = 0;
    let seeds = 100;
    for seed in 0..seeds {
        let mut rng = common::rng(1000 + seed);
        let g = common::random_graph(&mut rng, 3..=8);
        let bias = common::random_bias(&mut rng, g.n(), 5.0);
        let init = InitialConditions::uniform(g.n(), DEFAULT_B1).unwrap();
        let mut state = init_state(&g, &init).unwrap();
        let mut gen = derive_rng(seed, 0);
        let mut zero = vec![false; g.n()];
        let mut one = vec![false; g.n()];
        for _ in 0..1000 {
            step_stochastic(&mut state, &g, &bias, &mut gen);
            for (i, &p) in state.last_psi().unwrap().iter().enumerate() {
                if p {
                    one[i] = true;
                } else {
                    zero[i] = true;
                }
            }
        }
        if zero.iter().chain(&one).all(|x| *x) {
            hits += 1;
        }
    }
    assert!(hits as f64 >= 0.95 * seeds as f64, "{hits}/{seeds}");
}

#[test]
fn expected_flow_reaches_interior_equilibrium() {
    let g = Graph::community(0.75, 0.75).unwrap();
    let bias = BiasProfile::new(vec![2.0, 0.5]).unwrap();
    let init = InitialConditions::uniform(2, 0.5).unwrap();
    let tr = integrate_expected(&g, &bias, &init, &RunSpec::new(1_000_000, 0, 100_000)).unwrap();
    let star = [0.780776406404415, 0.219223593595585];
    let err = tr
        .final_beta()
        .iter()
        .zip(&star)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 1e-3, "err {err}");
}
