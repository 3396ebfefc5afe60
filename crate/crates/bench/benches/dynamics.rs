use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use urnsim_bench::{alternating_bias, ring_with_chords};
use urnsim_core::{derive_rng, init_state, step_stochastic, InitialConditions, RunSpec};

fn stochastic_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step_stochastic");
    for n in [10, 100, 500] {
        let g = ring_with_chords(n);
        let bias = alternating_bias(n, 2.0);
        let init = InitialConditions::uniform(n, 0.5).unwrap();
        let start = init_state(&g, &init).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            let mut rng = derive_rng(1, 0);
            let mut state = start.clone();
            b.iter(|| {
                step_stochastic(&mut state, &g, &bias, &mut rng);
                black_box(state.t())
            })
        });
    }
    group.finish();
}

fn expected_flow(c: &mut Criterion) {
    let g = ring_with_chords(50);
    let bias = alternating_bias(50, 3.0);
    let init = InitialConditions::uniform(50, 0.5).unwrap();
    c.bench_function("integrate_expected/n50_T1e4", |b| {
        b.iter(|| {
            let tr = urnsim_core::integrate_expected(&g, &bias, &init, &RunSpec::new(10_000, 0, 1000))
                .unwrap();
            black_box(tr.final_beta()[0])
        })
    });
}

criterion_group!(benches, stochastic_step, expected_flow);
criterion_main!(benches);
