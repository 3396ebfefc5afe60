//! Fixtures shared by the criterion benches.

use urnsim_core::{BiasProfile, Graph};

/// Deterministic ring with chords and a self-loop on agent 1: connected and
/// non-bipartite for every `n >= 1`.
pub fn ring_with_chords(n: usize) -> Graph {
    let mut edges = vec![(1, 1, 1.0)];
    for i in 1..n {
        edges.push((i, i + 1, 1.0));
    }
    if n > 2 {
        edges.push((1, n, 1.0));
    }
    for i in 1..=n {
        let j = (i + n / 2 - 1) % n + 1;
        if j > i + 1 && !(i == 1 && j == n) {
            edges.push((i, j, 0.5));
        }
    }
    Graph::build(n, &edges).expect("fixture graph")
}

/// Alternating biases `gamma` and `1 / gamma`.
pub fn alternating_bias(n: usize, gamma: f64) -> BiasProfile {
    BiasProfile::new(
        (0..n)
            .map(|i| if i % 2 == 0 { gamma } else { 1.0 / gamma })
            .collect(),
    )
    .expect("fixture bias")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_valid() {
        for n in [1, 2, 3, 8, 64] {
            assert!(ring_with_chords(n).validate().ok, "n = {n}");
        }
    }
}
