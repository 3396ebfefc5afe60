//! Independent oracles and random instances for the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use urnsim_core::{BiasProfile, Graph, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected non-bipartite graph with `n` in `sizes`.
pub fn random_graph(rng: &mut ChaCha8Rng, sizes: std::ops::RangeInclusive<usize>) -> Graph {
    let n = rng.random_range(sizes);
    let density = rng.random_range(0.1..0.7);
    Graph::random_connected(n, density, (0.2, 2.0), rng).unwrap()
}

/// Log-uniform biases in `[1/spread, spread]`, never all 1.
pub fn random_bias(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> BiasProfile {
    let ln = spread.ln();
    let gamma: Vec<f64> = (0..n).map(|_| (rng.random_range(-ln..ln)).exp()).collect();
    BiasProfile::new(gamma).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Eigenvalues of a general dense matrix (real, imaginary) via nalgebra's
/// Schur decomposition.
pub fn dense_eigenvalues(m: &Matrix) -> Vec<(f64, f64)> {
    let n = m.dim();
    let d = DMatrix::from_row_slice(n, n, m.as_slice());
    d.complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect()
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// `f(mu, gamma)` written independently of the crate.
pub fn f_ref(mu: f64, gamma: f64) -> f64 {
    1.0 / (1.0 + (1.0 / mu - 1.0) / gamma)
}
