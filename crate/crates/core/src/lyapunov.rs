//! Lyapunov certificate for the expected dynamics on undirected graphs:
//!
//! `V(beta) = sum_ij a_ij (H(beta_i, gamma_i) - beta_i beta_j / 2) + C`,
//! `H(mu, gamma) = int_0^mu f^-1(nu, gamma) dnu`.
//!
//! The inner product `<F(beta) - beta, grad V(beta)>` is never positive
//! and vanishes only at equilibria.

use serde::{Deserialize, Serialize};

use crate::dynamics::{conform, expected_map_unchecked, BiasProfile};
use crate::error::{Error, Result};
use crate::graph::{check_len, check_unit_cube, Graph};

/// Below this `|x|`, with `x = (gamma - 1) mu / gamma`, `H` is summed as a
/// power series instead of the log form, which cancels badly near
/// `gamma = 1`.
const SERIES_CUTOFF: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovValue {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub descent: f64,
}

/// `H(mu, gamma)`. Closed form
/// `-(gamma / (gamma-1)^2) ln((gamma - (gamma-1) mu) / gamma) - mu / (gamma-1)`,
/// equal to `mu^2 / 2` at `gamma = 1`.
pub fn antiderivative_h(mu: f64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::OutOfUnitInterval {
            what: "mu",
            value: mu,
        });
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidBias {
            agent: 0,
            value: gamma,
        });
    }
    Ok(h_unchecked(mu, gamma))
}

fn h_unchecked(mu: f64, gamma: f64) -> f64 {
    let x = (gamma - 1.0) * mu / gamma;
    if x.abs() < SERIES_CUTOFF {
        h_series(mu, gamma)
    } else {
        h_closed(mu, gamma)
    }
}

// H = (mu^2 / gamma) * sum_{m >= 2} x^(m-2) / m
fn h_series(mu: f64, gamma: f64) -> f64 {
    let x = (gamma - 1.0) * mu / gamma;
    let mut sum = 0.0f64;
    let mut power = 1.0f64;
    let mut m = 2.0f64;
    loop {
        let term = power / m;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() || m > 200.0 {
            break;
        }
        power *= x;
        m += 1.0;
    }
    mu * mu / gamma * sum
}

fn h_closed(mu: f64, gamma: f64) -> f64 {
    let k = gamma - 1.0;
    let x = k * mu / gamma;
    -(gamma / (k * k)) * (-x).ln_1p() - mu / k
}

fn check(beta: &[f64], g: &Graph, bias: &BiasProfile) -> Result<()> {
    check_len(g.n(), beta.len())?;
    check_len(g.n(), bias.len())?;
    check_unit_cube("beta", beta)?;
    g.normalized_adjacency()?;
    Ok(())
}

/// The additive constant: half the total edge weight.
pub fn offset(g: &Graph) -> f64 {
    0.5 * g.total_weight()
}

pub fn value_v(beta: &[f64], g: &Graph, bias: &BiasProfile) -> Result<f64> {
    check(beta, g, bias)?;
    let a = g.weights();
    let mut v = 0.0;
    for i in 0..g.n() {
        let hi = h_unchecked(beta[i], bias.gamma()[i]);
        let row = a.row(i);
        let pair: f64 = row.iter().zip(beta).map(|(aij, bj)| aij * bj).sum();
        v += g.degree(i) * hi - 0.5 * beta[i] * pair;
    }
    Ok(v + offset(g))
}

fn gradient_unchecked(beta: &[f64], g: &Graph, bias: &BiasProfile) -> Vec<f64> {
    let mu = g.average(beta);
    (0..g.n())
        .map(|i| g.degree(i) * (conform(beta[i], 1.0 / bias.gamma()[i]) - mu[i]))
        .collect()
}

/// `dV/dbeta_i = deg(i) (f^-1(beta_i, gamma_i) - mu_i)`.
pub fn gradient_v(beta: &[f64], g: &Graph, bias: &BiasProfile) -> Result<Vec<f64>> {
    check(beta, g, bias)?;
    Ok(gradient_unchecked(beta, g, bias))
}

/// `<F(beta) - beta, grad V(beta)>`.
pub fn descent(beta: &[f64], g: &Graph, bias: &BiasProfile) -> Result<f64> {
    check(beta, g, bias)?;
    Ok(descent_unchecked(beta, g, bias))
}

fn descent_unchecked(beta: &[f64], g: &Graph, bias: &BiasProfile) -> f64 {
    let f = expected_map_unchecked(beta, g, bias);
    let grad = gradient_unchecked(beta, g, bias);
    f.iter()
        .zip(beta)
        .zip(&grad)
        .map(|((fi, bi), gi)| (fi - bi) * gi)
        .sum()
}

/// Per-agent products `(f^-1(beta_i) - mu_i) (f(mu_i) - beta_i)`, each of
/// which is nonpositive.
pub fn sign_pairs(beta: &[f64], g: &Graph, bias: &BiasProfile) -> Result<Vec<f64>> {
    check(beta, g, bias)?;
    let mu = g.average(beta);
    Ok((0..g.n())
        .map(|i| {
            let gm = bias.gamma()[i];
            let m = mu[i].clamp(0.0, 1.0);
            (conform(beta[i], 1.0 / gm) - m) * (conform(m, gm) - beta[i])
        })
        .collect())
}

pub fn evaluate(beta: &[f64], g: &Graph, bias: &BiasProfile) -> Result<LyapunovValue> {
    Ok(LyapunovValue {
        value: value_v(beta, g, bias)?,
        gradient: gradient_unchecked(beta, g, bias),
        descent: descent_unchecked(beta, g, bias),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_examples() {
        for g in [0.3, 1.0, 4.0] {
            assert_eq!(antiderivative_h(0.0, g).unwrap(), 0.0);
        }
        for mu in [0.1, 0.5, 1.0] {
            assert_eq!(antiderivative_h(mu, 1.0).unwrap(), mu * mu / 2.0);
        }
        // adaptive quadrature of nu / (2 - nu) on [0, 0.5]
        assert!((antiderivative_h(0.5, 2.0).unwrap() - 0.07536414490356186).abs() < 1e-13);
        assert!(antiderivative_h(1.5, 2.0).is_err());
    }

    #[test]
    fn h_continuous_across_series_cutoff() {
        for &gamma in &[0.9, 0.95, 1.05, 1.06, 1.1] {
            let mu = SERIES_CUTOFF * gamma / (gamma - 1.0f64).abs();
            if mu > 1.0 {
                continue;
            }
            let a = h_series(mu, gamma);
            let b = h_closed(mu, gamma);
            assert!((a - b).abs() < 1e-13, "gamma {gamma}: {a} vs {b}");
        }
    }

    #[test]
    fn v_examples() {
        let g = Graph::community(0.75, 0.75).unwrap();
        let b = BiasProfile::new(vec![2.0, 0.5]).unwrap();
        assert_eq!(value_v(&[0.0, 0.0], &g, &b).unwrap(), offset(&g));
        // quadrature oracle for both H terms
        assert!((value_v(&[0.5, 0.5], &g, &b).unwrap() - 0.25360848217180826).abs() < 1e-10);

        let single = Graph::build(1, &[(1, 1, 1.0)]).unwrap();
        let id = BiasProfile::uniform(1, 1.0).unwrap();
        for c in [0.2, 0.7] {
            assert!((value_v(&[c], &single, &id).unwrap() - offset(&single)).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_vanishes_at_boundaries() {
        let g = Graph::community(0.5, 0.7).unwrap();
        let b = BiasProfile::new(vec![1.2, 1.0 / 1.2]).unwrap();
        for x in [[0.0, 0.0], [1.0, 1.0]] {
            let grad = gradient_v(&x, &g, &b).unwrap();
            assert!(grad.iter().all(|v| v.abs() < 1e-15), "{grad:?}");
            assert_eq!(descent(&x, &g, &b).unwrap().abs(), 0.0);
        }
    }
}
