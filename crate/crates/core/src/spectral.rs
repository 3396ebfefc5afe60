//! Jacobian of the expected map and the eigenvalue tests for consensus and
//! for local stability of interior equilibria.
//!
//! `dF/dbeta = diag(c) W` with `c_i = gamma_i / (1 + (gamma_i - 1) mu_i)^2`.
//! That matrix is similar to the symmetric `B^1/2 A B^1/2`,
//! `B = diag(c_i / deg_i)`, so its spectrum is real and the largest
//! eigenvalue is found by symmetric power iteration.

use serde::{Deserialize, Serialize};

use crate::dynamics::{conform_slope, expected_map_unchecked, BiasProfile};
use crate::equilibrium::{Equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::graph::{check_len, check_unit_cube, Graph};
use crate::linalg::{dot, norm2, Matrix};

/// Default classification band around 1.
pub const DEFAULT_EPS_LAMBDA: f64 = 1e-9;
/// Default Rayleigh-quotient tolerance for power iteration.
pub const DEFAULT_POWER_TOL: f64 = 1e-12;
pub const POWER_ITERATION_CAP: usize = 1_000_000;

/// `diag(scale) W` evaluated at `point`.
#[derive(Debug, Clone)]
pub struct JacobianOperator<'g> {
    graph: &'g Graph,
    point: Vec<f64>,
    scale: Vec<f64>,
}

impl<'g> JacobianOperator<'g> {
    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    /// Dense `diag(c) W`.
    pub fn to_dense(&self) -> Matrix {
        let n = self.graph.n();
        let w = self.graph.walk();
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, self.scale[i] * w.get(i, j));
            }
        }
        m
    }

    /// `B^1/2 A B^1/2` with `B = diag(c_i / deg_i)`; exactly symmetric.
    pub fn symmetric_similar(&self) -> Matrix {
        let g = self.graph;
        let n = g.n();
        let root: Vec<f64> = (0..n)
            .map(|i| (self.scale[i] / g.degree(i)).sqrt())
            .collect();
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = root[i] * g.weight(i, j) * root[j];
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }
}

/// Jacobian of `F` at `x`. At the all-zeros and all-ones vectors the scale
/// is exactly `gamma` and `1 / gamma`.
pub fn jacobian<'g>(x: &[f64], g: &'g Graph, bias: &BiasProfile) -> Result<JacobianOperator<'g>> {
    check_len(g.n(), x.len())?;
    check_len(g.n(), bias.len())?;
    check_unit_cube("x", x)?;
    g.normalized_adjacency()?;
    let scale = if x.iter().all(|&v| v == 0.0) {
        bias.gamma().to_vec()
    } else if x.iter().all(|&v| v == 1.0) {
        bias.gamma().iter().map(|gm| 1.0 / gm).collect()
    } else {
        let mu = g.average(x);
        mu.iter()
            .zip(bias.gamma())
            .map(|(&m, &gm)| conform_slope(m.clamp(0.0, 1.0), gm))
            .collect()
    };
    Ok(JacobianOperator {
        graph: g,
        point: x.to_vec(),
        scale,
    })
}

/// Result of symmetric power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerResult {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Largest eigenvalue of a symmetric nonnegative irreducible matrix.
///
/// Starts from the normalised all-ones vector, which is never orthogonal to
/// the Perron vector. Converged once the Rayleigh quotient moves by less
/// than `tol` and the eigen-residual is below `sqrt(tol) * max(1, lambda)`.
pub fn power_iteration(m: &Matrix, tol: f64, cap: usize) -> Result<PowerResult> {
    let n = m.dim();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=cap {
        let w = m.mul_vec(&v);
        let next = dot(&v, &w);
        residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - next * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = norm2(&w);
        if norm == 0.0 {
            return Ok(PowerResult {
                value: 0.0,
                vector: v,
                iterations: it,
                residual: 0.0,
            });
        }
        let done = (next - lambda).abs() < tol && residual <= tol.sqrt() * next.abs().max(1.0);
        lambda = next;
        if done {
            return Ok(PowerResult {
                value: lambda.max(0.0),
                vector: v,
                iterations: it,
                residual,
            });
        }
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Err(Error::PowerIterationCap {
        iterations: cap,
        estimate: lambda,
        residual,
    })
}

/// Largest eigenvalue of the Jacobian via its symmetric similar matrix.
pub fn lambda_max(op: &JacobianOperator<'_>, tol: f64) -> Result<f64> {
    power_iteration(&op.symmetric_similar(), tol, POWER_ITERATION_CAP).map(|r| r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    AllZeros,
    AllOnes,
    NoConsensus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusClassification {
    /// `lambda_max(Gamma W)`, the Jacobian at the all-zeros point.
    pub lambda0: f64,
    /// `lambda_max(Gamma^-1 W)`, the Jacobian at the all-ones point.
    pub lambda1: f64,
    pub verdict: Verdict,
    /// Some `|lambda - 1| < eps_lambda`.
    pub marginal: bool,
}

/// Boundary eigenvalue test. A boundary point whose Jacobian has
/// `lambda_max <= 1` attracts the process almost surely; at most one of the
/// two boundaries can.
pub fn classify_consensus(
    g: &Graph,
    bias: &BiasProfile,
    eps_lambda: f64,
) -> Result<ConsensusClassification> {
    check_len(g.n(), bias.len())?;
    bias.require_biased()?;
    g.require_valid(false)?;
    let n = g.n();
    let lambda0 = lambda_max(&jacobian(&vec![0.0; n], g, bias)?, DEFAULT_POWER_TOL)?;
    let lambda1 = lambda_max(&jacobian(&vec![1.0; n], g, bias)?, DEFAULT_POWER_TOL)?;
    let zeros = lambda0 <= 1.0 + eps_lambda;
    let ones = lambda1 <= 1.0 + eps_lambda;
    let verdict = match (zeros, ones) {
        (true, true) => return Err(Error::ExclusivityViolated { lambda0, lambda1 }),
        (true, false) => Verdict::AllZeros,
        (false, true) => Verdict::AllOnes,
        (false, false) => Verdict::NoConsensus,
    };
    Ok(ConsensusClassification {
        lambda0,
        lambda1,
        verdict,
        marginal: (lambda0 - 1.0).abs() < eps_lambda || (lambda1 - 1.0).abs() < eps_lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Unknown,
    Stable,
    Unstable,
    /// `lambda_max` within the classification band of 1; no verdict.
    Marginal,
}

/// Maximum residual accepted by [`classify_interior`].
pub const INTERIOR_RESIDUAL_LIMIT: f64 = 1e-10;

/// Local stability of an interior equilibrium from `lambda_max` of its
/// Jacobian: below 1 the process converges there with positive
/// probability, above 1 with probability zero.
pub fn classify_interior(
    eq: &Equilibrium,
    g: &Graph,
    bias: &BiasProfile,
    eps_lambda: f64,
) -> Result<(Stability, f64)> {
    if eq.kind != EquilibriumKind::Interior {
        return Err(Error::BoundaryEquilibrium);
    }
    if !(eq.residual < INTERIOR_RESIDUAL_LIMIT) {
        return Err(Error::ResidualTooLarge(eq.residual));
    }
    let lambda = lambda_max(&jacobian(&eq.beta, g, bias)?, DEFAULT_POWER_TOL)?;
    let label = if lambda < 1.0 - eps_lambda {
        Stability::Stable
    } else if lambda > 1.0 + eps_lambda {
        Stability::Unstable
    } else {
        Stability::Marginal
    };
    Ok((label, lambda))
}

/// Largest relative entry error between central differences of `F` and
/// `diag(c) W` at an interior point. Structural zeros compare exactly.
pub fn jacobian_finite_difference_check(
    x: &[f64],
    g: &Graph,
    bias: &BiasProfile,
    h: f64,
) -> Result<f64> {
    if !(1e-7..=1e-4).contains(&h) {
        return Err(Error::InvalidArgument(format!(
            "step {h} outside [1e-7, 1e-4]"
        )));
    }
    let analytic = jacobian(x, g, bias)?.to_dense();
    if let Some(&value) = x.iter().find(|v| !(**v > h && **v < 1.0 - h)) {
        return Err(Error::NotInterior { what: "x", value });
    }
    let n = g.n();
    let mut worst: f64 = 0.0;
    let mut probe = x.to_vec();
    for j in 0..n {
        probe[j] = x[j] + h;
        let up = expected_map_unchecked(&probe, g, bias);
        probe[j] = x[j] - h;
        let down = expected_map_unchecked(&probe, g, bias);
        probe[j] = x[j];
        for i in 0..n {
            let fd = (up[i] - down[i]) / (2.0 * h);
            let exact = analytic.get(i, j);
            let err = if exact == 0.0 {
                if fd == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                ((fd - exact) / exact).abs()
            };
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
