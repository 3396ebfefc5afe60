//! Fixed points of the expected map `F(beta) = beta`.
//!
//! The all-zeros and all-ones vectors are always equilibria; on a connected
//! graph any other equilibrium lies strictly inside the cube. Interior
//! points are located numerically by multistart (damped fixed-point
//! iteration polished by Newton, plus Newton straight from each start so
//! that repelling equilibria are reachable too). The two-agent community
//! network also has a closed form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{conform, expected_map_unchecked, BiasProfile};
use crate::error::{Error, Result};
use crate::graph::{check_len, check_unit_cube, Graph};
use crate::linalg::{max_abs, max_abs_diff, solve, Matrix};
use crate::spectral::{jacobian, Stability};

/// Distinct equilibria are at least this far apart (sup norm).
pub const DEDUP_TOL: f64 = 1e-6;
/// Points with a component this close to 0 or 1 count as boundary.
pub const BOUNDARY_BAND: f64 = 1e-6;
const CLIP: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 200;
const MAX_STARTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    AllZeros,
    AllOnes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Boundary(Boundary),
    Interior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub beta: Vec<f64>,
    pub kind: EquilibriumKind,
    /// `||F(beta) - beta||_inf`.
    pub residual: f64,
    pub stability: Stability,
    /// `lambda_max` of the Jacobian, once classified.
    pub lambda_max: Option<f64>,
}

impl Equilibrium {
    fn new(beta: Vec<f64>, kind: EquilibriumKind, residual: f64) -> Self {
        Self {
            beta,
            kind,
            residual,
            stability: Stability::Unknown,
            lambda_max: None,
        }
    }

    pub fn is_interior(&self) -> bool {
        self.kind == EquilibriumKind::Interior
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub equilibria: Vec<Equilibrium>,
    pub starts_used: usize,
    pub failures: usize,
}

impl EquilibriumReport {
    pub fn interior(&self) -> impl Iterator<Item = &Equilibrium> {
        self.equilibria.iter().filter(|e| e.is_interior())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for `||residual||_inf`; the fixed-point phase stops at its
    /// square root.
    pub tol: f64,
    /// Iteration cap for the fixed-point phase.
    pub max_iter: usize,
    /// Damping `eta` in `beta <- (1 - eta) beta + eta F(beta)`.
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
            damping: 0.5,
        }
    }
}

fn check_inputs(beta: &[f64], g: &Graph, bias: &BiasProfile) -> Result<()> {
    check_len(g.n(), beta.len())?;
    check_len(g.n(), bias.len())?;
    check_unit_cube("beta", beta)?;
    g.normalized_adjacency()?;
    Ok(())
}

fn residual_unchecked(beta: &[f64], g: &Graph, bias: &BiasProfile) -> Vec<f64> {
    let mu = g.average(beta);
    beta.iter()
        .zip(&mu)
        .zip(bias.gamma())
        .map(|((&b, &m), &gm)| (gm - 1.0) * b * m + b - gm * m)
        .collect()
}

fn fixed_point_gap(beta: &[f64], g: &Graph, bias: &BiasProfile) -> f64 {
    max_abs_diff(&expected_map_unchecked(beta, g, bias), beta)
}

/// `(gamma_i - 1) beta_i mu_i + beta_i - gamma_i mu_i` with `mu = W beta`;
/// zero exactly at equilibria.
pub fn residual(beta: &[f64], g: &Graph, bias: &BiasProfile) -> Result<Vec<f64>> {
    check_inputs(beta, g, bias)?;
    Ok(residual_unchecked(beta, g, bias))
}

/// `||F(beta) - beta||_inf < tol`.
pub fn is_equilibrium(beta: &[f64], g: &Graph, bias: &BiasProfile, tol: f64) -> Result<bool> {
    check_inputs(beta, g, bias)?;
    Ok(fixed_point_gap(beta, g, bias) < tol)
}

/// The all-zeros and all-ones equilibria.
pub fn boundary_equilibria(n: usize) -> [Equilibrium; 2] {
    [
        Equilibrium::new(
            vec![0.0; n],
            EquilibriumKind::Boundary(Boundary::AllZeros),
            0.0,
        ),
        Equilibrium::new(
            vec![1.0; n],
            EquilibriumKind::Boundary(Boundary::AllOnes),
            0.0,
        ),
    ]
}

/// Default multistart: the `{1/4, 1/2, 3/4}^n` lattice (first 64 points)
/// for `n <= 4`, otherwise 64 points of an additive-recurrence
/// low-discrepancy sequence mapped into `[0.05, 0.95]^n`.
pub fn default_starts(n: usize) -> Vec<Vec<f64>> {
    const LEVELS: [f64; 3] = [0.25, 0.5, 0.75];
    if n <= 4 {
        let total = 3usize.pow(n as u32).min(MAX_STARTS);
        return (0..total)
            .map(|mut k| {
                (0..n)
                    .map(|_| {
                        let v = LEVELS[k % 3];
                        k /= 3;
                        v
                    })
                    .collect()
            })
            .collect();
    }
    // Generalised golden ratio: the root of x^(n+1) = x + 1.
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (n as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=n).map(|j| phi.powi(-(j as i32)).fract()).collect();
    (1..=MAX_STARTS)
        .map(|k| {
            alpha
                .iter()
                .map(|a| 0.05 + 0.9 * (0.5 + k as f64 * a).fract())
                .collect()
        })
        .collect()
}

fn clip(beta: &mut [f64]) {
    for b in beta {
        *b = b.clamp(CLIP, 1.0 - CLIP);
    }
}

/// Damped iteration until `||F(beta) - beta||_inf < target`. `F` maps the
/// cube into itself, so no clipping is needed and boundary limits are
/// reached exactly.
fn damped_fixed_point(
    start: &[f64],
    g: &Graph,
    bias: &BiasProfile,
    opts: &SolverOptions,
    target: f64,
) -> Option<Vec<f64>> {
    let eta = opts.damping;
    let mut beta = start.to_vec();
    for _ in 0..opts.max_iter {
        let f = expected_map_unchecked(&beta, g, bias);
        if max_abs_diff(&f, &beta) < target {
            return Some(beta);
        }
        for (b, fi) in beta.iter_mut().zip(&f) {
            *b = ((1.0 - eta) * *b + eta * fi).clamp(0.0, 1.0);
        }
    }
    None
}

/// Newton on `F(beta) - beta` with Jacobian `S_beta - I`, backtracking
/// on the sup norm of the gap. Stops once both the polynomial residual and
/// the fixed-point gap are below `tol`.
fn newton(start: &[f64], g: &Graph, bias: &BiasProfile, tol: f64) -> Option<Vec<f64>> {
    let n = g.n();
    let mut beta = start.to_vec();
    clip(&mut beta);
    for _ in 0..NEWTON_MAX_ITER {
        if converged(&beta, g, bias, tol) {
            return Some(beta);
        }
        let f = expected_map_unchecked(&beta, g, bias);
        let gap: Vec<f64> = f.iter().zip(&beta).map(|(fi, b)| fi - b).collect();
        let gap_norm = max_abs(&gap);
        let mut jac: Matrix = jacobian(&beta, g, bias).ok()?.to_dense();
        for i in 0..n {
            jac.set(i, i, jac.get(i, i) - 1.0);
        }
        let rhs: Vec<f64> = gap.iter().map(|v| -v).collect();
        let step = solve(&jac, &rhs)?;
        if step.iter().any(|s| !s.is_finite()) {
            return None;
        }
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            clip(&mut trial);
            if fixed_point_gap(&trial, g, bias) < gap_norm || gap_norm < tol {
                beta = trial;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    converged(&beta, g, bias, tol).then_some(beta)
}

fn converged(beta: &[f64], g: &Graph, bias: &BiasProfile, tol: f64) -> bool {
    max_abs(&residual_unchecked(beta, g, bias)) < tol && fixed_point_gap(beta, g, bias) < tol
}

/// Raw converged points from one start, before boundary filtering:
/// the fixed-point-then-Newton route first, then direct Newton. When Newton
/// cannot finish the first route (typically because the iteration is
/// heading for a boundary, where clipped Newton iterates stall), the damped
/// iteration is run on to full tolerance instead.
pub fn solve_start(
    start: &[f64],
    g: &Graph,
    bias: &BiasProfile,
    opts: &SolverOptions,
) -> Vec<Vec<f64>> {
    let mut found = Vec::with_capacity(2);
    if let Some(rough) = damped_fixed_point(start, g, bias, opts, opts.tol.sqrt()) {
        let refined = newton(&rough, g, bias, opts.tol)
            .or_else(|| damped_fixed_point(&rough, g, bias, opts, opts.tol));
        found.extend(refined);
    }
    if let Some(p) = newton(start, g, bias, opts.tol) {
        found.push(p);
    }
    found
}

fn near_boundary(beta: &[f64]) -> bool {
    beta.iter()
        .any(|&b| !(BOUNDARY_BAND..=1.0 - BOUNDARY_BAND).contains(&b))
}

/// Multistart search for interior equilibria.
///
/// Starts are solved in parallel and merged in start order, so the report
/// does not depend on scheduling. Starts where no route converges are
/// counted as failures.
pub fn solve_interior(
    g: &Graph,
    bias: &BiasProfile,
    starts: &[Vec<f64>],
    opts: &SolverOptions,
) -> Result<EquilibriumReport> {
    check_len(g.n(), bias.len())?;
    bias.require_biased()?;
    g.normalized_adjacency()?;
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "damping {} outside (0, 1]",
            opts.damping
        )));
    }
    for s in starts {
        check_len(g.n(), s.len())?;
        if let Some(&value) = s.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::NotInterior {
                what: "start",
                value,
            });
        }
    }
    let per_start: Vec<Vec<Vec<f64>>> = starts
        .par_iter()
        .map(|s| solve_start(s, g, bias, opts))
        .collect();

    let mut failures = 0;
    let mut equilibria: Vec<Equilibrium> = Vec::new();
    for found in per_start {
        if found.is_empty() {
            failures += 1;
        }
        for beta in found {
            if near_boundary(&beta) {
                continue;
            }
            if equilibria
                .iter()
                .any(|e| max_abs_diff(&e.beta, &beta) < DEDUP_TOL)
            {
                continue;
            }
            let residual = fixed_point_gap(&beta, g, bias);
            equilibria.push(Equilibrium::new(beta, EquilibriumKind::Interior, residual));
        }
    }
    Ok(EquilibriumReport {
        equilibria,
        starts_used: starts.len(),
        failures,
    })
}

/// Equilibria of the two-agent community network where agent `a` has bias
/// `gamma > 1`, agent `b` has `1 / gamma`, and `W = [[p1, 1-p1], [1-p2, p2]]`.
///
/// The interior point exists iff `max(p1/p2, p2/p1) < gamma`.
pub fn community_closed_form(gamma: f64, p1: f64, p2: f64) -> Result<EquilibriumReport> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "closed form needs gamma > 1, got {gamma}"
        )));
    }
    for (what, p) in [("p1", p1), ("p2", p2)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfUnitInterval { what, value: p });
        }
    }
    let [zeros, ones] = boundary_equilibria(2);
    let mut equilibria = vec![zeros, ones];
    if community_has_interior(gamma, p1, p2) {
        let beta = community_interior_point(gamma, p1, p2);
        let f = [
            conform(p1 * beta[0] + (1.0 - p1) * beta[1], gamma),
            conform((1.0 - p2) * beta[0] + p2 * beta[1], 1.0 / gamma),
        ];
        let residual = max_abs_diff(&f, &beta);
        equilibria.push(Equilibrium::new(beta, EquilibriumKind::Interior, residual));
    }
    Ok(EquilibriumReport {
        equilibria,
        starts_used: 0,
        failures: 0,
    })
}

/// `max(p1/p2, p2/p1) < gamma`.
pub fn community_has_interior(gamma: f64, p1: f64, p2: f64) -> bool {
    if p1 <= 0.0 || p2 <= 0.0 {
        return false;
    }
    (p1 / p2).max(p2 / p1) < gamma
}

fn community_interior_point(gamma: f64, p1: f64, p2: f64) -> Vec<f64> {
    let delta = (4.0 * gamma * (1.0 - p1 - p2) + (gamma + 1.0).powi(2) * p1 * p2).sqrt();
    let root = (p1 * p2).sqrt();
    let common = (gamma + 1.0) * p1 * p2;
    let denom = (gamma - 1.0) * (common + root * delta);
    let a = gamma * (common - 2.0 * p2 + root * delta) / denom;
    let b = (2.0 * gamma * p1 - common - root * delta) / denom;
    vec![a, b]
}
