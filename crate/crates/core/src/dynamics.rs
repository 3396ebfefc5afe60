//! The conforming-probability function, the stochastic declaration process
//! and its deterministic expected dynamics.
//!
//! Time starts at `t = 1` with `beta(1) = b1`; the first declarations happen
//! at `t = 2`. Counts of neighbour declarations are never stored: they are
//! implied by `M_i(t) = deg(i) t` and `mu = W beta`.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_len, check_unit_cube, Graph};

/// Steps between full recomputations of `mu = W beta` in the simulator.
pub const MU_REFRESH_INTERVAL: u64 = 1 << 16;

/// Default initial declaration proportion (`m0 = m1`).
pub const DEFAULT_B1: f64 = 0.5;

#[inline]
pub(crate) fn conform(mu: f64, gamma: f64) -> f64 {
    // Same as gamma mu / (1 + (gamma - 1) mu), exact at mu = 0 and mu = 1.
    let num = gamma * mu;
    num / (num + (1.0 - mu))
}

/// Derivative of `f` in `mu`.
#[inline]
pub(crate) fn conform_slope(mu: f64, gamma: f64) -> f64 {
    let d = 1.0 + (gamma - 1.0) * mu;
    gamma / (d * d)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidBias {
            agent: 0,
            value: gamma,
        })
    }
}

fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfUnitInterval { what, value: x })
    }
}

/// `f(mu, gamma) = gamma mu / (1 + (gamma - 1) mu)`: probability of declaring
/// 1 given neighbourhood proportion `mu` and bias `gamma`.
pub fn conforming_probability(mu: f64, gamma: f64) -> Result<f64> {
    check_unit("mu", mu)?;
    check_gamma(gamma)?;
    Ok(conform(mu, gamma))
}

/// Inverse of `f` in its first argument, `f^-1(nu, gamma) = f(nu, 1/gamma)`.
pub fn inverse_conforming(nu: f64, gamma: f64) -> Result<f64> {
    check_unit("nu", nu)?;
    check_gamma(gamma)?;
    Ok(conform(nu, 1.0 / gamma))
}

/// Per-agent bias parameters `gamma_i > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasProfile {
    gamma: Vec<f64>,
}

impl BiasProfile {
    /// Logs a warning when every `gamma_i == 1`; analyses that need a biased
    /// agent refuse such profiles through [`BiasProfile::require_biased`].
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        for (agent, &value) in gamma.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidBias {
                    agent: agent + 1,
                    value,
                });
            }
        }
        let profile = Self { gamma };
        if profile.is_identity() {
            warn!("all bias parameters equal 1; consensus classification is undefined");
        }
        Ok(profile)
    }

    /// From inherent beliefs and honesty parameters: `gamma = honesty` when
    /// the belief is 1, `1 / honesty` otherwise.
    pub fn from_beliefs(beliefs: &[bool], honesty: &[f64]) -> Result<Self> {
        check_len(beliefs.len(), honesty.len())?;
        let gamma = beliefs
            .iter()
            .zip(honesty)
            .enumerate()
            .map(|(i, (&phi, &h))| {
                if !(h >= 1.0 && h.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "honesty for agent {} must be finite and >= 1, got {h}",
                        i + 1
                    )));
                }
                Ok(if phi { h } else { 1.0 / h })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(gamma)
    }

    pub fn uniform(n: usize, gamma: f64) -> Result<Self> {
        Self::new(vec![gamma; n])
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Inherent beliefs implied by the bias (`gamma > 1`).
    pub fn beliefs(&self) -> Vec<bool> {
        self.gamma.iter().map(|&g| g > 1.0).collect()
    }

    /// Honesty parameters `max(gamma, 1/gamma)`.
    pub fn honesty(&self) -> Vec<f64> {
        self.gamma.iter().map(|&g| g.max(1.0 / g)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.gamma.iter().all(|&g| g == 1.0)
    }

    pub fn require_biased(&self) -> Result<()> {
        if self.is_identity() {
            Err(Error::IdentityBias)
        } else {
            Ok(())
        }
    }

    /// Same profile with every `gamma_i` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.gamma.iter().map(|g| g * factor).collect())
    }

    /// `gamma_i -> 1 / gamma_i`.
    pub fn reciprocal(&self) -> Self {
        Self {
            gamma: self.gamma.iter().map(|g| 1.0 / g).collect(),
        }
    }
}

/// Initial declaration proportions `b1`, strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialConditions {
    b1: Vec<f64>,
}

impl InitialConditions {
    pub fn new(b1: Vec<f64>) -> Result<Self> {
        if let Some(&value) = b1.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::NotInterior { what: "b1", value });
        }
        Ok(Self { b1 })
    }

    pub fn uniform(n: usize, b1: f64) -> Result<Self> {
        Self::new(vec![b1; n])
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }

    pub fn b0(&self) -> Vec<f64> {
        self.b1.iter().map(|b| 1.0 - b).collect()
    }
}

/// State of the declaration process at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    t: u64,
    beta: Vec<f64>,
    mu: Vec<f64>,
    counts_b1: Vec<f64>,
    last_psi: Option<Vec<bool>>,
    degrees: Vec<f64>,
}

impl SimState {
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `B_i^1(t)`: initial weight plus the number of 1-declarations.
    pub fn counts_b1(&self) -> &[f64] {
        &self.counts_b1
    }

    /// Declarations made on the last step; `None` at `t = 1`.
    pub fn last_psi(&self) -> Option<&[bool]> {
        self.last_psi.as_deref()
    }

    /// Weighted count of observed 1-declarations, `M_i^1(t) = deg(i) t mu_i`.
    pub fn observed_ones(&self) -> Vec<f64> {
        let t = self.t as f64;
        self.degrees.iter().zip(&self.mu).map(|(d, m)| d * t * m).collect()
    }

    /// `M_i^0(t) = deg(i) t (1 - mu_i)`.
    pub fn observed_zeros(&self) -> Vec<f64> {
        let t = self.t as f64;
        self.degrees
            .iter()
            .zip(&self.mu)
            .map(|(d, m)| d * t * (1.0 - m))
            .collect()
    }

    /// `M_i(t) = deg(i) t`.
    pub fn observed_total(&self) -> Vec<f64> {
        let t = self.t as f64;
        self.degrees.iter().map(|d| d * t).collect()
    }

    fn refresh_mu(&mut self, g: &Graph) {
        self.mu = g.average(&self.beta);
    }
}

/// One sampled point of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: u64,
    pub beta: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<Record>,
    /// Base seed; `None` for deterministic flows.
    pub seed: Option<u64>,
    /// Stream index within a Monte Carlo batch.
    pub run: u64,
    pub final_state: SimState,
}

impl Trajectory {
    pub fn final_beta(&self) -> &[f64] {
        self.final_state.beta()
    }
}

/// Length, sampling and seeding of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSpec {
    /// Final time `T >= 1`.
    pub steps: u64,
    pub seed: u64,
    /// Record every `stride` steps (plus the final state).
    pub stride: u64,
    /// Simulate on graphs that are disconnected or bipartite.
    pub allow_invalid: bool,
}

impl RunSpec {
    pub fn new(steps: u64, seed: u64, stride: u64) -> Self {
        Self {
            steps,
            seed,
            stride,
            allow_invalid: false,
        }
    }

    fn check(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be >= 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidArgument("stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Generator for run `run` of a batch seeded with `base_seed`.
///
/// ChaCha8 keyed by `base_seed`, on stream `run`: runs are independent and
/// each is reproducible on its own regardless of scheduling. Agents consume
/// one `f64` draw each per step, in ascending index order.
pub fn derive_rng(base_seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(run);
    rng
}

fn check_model(g: &Graph, bias: &BiasProfile, init: &InitialConditions) -> Result<()> {
    check_len(g.n(), bias.len())?;
    check_len(g.n(), init.b1().len())
}

/// State at `t = 1`: `beta = B^1 = b1`, `mu = W b1`.
pub fn init_state(g: &Graph, init: &InitialConditions) -> Result<SimState> {
    check_len(g.n(), init.b1().len())?;
    g.normalized_adjacency()?;
    let beta = init.b1().to_vec();
    Ok(SimState {
        t: 1,
        mu: g.average(&beta),
        counts_b1: beta.clone(),
        beta,
        last_psi: None,
        degrees: g.degrees().to_vec(),
    })
}

/// Advances the stochastic process by one step.
///
/// All agents declare simultaneously from `mu(t)`: agent `i` (in ascending
/// order) draws `u` in `[0, 1)` and declares 1 iff `u < f(mu_i(t), gamma_i)`.
pub fn step_stochastic<R: Rng + ?Sized>(
    state: &mut SimState,
    g: &Graph,
    bias: &BiasProfile,
    rng: &mut R,
) {
    let n = state.beta.len();
    let psi: Vec<bool> = (0..n)
        .map(|i| {
            let p = conform(state.mu[i].clamp(0.0, 1.0), bias.gamma[i]);
            rng.random::<f64>() < p
        })
        .collect();

    let t = state.t as f64;
    let next = state.t + 1;
    let tn = next as f64;
    for (b, &s) in state.counts_b1.iter_mut().zip(&psi) {
        if s {
            *b += 1.0;
        }
    }
    for (beta, b) in state.beta.iter_mut().zip(&state.counts_b1) {
        *beta = b / tn;
    }
    state.t = next;

    if next.is_multiple_of(MU_REFRESH_INTERVAL) {
        state.refresh_mu(g);
    } else {
        let w = g.walk();
        for (i, mu) in state.mu.iter_mut().enumerate() {
            let row = w.row(i);
            let inflow: f64 = psi
                .iter()
                .zip(row)
                .filter(|(s, _)| **s)
                .map(|(_, wij)| wij)
                .sum();
            *mu = (t * *mu + inflow) / tn;
        }
    }
    state.last_psi = Some(psi);
}

fn record(state: &SimState) -> Record {
    Record {
        t: state.t,
        beta: state.beta.clone(),
        mu: state.mu.clone(),
    }
}

/// Drives `advance` from `t = 1` to `t = T`, sampling at
/// `t = 1, 1 + stride, 1 + 2 stride, ...` and at `T`.
fn drive(
    mut state: SimState,
    spec: &RunSpec,
    mut advance: impl FnMut(&mut SimState),
) -> (Vec<Record>, SimState) {
    let mut records = vec![record(&state)];
    while state.t < spec.steps {
        advance(&mut state);
        if state.t == spec.steps || (state.t - 1).is_multiple_of(spec.stride) {
            records.push(record(&state));
        }
    }
    (records, state)
}

/// Full stochastic dynamics for `T - 1` steps on stream 0 of `spec.seed`.
pub fn simulate(
    g: &Graph,
    bias: &BiasProfile,
    init: &InitialConditions,
    spec: &RunSpec,
) -> Result<Trajectory> {
    simulate_run(g, bias, init, spec, 0)
}

/// Run `run` of a Monte Carlo batch (stream `run` of `spec.seed`).
pub fn simulate_run(
    g: &Graph,
    bias: &BiasProfile,
    init: &InitialConditions,
    spec: &RunSpec,
    run: u64,
) -> Result<Trajectory> {
    spec.check()?;
    check_model(g, bias, init)?;
    g.require_valid(spec.allow_invalid)?;
    let mut rng = derive_rng(spec.seed, run);
    let state = init_state(g, init)?;
    let (records, final_state) = drive(state, spec, |s| step_stochastic(s, g, bias, &mut rng));
    Ok(Trajectory {
        records,
        seed: Some(spec.seed),
        run,
        final_state,
    })
}

/// Independent runs `0..runs`, executed in parallel and returned in run order.
pub fn simulate_batch(
    g: &Graph,
    bias: &BiasProfile,
    init: &InitialConditions,
    spec: &RunSpec,
    runs: u64,
) -> Result<Vec<Trajectory>> {
    (0..runs)
        .into_par_iter()
        .map(|r| simulate_run(g, bias, init, spec, r))
        .collect()
}

/// `F_i(beta) = f((W beta)_i, gamma_i)`.
pub fn expected_map(beta: &[f64], g: &Graph, bias: &BiasProfile) -> Result<Vec<f64>> {
    check_len(g.n(), beta.len())?;
    check_len(g.n(), bias.len())?;
    check_unit_cube("beta", beta)?;
    g.normalized_adjacency()?;
    Ok(expected_map_unchecked(beta, g, bias))
}

pub(crate) fn expected_map_unchecked(beta: &[f64], g: &Graph, bias: &BiasProfile) -> Vec<f64> {
    let mu = g.average(beta);
    mu.iter()
        .zip(bias.gamma())
        .map(|(&m, &gm)| conform(m.clamp(0.0, 1.0), gm))
        .collect()
}

/// Deterministic expected dynamics
/// `beta(t+1) = beta(t) + (F(beta(t)) - beta(t)) / (t + 1)`.
pub fn integrate_expected(
    g: &Graph,
    bias: &BiasProfile,
    init: &InitialConditions,
    spec: &RunSpec,
) -> Result<Trajectory> {
    spec.check()?;
    check_model(g, bias, init)?;
    g.require_valid(spec.allow_invalid)?;
    integrate_from(g, bias, init.b1(), spec)
}

/// As [`integrate_expected`] but from any start in the closed cube,
/// including the boundary.
pub fn integrate_expected_from(
    g: &Graph,
    bias: &BiasProfile,
    beta0: &[f64],
    spec: &RunSpec,
) -> Result<Trajectory> {
    spec.check()?;
    check_len(g.n(), beta0.len())?;
    check_len(g.n(), bias.len())?;
    check_unit_cube("beta", beta0)?;
    g.require_valid(spec.allow_invalid)?;
    integrate_from(g, bias, beta0, spec)
}

fn integrate_from(
    g: &Graph,
    bias: &BiasProfile,
    beta0: &[f64],
    spec: &RunSpec,
) -> Result<Trajectory> {
    let beta = beta0.to_vec();
    let state = SimState {
        t: 1,
        mu: g.average(&beta),
        counts_b1: beta.clone(),
        beta,
        last_psi: None,
        degrees: g.degrees().to_vec(),
    };
    let (records, final_state) = drive(state, spec, |s| {
        let f = expected_map_unchecked(&s.beta, g, bias);
        let tn = (s.t + 1) as f64;
        for (b, fi) in s.beta.iter_mut().zip(&f) {
            *b += (fi - *b) / tn;
        }
        s.t += 1;
        s.counts_b1 = s.beta.iter().map(|b| b * tn).collect();
        s.refresh_mu(g);
    });
    Ok(Trajectory {
        records,
        seed: None,
        run: 0,
        final_state,
    })
}
