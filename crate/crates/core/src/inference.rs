//! Per-agent bias and inherent-belief estimates from the tail of a
//! trajectory, valid when the process settles at an interior equilibrium.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Record, Trajectory};
use crate::error::{Error, Result};

pub const DEFAULT_EPS_DEG: f64 = 1e-6;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Interior,
    /// `beta` or `mu` at 0 or 1: the estimators are undefined.
    ConsensusDegenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentEstimate {
    pub gamma_hat: Option<f64>,
    pub phi_hat: Option<bool>,
    pub regime: Regime,
    pub beta: f64,
    pub mu: f64,
}

fn degenerate(x: f64, eps: f64) -> bool {
    !(x > eps && x < 1.0 - eps)
}

/// `gamma_hat = beta (1 - mu) / ((1 - beta) mu)`; `None` in the degenerate
/// band.
pub fn estimate_bias(beta: f64, mu: f64, eps_deg: f64) -> Option<f64> {
    if degenerate(beta, eps_deg) || degenerate(mu, eps_deg) {
        return None;
    }
    Some(beta / (1.0 - beta) * ((1.0 - mu) / mu))
}

/// `phi_hat = [beta > mu]`, undefined on ties (`|beta - mu| < eps_deg`) and
/// in the degenerate band.
pub fn estimate_belief(beta: f64, mu: f64, eps_deg: f64) -> Option<bool> {
    if degenerate(beta, eps_deg) || degenerate(mu, eps_deg) || (beta - mu).abs() < eps_deg {
        return None;
    }
    Some(beta > mu)
}

pub fn estimate_agent(beta: f64, mu: f64, eps_deg: f64) -> AgentEstimate {
    let regime = if degenerate(beta, eps_deg) || degenerate(mu, eps_deg) {
        Regime::ConsensusDegenerate
    } else {
        Regime::Interior
    };
    AgentEstimate {
        gamma_hat: estimate_bias(beta, mu, eps_deg),
        phi_hat: estimate_belief(beta, mu, eps_deg),
        regime,
        beta,
        mu,
    }
}

/// Averages `(beta, mu)` over the last `window` records, then estimates
/// every agent.
pub fn infer_all(traj: &Trajectory, window: usize, eps_deg: f64) -> Result<Vec<AgentEstimate>> {
    infer_records(&traj.records, window, eps_deg)
}

/// [`infer_all`] over bare records, e.g. read back from a trajectory file.
pub fn infer_records(records: &[Record], window: usize, eps_deg: f64) -> Result<Vec<AgentEstimate>> {
    let have = records.len();
    if window == 0 || have < window {
        return Err(Error::InsufficientRecords {
            have,
            need: window.max(1),
        });
    }
    let tail = &records[have - window..];
    let n = tail[0].beta.len();
    let mut beta = vec![0.0; n];
    let mut mu = vec![0.0; n];
    for r in tail {
        for i in 0..n {
            beta[i] += r.beta[i];
            mu[i] += r.mu[i];
        }
    }
    let w = window as f64;
    Ok((0..n)
        .map(|i| estimate_agent(beta[i] / w, mu[i] / w, eps_deg))
        .collect())
}

/// Window covering the last `fraction` of the records (at least one).
pub fn tail_window(records: usize, fraction: f64) -> usize {
    ((records as f64 * fraction).ceil() as usize).clamp(1, records.max(1))
}
