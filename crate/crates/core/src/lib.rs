//! Interacting Pólya urn model of opinion dynamics under social pressure.
//!
//! Agents on a weighted undirected graph repeatedly declare a binary opinion.
//! Agent `i` declares 1 with probability `f(mu_i, gamma_i)`, where `mu_i` is
//! the weighted fraction of 1-declarations it has observed and `gamma_i` its
//! bias. This crate simulates the process, integrates its expected
//! dynamics, locates equilibria, decides consensus from the Jacobian's
//! largest eigenvalue at the two boundary points, checks the Lyapunov
//! descent property numerically and estimates biases from trajectories.

// NaN-rejecting `!(x > 0.0)` checks and index loops over several arrays
// are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod graph;
pub mod inference;
pub mod linalg;
pub mod lyapunov;
pub mod spectral;

pub use dynamics::{
    conforming_probability, derive_rng, expected_map, init_state, integrate_expected,
    integrate_expected_from, inverse_conforming, simulate, simulate_batch, simulate_run,
    step_stochastic, BiasProfile, InitialConditions, Record, RunSpec, SimState, Trajectory,
};
pub use equilibrium::{
    boundary_equilibria, community_closed_form, default_starts, is_equilibrium, residual,
    solve_interior, Boundary, Equilibrium, EquilibriumKind, EquilibriumReport, SolverOptions,
};
pub use error::{Error, Result};
pub use graph::{Graph, ValidationReport};
pub use inference::{
    estimate_belief, estimate_bias, infer_all, infer_records, AgentEstimate, Regime,
};
pub use linalg::Matrix;
pub use lyapunov::{antiderivative_h, descent, gradient_v, value_v, LyapunovValue};
pub use spectral::{
    classify_consensus, classify_interior, jacobian, jacobian_finite_difference_check,
    lambda_max, ConsensusClassification, JacobianOperator, Stability, Verdict,
};
