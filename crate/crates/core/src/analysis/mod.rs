//! Exact Markov-chain analysis of the flexible bonding protocol.
//!
//! The chain state counts active connections per bond order. Its transition
//! matrix is assembled from arrangement, termination and preemption
//! probabilities and solved for the stationary distribution, from which
//! throughput and utilization follow.

mod metrics;
pub mod primitives;
pub mod state;
pub mod steady;
pub mod transition;

pub use primitives::{
    arrangement_prob, binomial, preemption_prob, preemption_prob_marginal, termination_prob,
    ConnectionLayout,
};
pub use state::{enumerate_states, MarkovState, StateSpace, DEFAULT_STATE_CAP};
pub use steady::{solve_steady_state, SteadyState};
pub use transition::{
    build_matrix, build_transition_matrix, transition_breakdown, transition_prob,
    transition_prob_with_busy, AnalysisModel, TransitionBreakdown, TransitionCase,
    TransitionContext,
};

use crate::error::Result;
use crate::matrix::TransitionMatrix;
use crate::model::ScenarioConfig;

/// Throughput in bits per second of the stationary distribution `pi`.
pub fn throughput(pi: &[f64], states: &[MarkovState], cfg: &ScenarioConfig) -> f64 {
    metrics::throughput(pi, states, cfg.channel_rate_bps, cfg.data_fraction(), |k| cfg.beta(k))
}

/// Fraction of data-channel time carrying SU frames under `pi`.
pub fn utilization(pi: &[f64], states: &[MarkovState], cfg: &ScenarioConfig) -> f64 {
    metrics::utilization(pi, states, cfg.num_data_channels, cfg.data_fraction())
}

/// Every quantity produced by one analysis run.
#[derive(Debug, Clone)]
pub struct AnalysisResult {
    pub space: StateSpace,
    pub matrix: TransitionMatrix,
    pub steady: SteadyState,
    pub throughput_bps: f64,
    pub utilization: f64,
}

/// Build, solve and evaluate the chain of `cfg`.
pub fn analyze(cfg: &ScenarioConfig) -> Result<AnalysisResult> {
    let (space, matrix) = build_transition_matrix(cfg)?;
    let steady = solve_steady_state(&matrix)?;
    let throughput_bps = throughput(&steady.pi, space.states(), cfg);
    let utilization = utilization(&steady.pi, space.states(), cfg);
    Ok(AnalysisResult {
        space,
        matrix,
        steady,
        throughput_bps,
        utilization,
    })
}

/// Analytical throughput of `cfg` in bits per second.
pub fn analytical_throughput(cfg: &ScenarioConfig) -> Result<f64> {
    analyze(cfg).map(|r| r.throughput_bps)
}
