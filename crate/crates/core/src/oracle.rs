//! Brute-force transition matrix.
//!
//! Every connection of a state is placed on concrete channels, and every
//! combination of per-connection frame endings, control-channel contention
//! outcome and per-channel sensing result is enumerated and pushed through
//! the protocol step. Only the independent primitive probabilities are used,
//! so the result is a reference for the analysis engine.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::analysis::{MarkovState, StateSpace, DEFAULT_STATE_CAP};
use crate::analysis::ConnectionLayout;
use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::model::{frame_end_prob, observed_busy_prob, ScenarioConfig};

pub const MAX_ORACLE_CHANNELS: u32 = 8;
pub const MAX_ORACLE_CONNECTIONS: u32 = 8;
pub const MAX_TABLE_CHANNELS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContentionOutcome {
    /// No idle user sent an RTS.
    None,
    /// Exactly one RTS with a free receiver.
    Success,
    /// Anything else.
    Collision,
}

/// One joint realization of the random events of a slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlotEventOutcome {
    pub termination_pattern: Vec<bool>,
    pub contention_outcome: ContentionOutcome,
    /// Observed-busy flag per channel at the next sensing.
    pub sensing_pattern: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Connection {
    order: u32,
    channels: Vec<usize>,
}

/// Concrete channel assignment of a state: orders from highest to lowest on
/// consecutive channels, relabeled through `placement`.
fn place(state: &MarkovState, placement: &[usize]) -> Vec<Connection> {
    let mut next = 0;
    let mut out = Vec::new();
    for order in (1..=state.max_bond()).rev() {
        for _ in 0..state.count(order) {
            let channels = (next..next + order as usize).map(|c| placement[c]).collect();
            next += order as usize;
            out.push(Connection { order, channels });
        }
    }
    out
}

/// Protocol step for one outcome: completions, then admission of
/// `min(free, K)` channels on the lowest free channel indices after a
/// successful contention, then preemption of every connection with an
/// observed-busy channel.
fn step(
    connections: &[Connection],
    outcome: &SlotEventOutcome,
    channels: usize,
    max_bond: u32,
) -> MarkovState {
    let mut live: Vec<Connection> = connections
        .iter()
        .zip(&outcome.termination_pattern)
        .filter(|(_, &ended)| !ended)
        .map(|(c, _)| c.clone())
        .collect();
    let mut used = vec![false; channels];
    for c in &live {
        for &ch in &c.channels {
            used[ch] = true;
        }
    }
    let free: Vec<usize> = (0..channels).filter(|&ch| !used[ch]).collect();
    if outcome.contention_outcome == ContentionOutcome::Success && !free.is_empty() {
        let order = (free.len() as u32).min(max_bond);
        live.push(Connection {
            order,
            channels: free[..order as usize].to_vec(),
        });
    }
    let mut bonds = vec![0u32; max_bond as usize];
    for c in live {
        if c.channels.iter().all(|&ch| !outcome.sensing_pattern[ch]) {
            bonds[c.order as usize - 1] += 1;
        }
    }
    MarkovState::new(bonds)
}

/// Apply one outcome to a state laid out in canonical placement.
pub fn apply_outcome(cfg: &ScenarioConfig, from: &MarkovState, outcome: &SlotEventOutcome) -> MarkovState {
    let m = cfg.num_data_channels as usize;
    let identity: Vec<usize> = (0..m).collect();
    step(&place(from, &identity), outcome, m, cfg.max_bond)
}

fn bits(mask: u64, len: usize) -> Vec<bool> {
    (0..len).map(|i| mask >> i & 1 == 1).collect()
}

/// Per-slot primitive probabilities the oracle uses.
struct Primitives {
    frame_end: Vec<f64>,
    q_c: f64,
    access: f64,
    users: u32,
}

impl Primitives {
    fn contention(&self, active: u32) -> [(ContentionOutcome, f64); 3] {
        let idle = self.users.saturating_sub(2 * active) as i32;
        let p = self.access;
        let none = (1.0 - p).powi(idle);
        let success = if idle >= 2 {
            idle as f64 * p * (1.0 - p).powi(idle - 1)
        } else {
            0.0
        };
        [
            (ContentionOutcome::None, none),
            (ContentionOutcome::Success, success),
            (ContentionOutcome::Collision, (1.0 - none - success).max(0.0)),
        ]
    }
}

fn oracle_row(
    prim: &Primitives,
    from: &MarkovState,
    space: &StateSpace,
    placement: &[usize],
    max_bond: u32,
) -> Vec<f64> {
    let m = placement.len();
    let conns = place(from, placement);
    let a = conns.len();
    let mut row = vec![0.0; space.len()];
    let sensing: Vec<(Vec<bool>, f64)> = (0..1u64 << m)
        .map(|mask| {
            let busy = mask.count_ones() as i32;
            (
                bits(mask, m),
                prim.q_c.powi(busy) * (1.0 - prim.q_c).powi(m as i32 - busy),
            )
        })
        .collect();
    for tmask in 0..1u64 << a {
        let termination_pattern = bits(tmask, a);
        let p_term: f64 = conns
            .iter()
            .zip(&termination_pattern)
            .map(|(c, &ended)| {
                let q = prim.frame_end[c.order as usize - 1];
                if ended {
                    q
                } else {
                    1.0 - q
                }
            })
            .product();
        if p_term == 0.0 {
            continue;
        }
        for (contention_outcome, p_cont) in prim.contention(a as u32) {
            if p_cont == 0.0 {
                continue;
            }
            for (pattern, p_sense) in &sensing {
                let outcome = SlotEventOutcome {
                    termination_pattern: termination_pattern.clone(),
                    contention_outcome,
                    sensing_pattern: pattern.clone(),
                };
                let to = step(&conns, &outcome, m, max_bond);
                let j = space
                    .index_of(&to)
                    .expect("step output lies in the state space");
                row[j] += p_term * p_cont * p_sense;
            }
        }
    }
    row
}

/// Exhaustive transition matrix of `cfg` with channels relabeled through
/// `placement` (a permutation of `0..M`).
pub fn oracle_transition_matrix_with_placement(
    cfg: &ScenarioConfig,
    placement: &[usize],
) -> Result<(StateSpace, TransitionMatrix)> {
    cfg.validate()?;
    let m = cfg.num_data_channels;
    let most_connections = m.min(cfg.num_users / 2);
    if m > MAX_ORACLE_CHANNELS || most_connections > MAX_ORACLE_CONNECTIONS {
        return Err(Error::Capacity {
            states: 1usize << (m + most_connections),
            cap: 1usize << (MAX_ORACLE_CHANNELS + MAX_ORACLE_CONNECTIONS),
        });
    }
    let mut sorted = placement.to_vec();
    sorted.sort_unstable();
    if sorted != (0..m as usize).collect::<Vec<_>>() {
        return Err(Error::Config(crate::ConfigError::new(
            "placement must be a permutation of the channel indices",
        )));
    }
    let prim = Primitives {
        frame_end: (1..=cfg.max_bond)
            .map(|k| frame_end_prob(cfg, k))
            .collect::<std::result::Result<_, _>>()?,
        q_c: observed_busy_prob(cfg, cfg.pu_activity),
        access: cfg.access_prob(),
        users: cfg.num_users,
    };
    let space = StateSpace::enumerate(m, cfg.max_bond, cfg.num_users, DEFAULT_STATE_CAP)?;
    let rows: Vec<Vec<f64>> = space
        .states()
        .par_iter()
        .map(|from| oracle_row(&prim, from, &space, placement, cfg.max_bond))
        .collect();
    Ok((space, TransitionMatrix::from_rows(rows)))
}

/// Exhaustive transition matrix of `cfg`.
pub fn oracle_transition_matrix(cfg: &ScenarioConfig) -> Result<(StateSpace, TransitionMatrix)> {
    let identity: Vec<usize> = (0..cfg.num_data_channels as usize).collect();
    oracle_transition_matrix_with_placement(cfg, &identity)
}

/// Joint law of (hit connections per order, busy channel count) for `layout`
/// by enumeration of every busy/idle pattern.
pub fn oracle_preemption_table(
    layout: &ConnectionLayout,
    q_c: f64,
) -> Result<BTreeMap<(Vec<u32>, u32), f64>> {
    let m = layout.channels();
    if m > MAX_TABLE_CHANNELS {
        return Err(Error::Capacity {
            states: 1usize << m,
            cap: 1usize << MAX_TABLE_CHANNELS,
        });
    }
    let mut blocks = Vec::new();
    let mut next = 0usize;
    for (i, &count) in layout.blocks.iter().enumerate() {
        for _ in 0..count {
            blocks.push((i, next..next + i + 1));
            next += i + 1;
        }
    }
    let mut table = BTreeMap::new();
    for mask in 0..1u64 << m {
        let busy = mask.count_ones();
        let mut hits = vec![0u32; layout.blocks.len()];
        for (i, range) in &blocks {
            if range.clone().any(|ch| mask >> ch & 1 == 1) {
                hits[*i] += 1;
            }
        }
        let p = q_c.powi(busy as i32) * (1.0 - q_c).powi((m - busy) as i32);
        *table.entry((hits, busy)).or_insert(0.0) += p;
    }
    Ok(table)
}
