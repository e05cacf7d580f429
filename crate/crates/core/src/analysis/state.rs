use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Default cap on the number of enumerated states.
pub const DEFAULT_STATE_CAP: usize = 200_000;

/// Occupancy vector: `bonds[i]` counts active connections on `(i + 1)`-bonded
/// virtual channels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkovState {
    pub bonds: Vec<u32>,
}

impl MarkovState {
    pub fn new(bonds: Vec<u32>) -> Self {
        Self { bonds }
    }

    pub fn empty(max_bond: u32) -> Self {
        Self {
            bonds: vec![0; max_bond as usize],
        }
    }

    /// Connections on `order`-bonded channels (orders start at 1).
    pub fn count(&self, order: u32) -> u32 {
        self.bonds[order as usize - 1]
    }

    pub fn connections(&self) -> u32 {
        self.bonds.iter().sum()
    }

    pub fn occupied_channels(&self) -> u32 {
        self.bonds
            .iter()
            .enumerate()
            .map(|(i, &x)| (i as u32 + 1) * x)
            .sum()
    }

    pub fn max_bond(&self) -> u32 {
        self.bonds.len() as u32
    }
}

impl fmt::Display for MarkovState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.bonds.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// All states with `sum i x_i <= M` and `sum x_i <= floor(N / 2)`, sorted
/// lexicographically on the reversed vector (highest bond order first), so
/// the all-zero state is index 0 and `x_1` varies fastest.
#[derive(Debug, Clone)]
pub struct StateSpace {
    states: Vec<MarkovState>,
    index: HashMap<MarkovState, usize>,
    channels: u32,
}

impl StateSpace {
    pub fn enumerate(channels: u32, max_bond: u32, users: u32, cap: usize) -> Result<Self> {
        let max_pairs = users / 2;
        let mut states = Vec::new();
        let mut cur = vec![0u32; max_bond as usize];
        let mut overflow = false;
        enumerate_rec(
            max_bond,
            channels,
            max_pairs,
            &mut cur,
            &mut states,
            cap,
            &mut overflow,
        );
        if overflow {
            return Err(Error::Capacity {
                states: states.len() + 1,
                cap,
            });
        }
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Self {
            states,
            index,
            channels,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[MarkovState] {
        &self.states
    }

    pub fn state(&self, idx: usize) -> &MarkovState {
        &self.states[idx]
    }

    pub fn index_of(&self, state: &MarkovState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }
}

// Fills orders from K down to 1 so the output is already in canonical order.
fn enumerate_rec(
    order: u32,
    channels_left: u32,
    pairs_left: u32,
    cur: &mut Vec<u32>,
    out: &mut Vec<MarkovState>,
    cap: usize,
    overflow: &mut bool,
) {
    if *overflow {
        return;
    }
    if order == 0 {
        if out.len() >= cap {
            *overflow = true;
            return;
        }
        out.push(MarkovState::new(cur.clone()));
        return;
    }
    let most = (channels_left / order).min(pairs_left);
    for x in 0..=most {
        cur[order as usize - 1] = x;
        enumerate_rec(
            order - 1,
            channels_left - x * order,
            pairs_left - x,
            cur,
            out,
            cap,
            overflow,
        );
    }
    cur[order as usize - 1] = 0;
}

/// State space of a validated scenario.
pub fn enumerate_states(cfg: &crate::model::ScenarioConfig) -> Result<StateSpace> {
    cfg.validate()?;
    StateSpace::enumerate(
        cfg.num_data_channels,
        cfg.max_bond,
        cfg.num_users,
        DEFAULT_STATE_CAP,
    )
}
