//! Transition probabilities of the occupancy chain.
//!
//! One transition covers, in order: frame completions of the connections that
//! transmitted in the current slot, at most one admission on the control
//! channel (bonding `min(free, K)` channels, blocked when nothing is free),
//! and the next slot's sensing, which removes every connection with a busy
//! channel. The chain state is what survives sensing, i.e. the set of
//! connections that actually carry data in the slot.
//!
//! For a pair `(a, b)` the probability is a sum over termination vectors
//! `theta` (the rows of the termination-combination matrix) and the two
//! contention outcomes; each term is a product of termination, arrangement
//! and preemption probabilities, with the preemption vector fixed by the
//! target state.

use rayon::prelude::*;

use super::primitives::{
    arrangement_prob, preemption_prob, preemption_prob_marginal, termination_prob,
    ConnectionLayout,
};
use super::state::{MarkovState, StateSpace, DEFAULT_STATE_CAP};
use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::model::{
    frame_end_prob, observed_busy_prob, BondingPolicy, Disruption, PuTraffic, ScenarioConfig,
};

/// Largest state space the dense builder accepts.
pub const DENSE_STATE_LIMIT: usize = 8192;

/// Scenario parameters the chain depends on, resolved once.
#[derive(Debug, Clone)]
pub struct AnalysisModel {
    pub users: u32,
    pub channels: u32,
    pub max_bond: u32,
    pub access_prob: f64,
    /// `frame_end[k - 1] = q(k)`.
    pub frame_end: Vec<f64>,
    /// `beta[k - 1] = beta(k)`.
    pub beta: Vec<f64>,
    pub observed_busy: f64,
    pub data_fraction: f64,
    pub channel_rate_bps: f64,
}

impl AnalysisModel {
    /// Resolve a scenario the analysis covers: flexible bonding, frame drop on
    /// disruption, no priorities, uniform i.i.d. PU activity.
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.bonding_policy != BondingPolicy::Flexible {
            return Err(Error::Unsupported(
                "the Markov analysis models flexible bonding only".into(),
            ));
        }
        if cfg.disruption != Disruption::Drop {
            return Err(Error::Unsupported(
                "the Markov analysis models the frame-drop disruption strategy only".into(),
            ));
        }
        if cfg.priority.is_some() {
            return Err(Error::Unsupported("priorities are simulation-only".into()));
        }
        if cfg.pu_traffic.model != PuTraffic::Iid || cfg.pu_traffic.imbalance != 0.0 {
            return Err(Error::Unsupported(
                "the Markov analysis needs uniform i.i.d. PU activity".into(),
            ));
        }
        let frame_end = (1..=cfg.max_bond)
            .map(|k| frame_end_prob(cfg, k))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self {
            users: cfg.num_users,
            channels: cfg.num_data_channels,
            max_bond: cfg.max_bond,
            access_prob: cfg.access_prob(),
            frame_end,
            beta: (1..=cfg.max_bond).map(|k| cfg.beta(k)).collect(),
            observed_busy: observed_busy_prob(cfg, cfg.pu_activity),
            data_fraction: cfg.data_fraction(),
            channel_rate_bps: cfg.channel_rate_bps,
        })
    }

    pub fn state_space(&self) -> Result<StateSpace> {
        StateSpace::enumerate(self.channels, self.max_bond, self.users, DEFAULT_STATE_CAP)
    }

    fn free_channels(&self, bonds: &[u32]) -> u32 {
        let used: u32 = bonds
            .iter()
            .enumerate()
            .map(|(i, &x)| (i as u32 + 1) * x)
            .sum();
        self.channels - used
    }
}

/// Structural class of a transition by the change `tau = b - a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionCase {
    /// Exactly one order gains one connection, nothing else changes.
    SingleAdmission,
    /// Same occupancy; `edge` when the state fills every channel.
    Unchanged { edge: bool },
    /// Some order loses connections (completions and/or preemptions).
    Terminations,
    /// No single slot can produce this change.
    Unreachable,
}

/// Everything about a `(current, next)` pair that the transition terms use.
#[derive(Debug, Clone)]
pub struct TransitionContext {
    pub current: Vec<u32>,
    pub next: Vec<u32>,
    /// Channels left free in the next state.
    pub free_channels: u32,
    pub total_active: u32,
    /// `min(free_channels, K)`.
    pub alpha: u32,
    /// `next - current`.
    pub delta: Vec<i64>,
    /// Termination vectors compatible with reaching `next`, lexicographic.
    pub termination_combinations: Vec<Vec<u32>>,
    pub case: TransitionCase,
}

/// One way of reaching the target: which connections ended, whether a
/// connection was admitted, and which connections the PUs then removed.
#[derive(Debug, Clone, PartialEq)]
struct Path {
    theta: Vec<u32>,
    admitted: bool,
    layout: ConnectionLayout,
    preempted: Vec<u32>,
}

impl TransitionContext {
    pub fn new(model: &AnalysisModel, current: &MarkovState, next: &MarkovState) -> Self {
        let k = model.max_bond;
        let free_channels = model.free_channels(&next.bonds);
        let delta: Vec<i64> = next
            .bonds
            .iter()
            .zip(&current.bonds)
            .map(|(&b, &a)| b as i64 - a as i64)
            .collect();
        let case = classify(&delta, free_channels);
        let termination_combinations = if case == TransitionCase::Unreachable {
            Vec::new()
        } else {
            lexicographic_boxes(&current.bonds)
                .into_iter()
                .filter(|theta| !paths_for(model, &current.bonds, theta, &next.bonds).is_empty())
                .collect()
        };
        Self {
            current: current.bonds.clone(),
            next: next.bonds.clone(),
            free_channels,
            total_active: current.connections(),
            alpha: free_channels.min(k),
            delta,
            termination_combinations,
            case,
        }
    }
}

fn classify(delta: &[i64], free_next: u32) -> TransitionCase {
    if delta.iter().any(|&d| d < 0) {
        return TransitionCase::Terminations;
    }
    let gains: i64 = delta.iter().sum();
    match gains {
        0 => TransitionCase::Unchanged {
            edge: free_next == 0,
        },
        1 => TransitionCase::SingleAdmission,
        _ => TransitionCase::Unreachable,
    }
}

/// All vectors `v` with `0 <= v_j <= upper_j`, lexicographic in `v_1..v_K`.
fn lexicographic_boxes(upper: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(upper.len())];
    for &u in upper {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=u).map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

fn paths_for(model: &AnalysisModel, current: &[u32], theta: &[u32], next: &[u32]) -> Vec<Path> {
    let remaining: Vec<u32> = current.iter().zip(theta).map(|(a, t)| a - t).collect();
    let free_after = model.free_channels(&remaining);
    let mut layouts = vec![(false, remaining.clone())];
    if free_after > 0 {
        let order = free_after.min(model.max_bond);
        let mut grown = remaining;
        grown[order as usize - 1] += 1;
        layouts.push((true, grown));
    }
    layouts
        .into_iter()
        .filter_map(|(admitted, blocks)| {
            let preempted: Option<Vec<u32>> = blocks
                .iter()
                .zip(next)
                .map(|(&l, &b)| l.checked_sub(b))
                .collect();
            let preempted = preempted?;
            let layout = ConnectionLayout::on_channels(&blocks, model.channels)?;
            Some(Path {
                theta: theta.to_vec(),
                admitted,
                layout,
                preempted,
            })
        })
        .collect()
}

impl Path {
    /// Termination and arrangement factor of this path.
    fn event_weight(&self, model: &AnalysisModel, current: &[u32]) -> f64 {
        let active: u32 = current.iter().sum();
        let mut w: f64 = current
            .iter()
            .zip(&self.theta)
            .zip(&model.frame_end)
            .map(|((&a, &t), &q)| termination_prob(a, t, q))
            .product();
        let remaining: Vec<u32> = current.iter().zip(&self.theta).map(|(a, t)| a - t).collect();
        let can_admit = model.free_channels(&remaining) > 0;
        let admit = arrangement_prob(model.users, model.access_prob, active, 1);
        w *= match (self.admitted, can_admit) {
            (true, _) => admit,
            (false, true) => 1.0 - admit,
            // contention outcome is irrelevant when nothing is free
            (false, false) => 1.0,
        };
        w
    }
}

/// Probability of moving from `from` to `to` in one slot.
pub fn transition_prob(model: &AnalysisModel, from: &MarkovState, to: &MarkovState) -> f64 {
    let b = transition_breakdown(model, from, to);
    b.idle_spectrum + b.busy_spectrum
}

/// [`transition_prob`] split by whether the next sensing finds every channel
/// idle (`z = 0`) or at least one busy (`z > 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionBreakdown {
    pub case: TransitionCase,
    pub idle_spectrum: f64,
    pub busy_spectrum: f64,
}

pub fn transition_breakdown(
    model: &AnalysisModel,
    from: &MarkovState,
    to: &MarkovState,
) -> TransitionBreakdown {
    let ctx = TransitionContext::new(model, from, to);
    let q_c = model.observed_busy;
    let mut idle = 0.0;
    let mut busy = 0.0;
    for theta in &ctx.termination_combinations {
        for path in paths_for(model, &from.bonds, theta, &to.bonds) {
            let w = path.event_weight(model, &from.bonds);
            if w == 0.0 {
                continue;
            }
            let none_busy = preemption_prob(&path.layout, &path.preempted, 0, q_c);
            let all = preemption_prob_marginal(&path.layout, &path.preempted, q_c);
            idle += w * none_busy;
            busy += w * (all - none_busy);
        }
    }
    TransitionBreakdown {
        case: ctx.case,
        idle_spectrum: idle,
        busy_spectrum: busy,
    }
}

/// Same quantity as [`transition_prob`], conditioned on exactly `busy`
/// channels being observed busy at the next sensing and weighted by its
/// probability; summing over `busy = 0..=M` gives [`transition_prob`].
pub fn transition_prob_with_busy(
    model: &AnalysisModel,
    from: &MarkovState,
    to: &MarkovState,
    busy: u32,
) -> f64 {
    let ctx = TransitionContext::new(model, from, to);
    let mut total = 0.0;
    for theta in &ctx.termination_combinations {
        for path in paths_for(model, &from.bonds, theta, &to.bonds) {
            total += path.event_weight(model, &from.bonds)
                * preemption_prob(&path.layout, &path.preempted, busy, model.observed_busy);
        }
    }
    total
}

/// Dense transition matrix over `space`, rows built in parallel.
pub fn build_matrix(model: &AnalysisModel, space: &StateSpace) -> Result<TransitionMatrix> {
    let y = space.len();
    if y > DENSE_STATE_LIMIT {
        return Err(Error::Capacity {
            states: y,
            cap: DENSE_STATE_LIMIT,
        });
    }
    let rows: Vec<Vec<f64>> = space
        .states()
        .par_iter()
        .map(|from| {
            space
                .states()
                .iter()
                .map(|to| transition_prob(model, from, to))
                .collect()
        })
        .collect();
    Ok(TransitionMatrix::from_rows(rows))
}

/// Enumerate the states of `cfg` and build its transition matrix.
pub fn build_transition_matrix(cfg: &ScenarioConfig) -> Result<(StateSpace, TransitionMatrix)> {
    let model = AnalysisModel::new(cfg)?;
    let space = model.state_space()?;
    let matrix = build_matrix(&model, &space)?;
    Ok((space, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::primitives::binomial;
    use approx::assert_abs_diff_eq;

    fn cfg(m: u32, k: u32, n: u32, d: f64, qp: f64) -> ScenarioConfig {
        ScenarioConfig {
            num_data_channels: m,
            max_bond: k,
            num_users: n,
            frame_bits: d,
            pu_activity: qp,
            ..ScenarioConfig::small()
        }
    }

    #[test]
    fn empty_to_first_bond_without_pus() {
        let mut c = cfg(5, 3, 12, 1000.0, 0.0);
        c.false_alarm_prob = 0.0;
        let model = AnalysisModel::new(&c).unwrap();
        let from = MarkovState::new(vec![0, 0, 0]);
        let to = MarkovState::new(vec![0, 0, 1]);
        let s1 = arrangement_prob(12, c.access_prob(), 0, 1);
        assert_abs_diff_eq!(transition_prob(&model, &from, &to), s1, epsilon = 1e-15);
        let ctx = TransitionContext::new(&model, &from, &to);
        assert_eq!(ctx.case, TransitionCase::SingleAdmission);
        assert_eq!(ctx.termination_combinations, vec![vec![0, 0, 0]]);
    }

    #[test]
    fn single_admission_matches_closed_form() {
        let c = cfg(4, 2, 12, 1000.0, 0.2);
        let model = AnalysisModel::new(&c).unwrap();
        let from = MarkovState::new(vec![1, 0]);
        let to = MarkovState::new(vec![1, 1]);
        let q_c = model.observed_busy;
        let want = termination_prob(1, 0, model.frame_end[0])
            * arrangement_prob(12, c.access_prob(), 1, 1)
            * (1.0 - q_c)
            * (1.0 - q_c).powi(2);
        assert_abs_diff_eq!(transition_prob(&model, &from, &to), want, epsilon = 1e-15);
    }

    #[test]
    fn rows_are_stochastic() {
        for (m, k, n) in [(4, 2, 12), (5, 3, 6), (6, 3, 12), (3, 1, 7)] {
            let c = cfg(m, k, n, 1000.0, 0.3);
            let (_, p) = build_transition_matrix(&c).unwrap();
            assert!(p.max_row_defect() < 1e-12, "M={m} K={k} N={n}");
            assert!(p.min_entry() >= 0.0);
        }
    }

    #[test]
    fn breakdown_by_busy_count_sums_to_total() {
        let c = cfg(4, 2, 12, 1000.0, 0.3);
        let model = AnalysisModel::new(&c).unwrap();
        let space = model.state_space().unwrap();
        for from in space.states() {
            for to in space.states() {
                let total = transition_prob(&model, from, to);
                let split: f64 = (0..=4).map(|z| transition_prob_with_busy(&model, from, to, z)).sum();
                assert_abs_diff_eq!(total, split, epsilon = 1e-15);
                let b = transition_breakdown(&model, from, to);
                assert_abs_diff_eq!(
                    b.idle_spectrum,
                    transition_prob_with_busy(&model, from, to, 0),
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn two_admissions_are_unreachable() {
        let c = cfg(6, 2, 12, 1000.0, 0.1);
        let model = AnalysisModel::new(&c).unwrap();
        let from = MarkovState::new(vec![0, 0]);
        let to = MarkovState::new(vec![0, 2]);
        let ctx = TransitionContext::new(&model, &from, &to);
        assert_eq!(ctx.case, TransitionCase::Unreachable);
        assert_eq!(transition_prob(&model, &from, &to), 0.0);
    }

    #[test]
    fn termination_rows_follow_lexicographic_order() {
        let c = cfg(6, 2, 12, 1000.0, 0.1);
        let model = AnalysisModel::new(&c).unwrap();
        let from = MarkovState::new(vec![2, 1]);
        let to = MarkovState::new(vec![0, 0]);
        let ctx = TransitionContext::new(&model, &from, &to);
        assert_eq!(ctx.case, TransitionCase::Terminations);
        let rows = &ctx.termination_combinations;
        assert!(rows.windows(2).all(|w| w[0] < w[1]));
        assert!(rows.iter().all(|t| t[0] <= 2 && t[1] <= 1));
        // every termination vector can end in the empty state through preemption
        assert_eq!(rows.len(), 6);
    }

    /// The non-bonded multichannel chain written directly over the number of
    /// connections.
    fn non_bonded_chain(c: &ScenarioConfig) -> Vec<Vec<f64>> {
        let m = c.num_data_channels;
        let top = m.min(c.num_users / 2);
        let q = frame_end_prob(c, 1).unwrap();
        let q_c = observed_busy_prob(c, c.pu_activity);
        let mut rows = vec![vec![0.0; top as usize + 1]; top as usize + 1];
        for x in 0..=top {
            let s1 = arrangement_prob(c.num_users, c.access_prob(), x, 1);
            for done in 0..=x {
                let t = binomial(x, done) * q.powi(done as i32) * (1.0 - q).powi((x - done) as i32);
                let left = x - done;
                let outcomes: Vec<(f64, u32)> = if left < m {
                    vec![(s1, left + 1), (1.0 - s1, left)]
                } else {
                    vec![(1.0, left)]
                };
                for (pa, live) in outcomes.into_iter().filter(|o| o.0 > 0.0) {
                    for hit in 0..=live {
                        let pr = binomial(live, hit)
                            * q_c.powi(hit as i32)
                            * (1.0 - q_c).powi((live - hit) as i32);
                        rows[x as usize][(live - hit) as usize] += t * pa * pr;
                    }
                }
            }
        }
        rows
    }

    #[test]
    fn single_order_reduces_to_non_bonded_chain() {
        for (m, n, qp) in [(4, 12, 0.1), (3, 4, 0.5), (6, 8, 0.0), (5, 40, 0.3)] {
            let c = cfg(m, 1, n, 2000.0, qp);
            let (_, p) = build_transition_matrix(&c).unwrap();
            let want = TransitionMatrix::from_rows(non_bonded_chain(&c));
            assert!(p.max_abs_diff(&want) < 1e-14, "M={m} N={n} qp={qp}");
        }
    }

    #[test]
    fn matrices_across_activity_differ_only_through_observed_busy() {
        let a = cfg(4, 2, 12, 40_000.0, 0.1);
        let mut b = cfg(4, 2, 12, 40_000.0, 0.0);
        // same observed-busy probability through the false-alarm rate
        b.false_alarm_prob = observed_busy_prob(&a, a.pu_activity);
        let (_, pa) = build_transition_matrix(&a).unwrap();
        let (_, pb) = build_transition_matrix(&b).unwrap();
        assert!(pa.max_abs_diff(&pb) < 1e-15);
    }

    #[test]
    fn without_pus_nothing_is_preempted() {
        let mut c = cfg(4, 2, 12, 1000.0, 0.0);
        c.false_alarm_prob = 0.0;
        let model = AnalysisModel::new(&c).unwrap();
        let space = model.state_space().unwrap();
        let p = build_matrix(&model, &space).unwrap();
        // (0,2) can only lose connections through completions
        let from = space.index_of(&MarkovState::new(vec![0, 2])).unwrap();
        let to = space.index_of(&MarkovState::new(vec![0, 0])).unwrap();
        let q2 = model.frame_end[1];
        let stay_empty = 1.0 - arrangement_prob(12, c.access_prob(), 2, 1);
        assert_abs_diff_eq!(p.get(from, to), q2 * q2 * stay_empty, epsilon = 1e-15);
        for from in space.states() {
            for to in space.states() {
                assert_eq!(transition_breakdown(&model, from, to).busy_spectrum, 0.0);
            }
        }
    }

    #[test]
    fn unsupported_variants_are_rejected() {
        let mut c = ScenarioConfig::small();
        c.bonding_policy = BondingPolicy::KOnly;
        assert!(matches!(AnalysisModel::new(&c), Err(Error::Unsupported(_))));
        let mut c = ScenarioConfig::small();
        c.pu_traffic.imbalance = 1.0;
        assert!(matches!(AnalysisModel::new(&c), Err(Error::Unsupported(_))));
    }
}
