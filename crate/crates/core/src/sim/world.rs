use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, LogNormal};

use crate::analysis::arrangement_prob;
use crate::error::Result;
use crate::model::{
    channel_activity, frame_end_prob, lognormal_run_params, run_means, BondingPolicy, Disruption,
    Priority, PuTraffic, RunDistribution, ScenarioConfig, Selection,
};

/// An SU sender/receiver pair holding a virtual channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub id: u64,
    /// Physical channels of the bond, ascending.
    pub channels: Vec<usize>,
    pub order: u32,
    pub high_priority: bool,
    /// First slot the connection transmitted in.
    pub started: u64,
}

/// A halted connection waiting for channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Buffered {
    pub id: u64,
    pub started: u64,
    pub wait: u64,
}

/// PU truth state of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PuChannel {
    pub busy: bool,
    /// Slots left in the current on/off run; unused for i.i.d. activity.
    pub remaining: u64,
}

#[derive(Debug, Clone)]
enum RunLaw {
    Endless,
    Geometric(Geometric),
    LogNormal(LogNormal<f64>),
}

impl RunLaw {
    fn new(kind: RunDistribution, mean: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Ok(RunLaw::Endless);
        }
        Ok(match kind {
            RunDistribution::Geometric => RunLaw::Geometric(
                Geometric::new(1.0 / mean).expect("run mean is at least one slot"),
            ),
            RunDistribution::LogNormal => {
                let (mu, sigma) = lognormal_run_params(mean)?;
                RunLaw::LogNormal(LogNormal::new(mu, sigma).expect("finite log-normal parameters"))
            }
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            RunLaw::Endless => u64::MAX,
            RunLaw::Geometric(g) => g.sample(rng).saturating_add(1),
            RunLaw::LogNormal(d) => sample_rounded(d, rng),
        }
    }
}

/// Continuous log-normal draw rounded to the nearest integer, at least 1.
pub fn sample_rounded(d: &LogNormal<f64>, rng: &mut impl Rng) -> u64 {
    let x = d.sample(rng).round();
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        (x as u64).max(1)
    }
}

#[derive(Debug, Clone)]
struct Segment {
    activity: Vec<f64>,
    /// `(off, on)` run laws per channel, on/off traffic only.
    runs: Vec<(RunLaw, RunLaw)>,
    bond: u32,
    k_only: bool,
}

#[derive(Debug, Clone)]
struct Params {
    users: u32,
    channels: usize,
    max_bond: u32,
    access: f64,
    frame_end: Vec<f64>,
    rate_per_order: Vec<f64>,
    detect: f64,
    false_alarm: f64,
    disruption: Disruption,
    selection: Selection,
    priority: Option<Priority>,
    on_off: bool,
    segments: Vec<Segment>,
}

impl Params {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let max_bond = cfg.max_bond;
        let frame_end = (1..=max_bond)
            .map(|k| frame_end_prob(cfg, k))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let per_bit = cfg.channel_rate_bps * cfg.data_fraction();
        let rate_per_order = (1..=max_bond)
            .map(|k| per_bit * k as f64 * cfg.beta(k))
            .collect();
        let plan: Vec<(f64, u32, bool)> = match &cfg.bonding_policy {
            BondingPolicy::Flexible => vec![(cfg.pu_activity, max_bond, false)],
            BondingPolicy::KOnly => vec![(cfg.pu_activity, max_bond, true)],
            BondingPolicy::Adaptive(s) => s
                .segments
                .iter()
                .map(|seg| (seg.pu_activity, seg.bond, s.k_only))
                .collect(),
        };
        let segments = plan
            .into_iter()
            .map(|(mean, bond, k_only)| {
                let activity =
                    channel_activity(mean, cfg.num_data_channels, cfg.pu_traffic.imbalance)?;
                let runs = match cfg.pu_traffic.model {
                    PuTraffic::Iid => Vec::new(),
                    PuTraffic::OnOff { off, on } => activity
                        .iter()
                        .map(|&q| {
                            let (on_mean, off_mean) = run_means(q);
                            Ok((RunLaw::new(off, off_mean)?, RunLaw::new(on, on_mean)?))
                        })
                        .collect::<Result<Vec<_>>>()?,
                };
                Ok(Segment {
                    activity,
                    runs,
                    bond,
                    k_only,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            users: cfg.num_users,
            channels: cfg.num_data_channels as usize,
            max_bond,
            access: cfg.access_prob(),
            frame_end,
            rate_per_order,
            detect: cfg.detect_prob,
            false_alarm: cfg.false_alarm_prob,
            disruption: cfg.disruption,
            selection: cfg.selection,
            priority: cfg.priority,
            on_off: matches!(cfg.pu_traffic.model, PuTraffic::OnOff { .. }),
            segments,
        })
    }
}

/// Result of the control-channel phase of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    /// No single successful RTS/CTS exchange.
    NoRequest,
    /// Successful exchange but no channels could be assigned.
    Blocked { high_priority: bool },
    Admitted { order: u32, high_priority: bool },
    /// High-priority connection took the channels of a displaced one.
    Displaced { order: u32 },
}

impl fmt::Display for Admission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = |h: bool| if h { "h" } else { "r" };
        match *self {
            Admission::NoRequest => write!(f, "none"),
            Admission::Blocked { high_priority } => write!(f, "blocked:{}", tag(high_priority)),
            Admission::Admitted { order, high_priority } => {
                write!(f, "admit:{}{order}", tag(high_priority))
            }
            Admission::Displaced { order } => write!(f, "displace:{order}"),
        }
    }
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotEvents {
    pub slot: u64,
    pub pu_busy: Vec<bool>,
    pub sensed_busy: Vec<bool>,
    pub preempted: u32,
    pub switched: u32,
    /// Connections per bond order that transmitted in the slot.
    pub transmitting: Vec<u32>,
    /// Channels carrying SU data in the slot.
    pub in_use: Vec<bool>,
    pub throughput_bps: f64,
    /// `(order, lifetime in slots)` of every frame that ended.
    pub completions: Vec<(u32, u64)>,
    pub admission: Admission,
    /// Wait of a connection resumed from the buffer.
    pub resumed: Option<u64>,
}

impl SlotEvents {
    pub fn used_channels(&self) -> u32 {
        self.in_use.iter().filter(|&&u| u).count() as u32
    }

    /// Channels used by an SU while the PU was present.
    pub fn collided_channels(&self) -> u32 {
        self.in_use
            .iter()
            .zip(&self.pu_busy)
            .filter(|(&u, &b)| u && b)
            .count() as u32
    }

    pub fn pu_busy_channels(&self) -> u32 {
        self.pu_busy.iter().filter(|&&b| b).count() as u32
    }
}

fn bitmap(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl fmt::Display for SlotEvents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {}",
            self.slot,
            bitmap(&self.pu_busy),
            bitmap(&self.sensed_busy),
            self.preempted,
            self.completions.len(),
            self.admission
        )?;
        if self.switched > 0 {
            write!(f, " switched:{}", self.switched)?;
        }
        if let Some(w) = self.resumed {
            write!(f, " resume:{w}")?;
        }
        Ok(())
    }
}

/// Mutable state of one simulation run.
#[derive(Debug, Clone)]
pub struct SimWorld {
    pub slot_index: u64,
    pub channel_pu: Vec<PuChannel>,
    pub channel_observed: Vec<bool>,
    /// Active connections ordered by id.
    pub connections: Vec<Connection>,
    pub buffer: Vec<Buffered>,
    rng: ChaCha8Rng,
    params: Params,
    segment: usize,
    next_id: u64,
}

impl SimWorld {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        let params = Params::new(cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seg = &params.segments[0];
        let channel_pu = (0..params.channels)
            .map(|i| {
                let busy = rng.random::<f64>() < seg.activity[i];
                let remaining = if params.on_off {
                    let (off, on) = &seg.runs[i];
                    if busy { on } else { off }.sample(&mut rng)
                } else {
                    0
                };
                PuChannel { busy, remaining }
            })
            .collect();
        Ok(Self {
            slot_index: 0,
            channel_pu,
            channel_observed: vec![false; params.channels],
            connections: Vec::new(),
            buffer: Vec::new(),
            rng,
            segment: 0,
            next_id: 0,
            params,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.params.segments.len()
    }

    /// Switch to interval `index` of an adaptive schedule.
    pub fn set_segment(&mut self, index: usize) {
        self.segment = index.min(self.params.segments.len() - 1);
    }

    pub fn max_bond(&self) -> u32 {
        self.params.max_bond
    }

    /// Channels occupied by some connection.
    pub fn occupancy(&self) -> Vec<bool> {
        let mut used = vec![false; self.params.channels];
        for c in &self.connections {
            for &ch in &c.channels {
                used[ch] = true;
            }
        }
        used
    }

    /// Bonds are disjoint, within range, of the declared order; the buffer
    /// respects its capacity.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut owner = vec![None; self.params.channels];
        for c in &self.connections {
            if c.channels.len() != c.order as usize || c.order == 0 || c.order > self.params.max_bond {
                return Err(format!("connection {} has a malformed bond", c.id));
            }
            for &ch in &c.channels {
                match owner.get_mut(ch) {
                    None => return Err(format!("channel {ch} out of range")),
                    Some(Some(o)) => return Err(format!("channel {ch} shared by {o} and {}", c.id)),
                    Some(slot) => *slot = Some(c.id),
                }
            }
        }
        let cap = self.params.priority.map_or(0, |p| p.buffer_size) as usize;
        if self.buffer.len() > cap {
            return Err(format!("buffer holds {} > {cap}", self.buffer.len()));
        }
        if 2 * (self.connections.len() + self.buffer.len()) > self.params.users as usize {
            return Err("more connections than user pairs".into());
        }
        Ok(())
    }

    /// Advance every channel's PU process by one slot.
    pub fn pu_advance(&mut self) {
        let seg = &self.params.segments[self.segment];
        for (i, ch) in self.channel_pu.iter_mut().enumerate() {
            if self.params.on_off {
                if ch.remaining > 1 {
                    if ch.remaining != u64::MAX {
                        ch.remaining -= 1;
                    }
                } else {
                    ch.busy = !ch.busy;
                    let (off, on) = &seg.runs[i];
                    ch.remaining = if ch.busy { on } else { off }.sample(&mut self.rng);
                }
            } else {
                ch.busy = self.rng.random::<f64>() < seg.activity[i];
            }
        }
    }

    /// Draw the SU network's observation of every channel.
    pub fn sense(&mut self) {
        for (obs, ch) in self.channel_observed.iter_mut().zip(&self.channel_pu) {
            let p = if ch.busy {
                self.params.detect
            } else {
                self.params.false_alarm
            };
            *obs = self.rng.random::<f64>() < p;
        }
    }

    /// Resolve connections with an observed-busy channel. Returns the number
    /// dropped and the number relocated.
    pub fn disrupt(&mut self) -> (u32, u32) {
        let (hit, mut kept): (Vec<Connection>, Vec<Connection>) = std::mem::take(&mut self.connections)
            .into_iter()
            .partition(|c| c.channels.iter().any(|&ch| self.channel_observed[ch]));
        let mut dropped = 0;
        let mut switched = 0;
        match self.params.disruption {
            Disruption::Drop => dropped = hit.len() as u32,
            Disruption::Switch { .. } => {
                let mut used = vec![false; self.params.channels];
                for c in &kept {
                    for &ch in &c.channels {
                        used[ch] = true;
                    }
                }
                for mut c in hit {
                    let candidates: Vec<usize> = (0..self.params.channels)
                        .filter(|&ch| !used[ch] && !self.channel_observed[ch])
                        .collect();
                    if candidates.len() < c.order as usize {
                        dropped += 1;
                        continue;
                    }
                    let chosen = self.pick(candidates, Vec::new(), c.order as usize);
                    for &ch in &chosen {
                        used[ch] = true;
                    }
                    c.channels = chosen;
                    kept.push(c);
                    switched += 1;
                }
                kept.sort_by_key(|c| c.id);
            }
        }
        self.connections = kept;
        (dropped, switched)
    }

    /// Choose `count` channels, exhausting `preferred` before `fallback`,
    /// each group ordered by the selection strategy. Output is ascending.
    fn pick(&mut self, mut preferred: Vec<usize>, mut fallback: Vec<usize>, count: usize) -> Vec<usize> {
        match self.params.selection {
            Selection::Random => {
                preferred.shuffle(&mut self.rng);
                fallback.shuffle(&mut self.rng);
            }
            Selection::LeastUsed => {
                let act = &self.params.segments[self.segment].activity;
                let key = |a: &usize, b: &usize| act[*a].total_cmp(&act[*b]).then(a.cmp(b));
                preferred.sort_by(key);
                fallback.sort_by(key);
            }
        }
        let mut out: Vec<usize> = preferred.into_iter().chain(fallback).take(count).collect();
        out.sort_unstable();
        out
    }

    fn free_channels(&self) -> (Vec<usize>, Vec<usize>) {
        let used = self.occupancy();
        (0..self.params.channels)
            .filter(|&ch| !used[ch])
            .partition(|&ch| !self.channel_observed[ch])
    }

    /// End frames of transmitting connections; returns `(order, lifetime)`.
    pub fn complete_frames(&mut self) -> Vec<(u32, u64)> {
        let slot = self.slot_index;
        let mut done = Vec::new();
        let mut kept = Vec::with_capacity(self.connections.len());
        for c in std::mem::take(&mut self.connections) {
            if self.rng.random::<f64>() < self.params.frame_end[c.order as usize - 1] {
                done.push((c.order, slot + 1 - c.started));
            } else {
                kept.push(c);
            }
        }
        self.connections = kept;
        done
    }

    fn new_connection(&mut self, channels: Vec<usize>, high_priority: bool) -> Connection {
        let id = self.next_id;
        self.next_id += 1;
        Connection {
            id,
            order: channels.len() as u32,
            channels,
            high_priority,
            started: self.slot_index + 1,
        }
    }

    /// Bond order for a new connection with `free` unused channels, or
    /// `None` when the policy blocks it.
    fn bond_order(&self, free: usize) -> Option<u32> {
        let seg = &self.params.segments[self.segment];
        let free = free as u32;
        if seg.k_only {
            (free >= seg.bond).then_some(seg.bond)
        } else {
            (free > 0).then(|| free.min(seg.bond))
        }
    }

    fn place(&mut self, order: u32) -> Vec<usize> {
        let (idle, busy) = self.free_channels();
        self.pick(idle, busy, order as usize)
    }

    fn push_connection(&mut self, c: Connection) {
        let pos = self.connections.partition_point(|x| x.id < c.id);
        self.connections.insert(pos, c);
    }

    /// Control-channel contention and channel assignment, including buffer
    /// displacement and resumption. Returns the admission outcome and the
    /// wait of a resumed connection.
    ///
    /// `active` is the number of pairs that were busy during the slot's
    /// control phase, i.e. before this slot's frame completions.
    pub fn admit(&mut self, active: u32) -> (Admission, Option<u64>) {
        let success =
            self.rng.random::<f64>() < arrangement_prob(self.params.users, self.params.access, active, 1);
        let mut outcome = Admission::NoRequest;
        let Some(priority) = self.params.priority else {
            if success {
                outcome = self.admit_new(false);
            }
            return (outcome, None);
        };
        let mut regular_arrival = false;
        if success {
            let high = self.rng.random::<f64>() < priority.high_prob;
            if high {
                outcome = self.admit_high(priority.buffer_size as usize);
            } else {
                regular_arrival = true;
            }
        }
        let resumed = self.resume();
        if regular_arrival {
            outcome = self.admit_new(false);
        }
        (outcome, resumed)
    }

    fn admit_new(&mut self, high_priority: bool) -> Admission {
        let free = self.params.channels - self.occupancy().iter().filter(|&&u| u).count();
        match self.bond_order(free) {
            Some(order) => {
                let channels = self.place(order);
                let c = self.new_connection(channels, high_priority);
                self.push_connection(c);
                Admission::Admitted {
                    order,
                    high_priority,
                }
            }
            None => Admission::Blocked { high_priority },
        }
    }

    fn admit_high(&mut self, capacity: usize) -> Admission {
        let free = self.params.channels - self.occupancy().iter().filter(|&&u| u).count();
        if free > 0 {
            return self.admit_new(true);
        }
        let regular: Vec<usize> = self
            .connections
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.high_priority)
            .map(|(i, _)| i)
            .collect();
        if self.buffer.len() >= capacity || regular.is_empty() {
            return Admission::Blocked { high_priority: true };
        }
        let &victim = regular.choose(&mut self.rng).expect("non-empty");
        let halted = self.connections.remove(victim);
        self.buffer.push(Buffered {
            id: halted.id,
            started: halted.started,
            wait: 0,
        });
        let order = halted.order;
        let c = self.new_connection(halted.channels, true);
        self.push_connection(c);
        Admission::Displaced { order }
    }

    fn resume(&mut self) -> Option<u64> {
        if self.buffer.is_empty() {
            return None;
        }
        let free = self.params.channels - self.occupancy().iter().filter(|&&u| u).count();
        let seg = &self.params.segments[self.segment];
        if free == 0 || (seg.k_only && (free as u32) < seg.bond) {
            return None;
        }
        let order = (free as u32).min(seg.bond);
        let pick = self.rng.random_range(0..self.buffer.len());
        let b = self.buffer.remove(pick);
        let channels = self.place(order);
        self.push_connection(Connection {
            id: b.id,
            order,
            channels,
            high_priority: false,
            started: b.started,
        });
        Some(b.wait)
    }

    /// Run one slot: PU evolution, sensing, disruption, accounting of the
    /// transmitting connections, frame completions, then contention and
    /// admission for the next slot.
    pub fn step_slot(&mut self) -> SlotEvents {
        self.pu_advance();
        self.sense();
        let (preempted, switched) = self.disrupt();

        let mut transmitting = vec![0u32; self.params.max_bond as usize];
        let mut throughput_bps = 0.0;
        for c in &self.connections {
            transmitting[c.order as usize - 1] += 1;
            throughput_bps += self.params.rate_per_order[c.order as usize - 1];
        }
        let in_use = self.occupancy();
        for b in &mut self.buffer {
            b.wait += 1;
        }

        let active = (self.connections.len() + self.buffer.len()) as u32;
        let completions = self.complete_frames();
        let (admission, resumed) = self.admit(active);
        let events = SlotEvents {
            slot: self.slot_index,
            pu_busy: self.channel_pu.iter().map(|c| c.busy).collect(),
            sensed_busy: self.channel_observed.clone(),
            preempted,
            switched,
            transmitting,
            in_use,
            throughput_bps,
            completions,
            admission,
            resumed,
        };
        self.slot_index += 1;
        events
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AccessProb, PuTrafficSpec};

    fn quiet(m: u32, k: u32) -> ScenarioConfig {
        ScenarioConfig {
            num_data_channels: m,
            max_bond: k,
            pu_activity: 0.0,
            false_alarm_prob: 0.0,
            ..ScenarioConfig::small()
        }
    }

    fn occupy(world: &mut SimWorld, bonds: &[&[usize]]) {
        for (i, chans) in bonds.iter().enumerate() {
            world.connections.push(Connection {
                id: i as u64,
                channels: chans.to_vec(),
                order: chans.len() as u32,
                high_priority: false,
                started: 0,
            });
        }
        world.next_id = bonds.len() as u64;
    }

    #[test]
    fn flexible_bonds_min_of_free_and_k() {
        let mut w = SimWorld::new(&quiet(4, 3), 1).unwrap();
        assert_eq!(w.admit_new(false), Admission::Admitted { order: 3, high_priority: false });
        assert_eq!(w.admit_new(false), Admission::Admitted { order: 1, high_priority: false });
        assert_eq!(w.admit_new(false), Admission::Blocked { high_priority: false });
        w.check_invariants().unwrap();
    }

    #[test]
    fn k_only_blocks_short_bonds() {
        let cfg = ScenarioConfig {
            bonding_policy: BondingPolicy::KOnly,
            ..quiet(4, 3)
        };
        let mut w = SimWorld::new(&cfg, 1).unwrap();
        assert_eq!(w.admit_new(false), Admission::Admitted { order: 3, high_priority: false });
        assert_eq!(w.admit_new(false), Admission::Blocked { high_priority: false });
        assert_eq!(w.connections.len(), 1);
    }

    #[test]
    fn drop_removes_every_hit_connection() {
        let mut w = SimWorld::new(&quiet(4, 2), 3).unwrap();
        occupy(&mut w, &[&[0, 1], &[2], &[3]]);
        w.channel_observed = vec![false, true, false, true];
        assert_eq!(w.disrupt(), (2, 0));
        assert_eq!(w.connections.len(), 1);
        assert_eq!(w.connections[0].channels, vec![2]);
    }

    #[test]
    fn misdetection_keeps_transmitting_and_collides() {
        let cfg = ScenarioConfig {
            pu_activity: 1.0,
            detect_prob: 0.0,
            false_alarm_prob: 0.0,
            ..quiet(2, 1)
        };
        let mut w = SimWorld::new(&cfg, 5).unwrap();
        occupy(&mut w, &[&[0]]);
        let ev = w.step_slot();
        assert_eq!(ev.preempted, 0);
        assert_eq!(ev.collided_channels(), 1);
    }

    #[test]
    fn switch_relocates_when_enough_idle_channels() {
        let cfg = ScenarioConfig {
            disruption: Disruption::Switch { switch_seconds: 1e-4 },
            ..quiet(5, 2)
        };
        let mut w = SimWorld::new(&cfg, 9).unwrap();
        occupy(&mut w, &[&[0, 1], &[2]]);
        w.channel_observed = vec![true, false, false, false, false];
        assert_eq!(w.disrupt(), (0, 1));
        let moved = &w.connections[0];
        assert_eq!(moved.order, 2);
        assert!(!moved.channels.contains(&0) && !moved.channels.contains(&2));
        w.check_invariants().unwrap();
    }

    #[test]
    fn switch_drops_without_a_full_bond() {
        let cfg = ScenarioConfig {
            disruption: Disruption::Switch { switch_seconds: 1e-4 },
            ..quiet(4, 2)
        };
        let mut w = SimWorld::new(&cfg, 9).unwrap();
        occupy(&mut w, &[&[0, 1], &[2]]);
        w.channel_observed = vec![true, true, false, false];
        assert_eq!(w.disrupt(), (1, 0));
        assert_eq!(w.connections.len(), 1);
    }

    #[test]
    fn least_used_prefers_quiet_channels() {
        let cfg = ScenarioConfig {
            selection: Selection::LeastUsed,
            pu_activity: 0.2,
            pu_traffic: PuTrafficSpec {
                model: PuTraffic::Iid,
                imbalance: 2.0,
            },
            ..quiet(4, 2)
        };
        let mut w = SimWorld::new(&cfg, 2).unwrap();
        w.channel_observed = vec![false; 4];
        assert_eq!(w.place(2), vec![0, 1]);
        w.channel_observed = vec![true, false, false, false];
        assert_eq!(w.place(2), vec![1, 2]);
    }

    #[test]
    fn high_priority_displaces_into_buffer() {
        let cfg = ScenarioConfig {
            priority: Some(Priority {
                high_prob: 1.0,
                buffer_size: 1,
            }),
            ..quiet(2, 1)
        };
        let mut w = SimWorld::new(&cfg, 4).unwrap();
        occupy(&mut w, &[&[0], &[1]]);
        assert_eq!(w.admit_high(1), Admission::Displaced { order: 1 });
        assert_eq!(w.buffer.len(), 1);
        assert_eq!(w.connections.iter().filter(|c| c.high_priority).count(), 1);
        // buffer full
        assert_eq!(w.admit_high(1), Admission::Blocked { high_priority: true });
        w.check_invariants().unwrap();
    }

    #[test]
    fn high_priority_connections_are_never_displaced() {
        let cfg = ScenarioConfig {
            priority: Some(Priority {
                high_prob: 1.0,
                buffer_size: 1,
            }),
            ..quiet(1, 1)
        };
        let mut w = SimWorld::new(&cfg, 4).unwrap();
        occupy(&mut w, &[&[0]]);
        w.connections[0].high_priority = true;
        assert_eq!(w.admit_high(1), Admission::Blocked { high_priority: true });
    }

    #[test]
    fn resume_takes_one_buffered_connection() {
        let cfg = ScenarioConfig {
            priority: Some(Priority {
                high_prob: 0.5,
                buffer_size: 2,
            }),
            ..quiet(4, 2)
        };
        let mut w = SimWorld::new(&cfg, 4).unwrap();
        w.buffer = vec![
            Buffered { id: 10, started: 0, wait: 3 },
            Buffered { id: 11, started: 0, wait: 5 },
        ];
        let wait = w.resume().unwrap();
        assert!(wait == 3 || wait == 5);
        assert_eq!(w.buffer.len(), 1);
        assert_eq!(w.connections[0].order, 2);
    }

    #[test]
    fn no_contention_without_two_idle_users() {
        let cfg = ScenarioConfig {
            num_users: 3,
            access: AccessProb::Fixed(0.9),
            ..quiet(4, 1)
        };
        let mut w = SimWorld::new(&cfg, 8).unwrap();
        occupy(&mut w, &[&[0]]);
        for _ in 0..100 {
            assert_eq!(w.admit(1).0, Admission::NoRequest);
        }
    }

    #[test]
    fn trace_line_lists_slot_bitmaps_and_outcome() {
        let ev = SlotEvents {
            slot: 7,
            pu_busy: vec![true, false],
            sensed_busy: vec![true, true],
            preempted: 1,
            switched: 0,
            transmitting: vec![0],
            in_use: vec![false, false],
            throughput_bps: 0.0,
            completions: vec![],
            admission: Admission::Admitted { order: 1, high_priority: false },
            resumed: None,
        };
        assert_eq!(ev.to_string(), "7 10 11 1 0 admit:r1");
    }
}
