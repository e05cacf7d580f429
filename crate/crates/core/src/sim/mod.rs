//! Slot-level Monte Carlo simulator.
//!
//! A run is a deterministic function of the scenario, the slot budget and a
//! `u64` seed. After a warm-up, the measured slots are cut into batches and
//! every reported mean carries a 95% confidence half-width from the batch
//! means.

mod world;

use std::collections::BTreeMap;

pub use world::{sample_rounded, Admission, Buffered, Connection, PuChannel, SimWorld, SlotEvents};

use crate::error::{ConfigError, Error, Result};
use crate::model::ScenarioConfig;

pub const DEFAULT_WARMUP: u64 = 1_000;
pub const DEFAULT_BATCHES: usize = 30;
pub const MIN_SLOTS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub slots: u64,
    pub seed: u64,
    pub warmup: u64,
    pub batches: usize,
}

impl RunOptions {
    pub fn new(slots: u64, seed: u64) -> Self {
        Self {
            slots,
            seed,
            warmup: DEFAULT_WARMUP,
            batches: DEFAULT_BATCHES,
        }
    }
}

/// Mean and 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci: f64,
}

impl Estimate {
    /// Whether `value` lies within the confidence interval.
    pub fn covers(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.ci
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub throughput_bps: Estimate,
    pub utilization: Estimate,
    /// Fraction of channel-slots in which an SU transmitted while the PU
    /// was present.
    pub collision_prob: Estimate,
    /// Fraction of PU-occupied channel-slots an SU transmitted on.
    pub collision_given_pu: Estimate,
    /// Fraction of SU channel-slots that overlapped a PU.
    pub collision_per_use: Estimate,
    /// Jain's index of `channel_usage`; `None` when no channel was used.
    pub fairness: Option<f64>,
    /// Displacements into the buffer per admitted connection.
    pub buffered_fraction: Estimate,
    /// `None` when no connection was resumed from the buffer.
    pub mean_wait_slots: Option<Estimate>,
    pub channel_usage: Vec<u64>,
    /// Slots spent in each occupancy vector.
    pub state_visits: BTreeMap<Vec<u32>, u64>,
    pub admissions: u64,
    pub displacements: u64,
    pub resumptions: u64,
    pub slots: u64,
    pub seed: u64,
}

/// Jain's index `(sum f)^2 / (M sum f^2)`.
pub fn fairness(usage: &[u64]) -> Result<f64> {
    if usage.is_empty() {
        return Err(Error::Undefined("fairness of zero channels".into()));
    }
    let total: f64 = usage.iter().map(|&f| f as f64).sum();
    let squares: f64 = usage.iter().map(|&f| (f as f64).powi(2)).sum();
    if squares == 0.0 {
        return Err(Error::Undefined("no channel was ever used".into()));
    }
    Ok(total * total / (usage.len() as f64 * squares))
}

#[derive(Debug, Clone, Default)]
struct Batch {
    slots: u64,
    channel_slots: u64,
    throughput: f64,
    collided: u64,
    pu_busy: u64,
    used: u64,
    admissions: u64,
    displacements: u64,
    wait_total: u64,
    resumptions: u64,
}

impl Batch {
    fn record(&mut self, ev: &SlotEvents) {
        self.slots += 1;
        self.channel_slots += ev.in_use.len() as u64;
        self.throughput += ev.throughput_bps;
        let used = ev.used_channels() as u64;
        self.used += used;
        self.collided += ev.collided_channels() as u64;
        self.pu_busy += ev.pu_busy_channels() as u64;
        match ev.admission {
            Admission::Admitted { .. } => self.admissions += 1,
            Admission::Displaced { .. } => {
                self.admissions += 1;
                self.displacements += 1;
            }
            _ => {}
        }
        if let Some(w) = ev.resumed {
            self.wait_total += w;
            self.resumptions += 1;
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Overall value with the batch-means half-width; batches where the metric is
/// undefined are skipped.
fn estimate(overall: f64, per_batch: impl Iterator<Item = Option<f64>>) -> Estimate {
    let xs: Vec<f64> = per_batch.flatten().collect();
    let n = xs.len();
    let ci = if n >= 2 {
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        1.96 * (var / n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Estimate { mean: overall, ci }
}

/// Simulate `slots` measured slots of `cfg` with the default warm-up and
/// batching.
pub fn run(cfg: &ScenarioConfig, slots: u64, seed: u64) -> Result<MetricsReport> {
    run_with(cfg, &RunOptions::new(slots, seed), |_| {})
}

/// Simulate with explicit options, handing every measured slot's events to
/// `observer`.
pub fn run_with(
    cfg: &ScenarioConfig,
    opts: &RunOptions,
    mut observer: impl FnMut(&SlotEvents),
) -> Result<MetricsReport> {
    if opts.slots < MIN_SLOTS {
        return Err(ConfigError::new(format!("at least {MIN_SLOTS} measured slots are required")).into());
    }
    if opts.batches < 2 || opts.batches as u64 > opts.slots {
        return Err(ConfigError::new("batch count must lie in 2..=slots").into());
    }
    let mut world = SimWorld::new(cfg, opts.seed)?;
    let m = cfg.num_data_channels as usize;
    let segments = world.segment_count() as u64;
    for _ in 0..opts.warmup {
        world.step_slot();
    }

    let per_batch = opts.slots / opts.batches as u64;
    let mut batches = vec![Batch::default(); opts.batches];
    let mut usage = vec![0u64; m];
    let mut visits: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for s in 0..opts.slots {
        world.set_segment((s * segments / opts.slots) as usize);
        let ev = world.step_slot();
        let b = ((s / per_batch) as usize).min(opts.batches - 1);
        batches[b].record(&ev);
        for (u, &used) in usage.iter_mut().zip(&ev.in_use) {
            *u += used as u64;
        }
        match visits.get_mut(&ev.transmitting) {
            Some(n) => *n += 1,
            None => {
                visits.insert(ev.transmitting.clone(), 1);
            }
        }
        observer(&ev);
    }

    let mut total = Batch::default();
    for b in &batches {
        total.slots += b.slots;
        total.channel_slots += b.channel_slots;
        total.throughput += b.throughput;
        total.collided += b.collided;
        total.pu_busy += b.pu_busy;
        total.used += b.used;
        total.admissions += b.admissions;
        total.displacements += b.displacements;
        total.wait_total += b.wait_total;
        total.resumptions += b.resumptions;
    }
    let frac = cfg.data_fraction() / m as f64;
    let slots = total.slots as f64;
    let report = MetricsReport {
        throughput_bps: estimate(
            total.throughput / slots,
            batches.iter().map(|b| Some(b.throughput / b.slots as f64)),
        ),
        utilization: estimate(
            total.used as f64 * frac / slots,
            batches.iter().map(|b| Some(b.used as f64 * frac / b.slots as f64)),
        ),
        collision_prob: estimate(
            ratio(total.collided, total.channel_slots).unwrap_or(0.0),
            batches.iter().map(|b| ratio(b.collided, b.channel_slots)),
        ),
        collision_given_pu: estimate(
            ratio(total.collided, total.pu_busy).unwrap_or(0.0),
            batches.iter().map(|b| ratio(b.collided, b.pu_busy)),
        ),
        collision_per_use: estimate(
            ratio(total.collided, total.used).unwrap_or(0.0),
            batches.iter().map(|b| ratio(b.collided, b.used)),
        ),
        fairness: fairness(&usage).ok(),
        buffered_fraction: estimate(
            ratio(total.displacements, total.admissions).unwrap_or(0.0),
            batches.iter().map(|b| ratio(b.displacements, b.admissions)),
        ),
        mean_wait_slots: ratio(total.wait_total, total.resumptions).map(|mean| {
            estimate(mean, batches.iter().map(|b| ratio(b.wait_total, b.resumptions)))
        }),
        channel_usage: usage,
        state_visits: visits,
        admissions: total.admissions,
        displacements: total.displacements,
        resumptions: total.resumptions,
        slots: opts.slots,
        seed: opts.seed,
    };
    Ok(report)
}

/// Event trace of a run, one line per measured slot.
pub fn trace(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<String> {
    use std::fmt::Write as _;
    let mut out = String::from("slot pu_busy sensed_busy preempted completed admission\n");
    run_with(cfg, opts, |ev| {
        let _ = writeln!(out, "{ev}");
    })?;
    Ok(out)
}
