//! Scenario description and the parameter derivations shared by every engine.
//!
//! A [`ScenarioConfig`] is plain data. Engines call [`ScenarioConfig::validate`]
//! on entry, and the derived quantities (frame-end probability, observed busy
//! probability, per-channel PU activity, log-normal run parameters) are pure
//! functions of it.

use std::collections::BTreeMap;

use crate::error::ConfigError;

/// Per-slot RTS probability of an idle node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccessProb {
    /// `e^-1 / N`, recomputed whenever the user count changes.
    Auto,
    Fixed(f64),
}

/// Throughput reduction factor of a `k`-bonded virtual channel.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltySpec {
    Perfect,
    /// `beta(k) = k^-a`.
    PowerLaw(f64),
    /// Explicit values; `beta(1)` is always 1 and may be omitted.
    Table(BTreeMap<u32, f64>),
}

impl PenaltySpec {
    pub fn beta(&self, k: u32) -> f64 {
        match self {
            PenaltySpec::Perfect => 1.0,
            PenaltySpec::PowerLaw(a) => (k as f64).powf(-a),
            PenaltySpec::Table(table) => match table.get(&k) {
                Some(&b) => b,
                None if k == 1 => 1.0,
                None => f64::NAN,
            },
        }
    }

    fn validate(&self, max_bond: u32) -> Result<(), ConfigError> {
        match self {
            PenaltySpec::Perfect => Ok(()),
            PenaltySpec::PowerLaw(a) => {
                if a.is_finite() && *a >= 0.0 {
                    Ok(())
                } else {
                    Err(ConfigError::new(format!("penalty exponent {a} must be >= 0")))
                }
            }
            PenaltySpec::Table(table) => {
                if let Some(&b1) = table.get(&1) {
                    if b1 != 1.0 {
                        return Err(ConfigError::new("penalty table must have beta(1) = 1"));
                    }
                }
                for (&k, &b) in table {
                    if k == 0 {
                        return Err(ConfigError::new("penalty table keys start at 1"));
                    }
                    if !(0.0..=1.0).contains(&b) {
                        return Err(ConfigError::new(format!("beta({k}) = {b} is outside [0, 1]")));
                    }
                }
                for k in 2..=max_bond {
                    if !table.contains_key(&k) {
                        return Err(ConfigError::new(format!("penalty table has no entry for k = {k}")));
                    }
                }
                Ok(())
            }
        }
    }
}

/// One stationary interval of an adaptive bonding run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSegment {
    pub pu_activity: f64,
    pub bond: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveSchedule {
    pub segments: Vec<ScheduleSegment>,
    /// Bond exactly `bond` channels or block, instead of the flexible rule.
    pub k_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BondingPolicy {
    /// Bond `min(free, K)` channels.
    Flexible,
    /// Bond exactly `K` channels; block the connection otherwise.
    KOnly,
    Adaptive(AdaptiveSchedule),
}

/// What happens to a connection when a PU is sensed on one of its channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Disruption {
    Drop,
    Switch { switch_seconds: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Random,
    LeastUsed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priority {
    pub high_prob: f64,
    pub buffer_size: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunDistribution {
    Geometric,
    LogNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PuTraffic {
    /// Each channel busy independently in every slot.
    Iid,
    /// Alternating renewal process with the given off/on run-length laws.
    OnOff {
        off: RunDistribution,
        on: RunDistribution,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuTrafficSpec {
    pub model: PuTraffic,
    /// Per-channel activity imbalance; 0 means uniform.
    pub imbalance: f64,
}

/// Energy-detector operating point. Carried for documentation only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorMeta {
    pub bandwidth_hz: f64,
    pub snr_db: f64,
    pub threshold_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_users: u32,
    pub num_data_channels: u32,
    pub max_bond: u32,
    pub access: AccessProb,
    pub slot_seconds: f64,
    pub sensing_seconds: f64,
    pub channel_rate_bps: f64,
    pub frame_bits: f64,
    pub pu_activity: f64,
    pub detect_prob: f64,
    pub false_alarm_prob: f64,
    pub penalty: PenaltySpec,
    pub bonding_policy: BondingPolicy,
    pub disruption: Disruption,
    pub selection: Selection,
    pub priority: Option<Priority>,
    pub pu_traffic: PuTrafficSpec,
    pub detector_meta: Option<DetectorMeta>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::small()
    }
}

impl ScenarioConfig {
    /// Four data channels, twelve users, 5 kB frames, common parameter block.
    pub fn small() -> Self {
        Self {
            num_users: 12,
            num_data_channels: 4,
            max_bond: 1,
            access: AccessProb::Auto,
            slot_seconds: 1e-3,
            sensing_seconds: 1e-4,
            channel_rate_bps: 200e3,
            frame_bits: 40_000.0,
            pu_activity: 0.1,
            detect_prob: 0.9,
            false_alarm_prob: 0.02,
            penalty: PenaltySpec::Perfect,
            bonding_policy: BondingPolicy::Flexible,
            disruption: Disruption::Drop,
            selection: Selection::Random,
            priority: None,
            pu_traffic: PuTrafficSpec {
                model: PuTraffic::Iid,
                imbalance: 0.0,
            },
            detector_meta: Some(DetectorMeta {
                bandwidth_hz: 200e3,
                snr_db: 0.0,
                threshold_db: 17.8,
            }),
        }
    }

    /// Twelve data channels, forty users, 20 kB frames.
    pub fn large() -> Self {
        Self {
            num_users: 40,
            num_data_channels: 12,
            frame_bits: 160_000.0,
            ..Self::small()
        }
    }

    pub fn access_prob(&self) -> f64 {
        match self.access {
            AccessProb::Auto => (-1.0f64).exp() / self.num_users.max(1) as f64,
            AccessProb::Fixed(p) => p,
        }
    }

    pub fn beta(&self, k: u32) -> f64 {
        self.penalty.beta(k)
    }

    /// Fraction of a slot left for data after sensing.
    pub fn data_fraction(&self) -> f64 {
        (self.slot_seconds - self.sensing_seconds) / self.slot_seconds
    }

    /// Largest bond order any connection can use under the configured policy.
    pub fn bond_limit(&self) -> u32 {
        match &self.bonding_policy {
            BondingPolicy::Adaptive(s) => s.segments.iter().map(|s| s.bond).max().unwrap_or(1),
            _ => self.max_bond,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = self.num_data_channels;
        if self.num_users == 0 {
            return Err(ConfigError::new("num_users must be positive"));
        }
        if m == 0 {
            return Err(ConfigError::new("num_data_channels must be positive"));
        }
        if self.max_bond == 0 || self.max_bond > m {
            return Err(ConfigError::new(format!(
                "max_bond = {} must lie in 1..={m}",
                self.max_bond
            )));
        }
        let p = self.access_prob();
        if !(p > 0.0 && p < 1.0) {
            return Err(ConfigError::new(format!("access_prob = {p} must lie in (0, 1)")));
        }
        positive("slot_seconds", self.slot_seconds)?;
        positive("sensing_seconds", self.sensing_seconds)?;
        positive("channel_rate_bps", self.channel_rate_bps)?;
        positive("frame_bits", self.frame_bits)?;
        if self.sensing_seconds >= self.slot_seconds {
            return Err(ConfigError::new("sensing_seconds must be shorter than slot_seconds"));
        }
        probability("pu_activity", self.pu_activity)?;
        probability("detect_prob", self.detect_prob)?;
        probability("false_alarm_prob", self.false_alarm_prob)?;
        self.penalty.validate(self.max_bond)?;
        if let Disruption::Switch { switch_seconds } = self.disruption {
            if !(switch_seconds.is_finite() && switch_seconds >= 0.0) {
                return Err(ConfigError::new("switch_seconds must be finite and >= 0"));
            }
        }
        if let Some(pr) = self.priority {
            probability("priority high_prob", pr.high_prob)?;
            if pr.buffer_size > m {
                return Err(ConfigError::new(format!(
                    "buffer size {} exceeds the {m} data channels",
                    pr.buffer_size
                )));
            }
        }
        let imb = self.pu_traffic.imbalance;
        if !(imb.is_finite() && imb >= 0.0) {
            return Err(ConfigError::new("pu_imbalance must be finite and >= 0"));
        }
        if let BondingPolicy::Adaptive(schedule) = &self.bonding_policy {
            if schedule.segments.is_empty() {
                return Err(ConfigError::new("adaptive schedule has no segments"));
            }
            for seg in &schedule.segments {
                probability("schedule pu_activity", seg.pu_activity)?;
                if seg.bond == 0 || seg.bond > self.max_bond {
                    return Err(ConfigError::new(format!(
                        "schedule bond {} must lie in 1..={}",
                        seg.bond, self.max_bond
                    )));
                }
                channel_activity(seg.pu_activity, m, imb)?;
            }
        }
        per_channel_activity(self)?;
        for k in 1..=self.max_bond {
            frame_end_prob(self, k)?;
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(format!("{name} = {v} must be a positive real")))
    }
}

fn probability(name: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::new(format!("{name} = {v} is not a probability")))
    }
}

/// Per-slot probability that a `k`-bonded frame ends, `C (T - Ts [+ Tp]) / d * k * beta(k)`.
///
/// The switching delay is added only under the switching disruption strategy,
/// where it stretches every frame.
pub fn frame_end_prob(cfg: &ScenarioConfig, k: u32) -> Result<f64, ConfigError> {
    if k == 0 || k > cfg.max_bond {
        return Err(ConfigError::new(format!(
            "bond order {k} outside 1..={}",
            cfg.max_bond
        )));
    }
    let extra = match cfg.disruption {
        Disruption::Switch { switch_seconds } => switch_seconds,
        Disruption::Drop => 0.0,
    };
    let airtime = cfg.slot_seconds - cfg.sensing_seconds + extra;
    let q = cfg.channel_rate_bps * airtime / cfg.frame_bits * k as f64 * cfg.beta(k);
    if q > 0.0 && q <= 1.0 {
        Ok(q)
    } else {
        Err(ConfigError::new(format!(
            "frame-end probability q({k}) = {q} is not in (0, 1]"
        )))
    }
}

/// Probability that the SU network sees a channel busy: `q p_d + (1 - q) p_f`.
pub fn observed_busy_prob(cfg: &ScenarioConfig, channel_activity: f64) -> f64 {
    channel_activity * cfg.detect_prob + (1.0 - channel_activity) * cfg.false_alarm_prob
}

/// PU activity of every data channel; averages to `pu_activity`.
pub fn per_channel_activity(cfg: &ScenarioConfig) -> Result<Vec<f64>, ConfigError> {
    channel_activity(cfg.pu_activity, cfg.num_data_channels, cfg.pu_traffic.imbalance)
}

/// `q_i = q M i^A / sum_j j^A` for channels `i = 1..=M`.
pub fn channel_activity(mean: f64, channels: u32, imbalance: f64) -> Result<Vec<f64>, ConfigError> {
    if !(imbalance.is_finite() && imbalance >= 0.0) {
        return Err(ConfigError::new("imbalance must be finite and >= 0"));
    }
    if imbalance == 0.0 {
        return Ok(vec![mean; channels as usize]);
    }
    let m = channels as f64;
    let weights: Vec<f64> = (1..=channels).map(|i| (i as f64).powf(imbalance)).collect();
    let total: f64 = weights.iter().sum();
    let out: Vec<f64> = weights.iter().map(|w| mean * m * w / total).collect();
    if let Some((i, q)) = out.iter().enumerate().find(|(_, q)| !(0.0..=1.0).contains(*q)) {
        return Err(ConfigError::new(format!(
            "channel {} PU activity {q} is outside [0, 1]",
            i + 1
        )));
    }
    Ok(out)
}

/// Location and scale of the log-normal law whose mean and variance equal those
/// of a geometric run length with the given mean (in slots).
pub fn lognormal_run_params(mean_slots: f64) -> Result<(f64, f64), ConfigError> {
    if !(mean_slots.is_finite() && mean_slots > 1.0) {
        return Err(ConfigError::new(format!(
            "log-normal run mean {mean_slots} must exceed one slot"
        )));
    }
    let c = mean_slots;
    let v = c * (c - 1.0);
    let sigma = (v / (c * c) + 1.0).ln().sqrt();
    let mu = (c * c / (v + c * c).sqrt()).ln();
    Ok((mu, sigma))
}

/// Mean busy and idle run lengths whose duty cycle equals `activity`.
///
/// These are the run means of the i.i.d. per-slot process, so geometric runs
/// with these means reproduce it exactly. Infinite where a run never ends.
pub fn run_means(activity: f64) -> (f64, f64) {
    let on = 1.0 / (1.0 - activity);
    let off = 1.0 / activity;
    (on, off)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn with_bond(k: u32) -> ScenarioConfig {
        ScenarioConfig {
            max_bond: k,
            ..ScenarioConfig::small()
        }
    }

    #[test]
    fn frame_end_prob_reference_values() {
        let cfg = with_bond(2);
        assert_abs_diff_eq!(frame_end_prob(&cfg, 1).unwrap(), 0.0045, epsilon = 1e-15);
        assert_abs_diff_eq!(frame_end_prob(&cfg, 2).unwrap(), 0.009, epsilon = 1e-15);
    }

    #[test]
    fn zero_penalty_is_rejected() {
        let mut table = BTreeMap::new();
        table.insert(2, 0.0);
        let cfg = ScenarioConfig {
            penalty: PenaltySpec::Table(table),
            ..with_bond(2)
        };
        assert!(frame_end_prob(&cfg, 2).is_err());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn switching_stretches_frames() {
        let cfg = ScenarioConfig {
            disruption: Disruption::Switch {
                switch_seconds: 100e-6,
            },
            ..with_bond(1)
        };
        assert_abs_diff_eq!(frame_end_prob(&cfg, 1).unwrap(), 0.005, epsilon = 1e-15);
    }

    #[test]
    fn observed_busy_reference_values() {
        let cfg = ScenarioConfig::small();
        assert_abs_diff_eq!(observed_busy_prob(&cfg, 0.1), 0.108, epsilon = 1e-15);
        assert_eq!(observed_busy_prob(&cfg, 0.0), cfg.false_alarm_prob);
        let perfect = ScenarioConfig {
            detect_prob: 1.0,
            ..cfg
        };
        assert_eq!(observed_busy_prob(&perfect, 1.0), 1.0);
    }

    #[test]
    fn channel_activity_reference_values() {
        let flat = channel_activity(0.3, 5, 0.0).unwrap();
        assert!(flat.iter().all(|&q| (q - 0.3).abs() < 1e-15));

        let two = channel_activity(0.15, 2, 1.0).unwrap();
        assert_abs_diff_eq!(two[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(two[1], 0.2, epsilon = 1e-15);

        let three = channel_activity(0.5, 3, 1.0).unwrap();
        for (got, want) in three.iter().zip([0.25, 0.5, 0.75]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn channel_activity_rejects_overflowing_channels() {
        assert!(channel_activity(0.9, 3, 2.0).is_err());
    }

    #[test]
    fn lognormal_reference_values() {
        let (mu, sigma) = lognormal_run_params(2.0).unwrap();
        assert_abs_diff_eq!(sigma, 1.5f64.ln().sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(mu, (4.0 / 6f64.sqrt()).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(sigma, 0.6368, epsilon = 1e-4);
        assert_abs_diff_eq!(mu, 0.4904, epsilon = 1e-4);

        let (mu, sigma) = lognormal_run_params(10.0).unwrap();
        assert_abs_diff_eq!(sigma, 0.8012, epsilon = 1e-4);
        assert_abs_diff_eq!(mu, 1.9817, epsilon = 1e-4);

        assert!(lognormal_run_params(1.0).is_err());
        assert!(lognormal_run_params(0.5).is_err());
    }

    #[test]
    fn run_means_preserve_duty_cycle() {
        for q in [0.05, 0.1, 0.3, 0.7] {
            let (on, off) = run_means(q);
            assert_abs_diff_eq!(on / (on + off), q, epsilon = 1e-12);
        }
    }

    #[test]
    fn validation_catches_bad_fields() {
        let good = ScenarioConfig::large();
        assert!(good.validate().is_ok());

        let mut bad = good.clone();
        bad.max_bond = 13;
        assert!(bad.validate().is_err());

        let mut bad = good.clone();
        bad.sensing_seconds = bad.slot_seconds;
        assert!(bad.validate().is_err());

        let mut bad = good.clone();
        bad.access = AccessProb::Fixed(1.0);
        assert!(bad.validate().is_err());

        let mut bad = good.clone();
        bad.priority = Some(Priority {
            high_prob: 0.5,
            buffer_size: 13,
        });
        assert!(bad.validate().is_err());

        let mut bad = good;
        bad.detect_prob = 1.5;
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn channel_activity_keeps_the_mean(
            q in 0.0f64..0.2,
            m in 1u32..=16,
            a in 0.0f64..3.0,
        ) {
            if let Ok(qs) = channel_activity(q, m, a) {
                let mean = qs.iter().sum::<f64>() / m as f64;
                prop_assert!((mean - q).abs() <= 1e-12);
                prop_assert!(qs.windows(2).all(|w| w[0] <= w[1] + 1e-15));
            }
        }

        #[test]
        fn observed_busy_stays_between_detector_rates(
            q in 0.0f64..=1.0,
            pd in 0.0f64..=1.0,
            pf in 0.0f64..=1.0,
        ) {
            let cfg = ScenarioConfig { detect_prob: pd, false_alarm_prob: pf, ..ScenarioConfig::small() };
            let qc = observed_busy_prob(&cfg, q);
            prop_assert!(qc >= pd.min(pf) - 1e-15 && qc <= pd.max(pf) + 1e-15);
        }

        #[test]
        fn valid_configs_have_frame_end_probabilities(
            k in 1u32..=4,
            d in 1000.0f64..1e6,
            a in 0.0f64..1.0,
        ) {
            let cfg = ScenarioConfig {
                max_bond: k,
                frame_bits: d,
                penalty: PenaltySpec::PowerLaw(a),
                ..ScenarioConfig::small()
            };
            if cfg.validate().is_ok() {
                for j in 1..=k {
                    let q = frame_end_prob(&cfg, j).unwrap();
                    prop_assert!(q > 0.0 && q <= 1.0);
                }
            }
        }
    }
}
