//! Bond-order selection per stationary interval.
//!
//! For every PU activity level the analytical throughput is evaluated for each
//! admissible maximum bond order and the best one is kept, preferring the
//! smaller order on ties.

use rayon::prelude::*;

use crate::analysis::analytical_throughput;
use crate::error::{Error, Result};
use crate::model::{AdaptiveSchedule, BondingPolicy, ScenarioConfig, ScheduleSegment};

/// Detector and bond-order limits the schedule must respect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConstraints {
    pub k_max: u32,
    pub required_detect: f64,
    pub required_false_alarm: f64,
}

impl ScheduleConstraints {
    /// Only the bond limit; any detector qualifies.
    pub fn bond_limit(k_max: u32) -> Self {
        Self {
            k_max,
            required_detect: 0.0,
            required_false_alarm: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BondSchedule {
    pub segments: Vec<ScheduleSegment>,
    /// Analytical throughput of the chosen order in each interval.
    pub throughput_bps: Vec<f64>,
    pub constraints: ScheduleConstraints,
}

impl BondSchedule {
    pub fn bonds(&self) -> Vec<u32> {
        self.segments.iter().map(|s| s.bond).collect()
    }

    /// Bonding policy running this schedule with flexible bonding.
    pub fn policy(&self) -> BondingPolicy {
        BondingPolicy::Adaptive(AdaptiveSchedule {
            segments: self.segments.clone(),
            k_only: false,
        })
    }
}

/// Analytical throughput for every `K` in `1..=k_max` at activity `q_p`.
pub fn throughput_by_bond(base: &ScenarioConfig, pu_activity: f64, k_max: u32) -> Result<Vec<f64>> {
    (1..=k_max)
        .map(|k| {
            analytical_throughput(&ScenarioConfig {
                pu_activity,
                max_bond: k,
                bonding_policy: BondingPolicy::Flexible,
                ..base.clone()
            })
        })
        .collect()
}

/// Choose the throughput-maximizing bond order for each activity level.
pub fn optimize_schedule(
    base: &ScenarioConfig,
    activities: &[f64],
    constraints: ScheduleConstraints,
) -> Result<BondSchedule> {
    let ScheduleConstraints {
        k_max,
        required_detect,
        required_false_alarm,
    } = constraints;
    if k_max == 0 || k_max > base.num_data_channels {
        return Err(Error::Constraint(format!(
            "K_max = {k_max} must lie in 1..={}",
            base.num_data_channels
        )));
    }
    if base.detect_prob < required_detect {
        return Err(Error::Constraint(format!(
            "p_d = {} is below the required {required_detect}",
            base.detect_prob
        )));
    }
    if base.false_alarm_prob > required_false_alarm {
        return Err(Error::Constraint(format!(
            "p_f = {} exceeds the allowed {required_false_alarm}",
            base.false_alarm_prob
        )));
    }
    if activities.is_empty() {
        return Err(Error::Constraint("no activity levels to schedule".into()));
    }
    let best: Vec<(u32, f64)> = activities
        .par_iter()
        .map(|&q| {
            let rates = throughput_by_bond(base, q, k_max)?;
            let mut choice = (1, rates[0]);
            for (k, &r) in (2..).zip(&rates[1..]) {
                if r > choice.1 {
                    choice = (k, r);
                }
            }
            Ok(choice)
        })
        .collect::<Result<_>>()?;
    Ok(BondSchedule {
        segments: activities
            .iter()
            .zip(&best)
            .map(|(&pu_activity, &(bond, _))| ScheduleSegment { pu_activity, bond })
            .collect(),
        throughput_bps: best.iter().map(|b| b.1).collect(),
        constraints,
    })
}

/// Scenario running `bonds` over consecutive equal intervals with the given
/// activity levels.
pub fn scheduled_scenario(base: &ScenarioConfig, activities: &[f64], bonds: &[u32], k_only: bool) -> ScenarioConfig {
    let segments = activities
        .iter()
        .zip(bonds)
        .map(|(&pu_activity, &bond)| ScheduleSegment { pu_activity, bond })
        .collect();
    ScenarioConfig {
        max_bond: base.max_bond.max(bonds.iter().copied().max().unwrap_or(1)),
        bonding_policy: BondingPolicy::Adaptive(AdaptiveSchedule { segments, k_only }),
        ..base.clone()
    }
}
