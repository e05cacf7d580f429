mod common;

use std::collections::BTreeMap;

use chanbond::analysis::analyze;
use chanbond::model::{
    lognormal_run_params, BondingPolicy, Disruption, Priority, PuTraffic, PuTrafficSpec,
    RunDistribution, Selection,
};
use chanbond::optimizer::scheduled_scenario;
use chanbond::sim::{self, fairness, run, run_with, sample_rounded, trace, RunOptions, SimWorld};
use chanbond::ScenarioConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn short_frames(k: u32) -> ScenarioConfig {
    ScenarioConfig {
        max_bond: k,
        frame_bits: 8_000.0,
        ..ScenarioConfig::small()
    }
}

#[test]
fn lifetimes_are_geometric_without_pu() {
    let cfg = ScenarioConfig {
        pu_activity: 0.0,
        false_alarm_prob: 0.0,
        ..short_frames(2)
    };
    let fits = common::lifetime_ks(&cfg, 2_000_000, 17);
    let total: usize = fits.iter().map(|f| f.3).sum();
    assert!(total >= 100_000, "only {total} lifetimes");
    for (order, d, critical, n) in fits {
        assert!(d < critical, "order {order}: D = {d} >= {critical} over {n} lifetimes");
    }
}

#[test]
fn visit_frequencies_fit_the_stationary_distribution() {
    let cfg = short_frames(2);
    let exact = analyze(&cfg).unwrap();
    let lag = 50;
    let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    run_with(&cfg, &RunOptions::new(1_500_000, 23), |ev| {
        if ev.slot % lag == 0 {
            *counts.entry(ev.transmitting.clone()).or_default() += 1;
        }
    })
    .unwrap();
    let n: u64 = counts.values().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (state, &p) in exact.space.states().iter().zip(&exact.steady.pi) {
        let expected = p * n as f64;
        let observed = counts.remove(&state.bonds).unwrap_or(0) as f64;
        if expected < 5.0 {
            pooled.0 += observed;
            pooled.1 += expected;
        } else {
            bins.push((observed, expected));
        }
    }
    assert!(counts.is_empty(), "visited states outside the chain: {counts:?}");
    if pooled.1 > 0.0 {
        bins.push(pooled);
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let critical = ChiSquared::new((bins.len() - 1) as f64).unwrap().inverse_cdf(0.99);
    assert!(stat < critical, "chi2 = {stat} >= {critical} with {} bins", bins.len());
}

#[test]
fn perfect_detection_never_collides() {
    for traffic in [PuTraffic::Iid, PuTraffic::OnOff { off: RunDistribution::LogNormal, on: RunDistribution::Geometric }] {
        let cfg = ScenarioConfig {
            detect_prob: 1.0,
            pu_activity: 0.3,
            max_bond: 2,
            pu_traffic: PuTrafficSpec { model: traffic, imbalance: 0.0 },
            ..ScenarioConfig::small()
        };
        let r = run(&cfg, 200_000, 4).unwrap();
        assert_eq!(r.collision_prob.mean, 0.0);
        assert_eq!(r.collision_per_use.mean, 0.0);
    }
    let leaky = ScenarioConfig {
        pu_activity: 0.3,
        ..ScenarioConfig::small()
    };
    assert!(run(&leaky, 200_000, 4).unwrap().collision_prob.mean > 0.0);
}

fn variants() -> Vec<ScenarioConfig> {
    let base = ScenarioConfig {
        max_bond: 3,
        pu_activity: 0.2,
        ..ScenarioConfig::small()
    };
    vec![
        base.clone(),
        ScenarioConfig {
            bonding_policy: BondingPolicy::KOnly,
            ..base.clone()
        },
        ScenarioConfig {
            disruption: Disruption::Switch { switch_seconds: 1e-4 },
            selection: Selection::LeastUsed,
            pu_traffic: PuTrafficSpec {
                model: PuTraffic::Iid,
                imbalance: 1.0,
            },
            ..base.clone()
        },
        ScenarioConfig {
            priority: Some(Priority {
                high_prob: 0.5,
                buffer_size: 2,
            }),
            max_bond: 2,
            ..base.clone()
        },
        ScenarioConfig {
            pu_traffic: PuTrafficSpec {
                model: PuTraffic::OnOff {
                    off: RunDistribution::LogNormal,
                    on: RunDistribution::LogNormal,
                },
                imbalance: 0.0,
            },
            ..base.clone()
        },
        scheduled_scenario(&ScenarioConfig::large(), &[0.0, 0.05, 0.1], &[3, 2, 1], true),
    ]
}

#[test]
fn channels_are_conserved_every_slot() {
    for (i, cfg) in variants().iter().enumerate() {
        let mut world = SimWorld::new(cfg, i as u64).unwrap();
        for s in 0..30_000u64 {
            world.set_segment((s * world.segment_count() as u64 / 30_000) as usize);
            let ev = world.step_slot();
            world.check_invariants().unwrap_or_else(|e| panic!("variant {i} slot {s}: {e}"));
            let bonded: u32 = ev.transmitting.iter().enumerate().map(|(k, &n)| (k as u32 + 1) * n).sum();
            assert_eq!(bonded, ev.used_channels(), "variant {i} slot {s}");
            assert!(ev.used_channels() <= cfg.num_data_channels);
        }
    }
}

#[test]
fn slot_throughput_is_the_sum_over_connections() {
    for cfg in variants() {
        let per_channel = cfg.channel_rate_bps * cfg.data_fraction();
        let mut world = SimWorld::new(&cfg, 99).unwrap();
        for _ in 0..5_000 {
            let ev = world.step_slot();
            let expected: f64 = ev
                .transmitting
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let k = i as u32 + 1;
                    n as f64 * k as f64 * cfg.beta(k) * per_channel
                })
                .sum();
            assert!((ev.throughput_bps - expected).abs() <= 1e-9 * expected.max(1.0));
        }
    }
}

#[test]
fn traces_replay_exactly() {
    let cfg = &variants()[3];
    let opts = RunOptions::new(10_000, 5);
    let a = trace(cfg, &opts).unwrap();
    assert_eq!(a, trace(cfg, &opts).unwrap());
    assert_ne!(a, trace(cfg, &RunOptions::new(10_000, 6)).unwrap());
    assert_eq!(a.lines().count(), 10_001);
    for cfg in variants() {
        let x = run(&cfg, 10_000, 8).unwrap();
        assert_eq!(format!("{x:?}"), format!("{:?}", run(&cfg, 10_000, 8).unwrap()));
    }
}

#[test]
fn rounded_lognormal_runs_keep_their_mean() {
    for mean in [10.0, 1.0 / 0.3] {
        let (mu, sigma) = lognormal_run_params(mean).unwrap();
        let law = LogNormal::new(mu, sigma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let total: u64 = (0..n).map(|_| sample_rounded(&law, &mut rng)).sum();
        let got = total as f64 / n as f64;
        assert!((got - mean).abs() <= 0.02 * mean, "mean {mean}: sampled {got}");
    }
}

fn busy_fraction(cfg: &ScenarioConfig, slots: u64) -> f64 {
    let mut busy = 0u64;
    run_with(cfg, &RunOptions::new(slots, 12), |ev| busy += ev.pu_busy_channels() as u64).unwrap();
    busy as f64 / (slots * cfg.num_data_channels as u64) as f64
}

#[test]
fn on_off_traffic_keeps_the_duty_cycle() {
    for (off, on) in [
        (RunDistribution::Geometric, RunDistribution::Geometric),
        (RunDistribution::LogNormal, RunDistribution::LogNormal),
    ] {
        let cfg = ScenarioConfig {
            pu_activity: 0.2,
            pu_traffic: PuTrafficSpec {
                model: PuTraffic::OnOff { off, on },
                imbalance: 0.0,
            },
            ..ScenarioConfig::small()
        };
        let f = busy_fraction(&cfg, 1_000_000);
        let tol = if off == RunDistribution::Geometric { 0.01 } else { 0.03 };
        assert!((f - 0.2).abs() <= tol * 0.2, "{off:?}/{on:?}: busy fraction {f}");
    }
}

#[test]
fn least_used_matches_random_without_imbalance() {
    let base = ScenarioConfig {
        max_bond: 2,
        pu_activity: 0.2,
        ..ScenarioConfig::large()
    };
    let r = run(&base, 1_000_000, 31).unwrap();
    let l = run(
        &ScenarioConfig {
            selection: Selection::LeastUsed,
            ..base
        },
        1_000_000,
        32,
    )
    .unwrap();
    let gap = (r.throughput_bps.mean - l.throughput_bps.mean).abs();
    let ci = r.throughput_bps.ci.hypot(l.throughput_bps.ci);
    assert!(gap <= ci, "random {:?} vs least-used {:?}", r.throughput_bps, l.throughput_bps);
}

#[test]
fn least_used_concentrates_usage_under_imbalance() {
    let base = ScenarioConfig {
        pu_activity: 0.2,
        pu_traffic: PuTrafficSpec {
            model: PuTraffic::Iid,
            imbalance: 2.0,
        },
        ..ScenarioConfig::large()
    };
    let r = run(&base, 200_000, 2).unwrap();
    let l = run(
        &ScenarioConfig {
            selection: Selection::LeastUsed,
            ..base
        },
        200_000,
        2,
    )
    .unwrap();
    assert!(l.throughput_bps.mean > r.throughput_bps.mean);
    assert!(l.fairness.unwrap() < r.fairness.unwrap());
    let m = 12.0;
    for f in [l.fairness.unwrap(), r.fairness.unwrap()] {
        assert!((1.0 / m..=1.0).contains(&f));
    }
    assert_eq!(fairness(&l.channel_usage).unwrap(), l.fairness.unwrap());
}

#[test]
fn priority_endpoints_never_buffer() {
    let base = ScenarioConfig {
        pu_activity: 0.05,
        max_bond: 2,
        ..ScenarioConfig::small()
    };
    let plain = run(&base, 1_000_000, 41).unwrap();
    for high_prob in [0.0, 1.0] {
        let cfg = ScenarioConfig {
            priority: Some(Priority {
                high_prob,
                buffer_size: 4,
            }),
            ..base.clone()
        };
        let r = run(&cfg, 1_000_000, 42).unwrap();
        assert_eq!(r.displacements, 0);
        assert_eq!(r.buffered_fraction.mean, 0.0);
        assert_eq!(r.mean_wait_slots, None);
        let gap = (r.throughput_bps.mean - plain.throughput_bps.mean).abs();
        assert!(gap <= r.throughput_bps.ci.hypot(plain.throughput_bps.ci), "p_h = {high_prob}");
    }
    let mid = ScenarioConfig {
        priority: Some(Priority {
            high_prob: 0.5,
            buffer_size: 4,
        }),
        ..base
    };
    let r = run(&mid, 200_000, 43).unwrap();
    assert!(r.displacements > 0 && r.resumptions > 0);
    assert!(r.mean_wait_slots.unwrap().mean >= 1.0);
}

#[test]
fn metric_fractions_stay_in_range() {
    for cfg in variants() {
        let r = run(&cfg, 20_000, 77).unwrap();
        for (name, v) in [
            ("utilization", r.utilization.mean),
            ("collision", r.collision_prob.mean),
            ("collision given pu", r.collision_given_pu.mean),
            ("collision per use", r.collision_per_use.mean),
            ("buffered", r.buffered_fraction.mean),
        ] {
            assert!((0.0..=1.0).contains(&v), "{name} = {v}");
        }
        assert!(r.collision_prob.mean <= r.collision_given_pu.mean + 1e-12);
        assert!(r.throughput_bps.ci.is_finite() && r.throughput_bps.ci >= 0.0);
        assert_eq!(r.slots, 20_000);
        assert_eq!(r.state_visits.values().sum::<u64>(), 20_000);
    }
    assert!(sim::run(&ScenarioConfig::small(), sim::MIN_SLOTS - 1, 0).is_err());
}
