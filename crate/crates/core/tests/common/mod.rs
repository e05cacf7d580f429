use std::collections::BTreeMap;

use chanbond::model::frame_end_prob;
use chanbond::sim::{run_with, RunOptions};
use chanbond::ScenarioConfig;
use statrs::distribution::{DiscreteCDF, Geometric};

/// Kolmogorov-Smirnov distance between simulated frame lifetimes of each bond
/// order and the geometric law with parameter `q(k)`, with the 1% critical
/// value: `(order, D, critical, lifetimes)`.
pub fn lifetime_ks(cfg: &ScenarioConfig, slots: u64, seed: u64) -> Vec<(u32, f64, f64, usize)> {
    let mut lifetimes: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    run_with(cfg, &RunOptions::new(slots, seed), |ev| {
        for &(order, life) in &ev.completions {
            lifetimes.entry(order).or_default().push(life);
        }
    })
    .expect("valid scenario");
    lifetimes
        .into_iter()
        .map(|(order, mut xs)| {
            xs.sort_unstable();
            let law = Geometric::new(frame_end_prob(cfg, order).unwrap()).unwrap();
            let n = xs.len() as f64;
            let mut d: f64 = 0.0;
            let mut i = 0;
            while i < xs.len() {
                let x = xs[i];
                let below = i as f64 / n;
                while i < xs.len() && xs[i] == x {
                    i += 1;
                }
                let at = i as f64 / n;
                d = d.max((at - law.cdf(x)).abs()).max((below - law.cdf(x - 1)).abs());
            }
            (order, d, 1.628 / n.sqrt(), xs.len())
        })
        .collect()
}
