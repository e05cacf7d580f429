use super::state::MarkovState;

/// Aggregate of `j x_j w(j)` weighted by `pi`.
fn weighted_occupancy(pi: &[f64], states: &[MarkovState], weight: impl Fn(u32) -> f64) -> f64 {
    pi.iter()
        .zip(states)
        .map(|(&p, s)| {
            p * s
                .bonds
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let j = i as u32 + 1;
                    (j * x) as f64 * weight(j)
                })
                .sum::<f64>()
        })
        .sum()
}

/// Mean MAC throughput in bits per second:
/// `C (T - Ts) / T * sum_i pi_i sum_j j x_j beta(j)`.
pub fn throughput(
    pi: &[f64],
    states: &[MarkovState],
    channel_rate_bps: f64,
    data_fraction: f64,
    beta: impl Fn(u32) -> f64,
) -> f64 {
    channel_rate_bps * data_fraction * weighted_occupancy(pi, states, beta)
}

/// Mean fraction of data channels carrying SU data:
/// `(T - Ts) / T * sum_i pi_i sum_j j x_j / M`.
pub fn utilization(pi: &[f64], states: &[MarkovState], channels: u32, data_fraction: f64) -> f64 {
    data_fraction * weighted_occupancy(pi, states, |_| 1.0) / channels as f64
}
