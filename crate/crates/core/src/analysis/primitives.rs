//! Connection arrangement, termination and preemption probabilities.

/// `n choose k` as a float; exact for the small arguments used here.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Probability that exactly `j` connections are admitted through the control
/// channel while `active` pairs are busy.
///
/// One admission happens when exactly one of the `N - 2A` idle users sends an
/// RTS: `(N - 2A) p (1 - p)^(N - 2A - 1)`. Every other outcome admits nothing.
/// A lone idle user has nobody to talk to, so fewer than two idle users never
/// produce a connection.
pub fn arrangement_prob(users: u32, access_prob: f64, active: u32, j: u32) -> f64 {
    let idle = users.saturating_sub(2 * active);
    let one = if idle >= 2 {
        idle as f64 * access_prob * (1.0 - access_prob).powi(idle as i32 - 1)
    } else {
        0.0
    };
    if j == 1 {
        one
    } else {
        1.0 - one
    }
}

/// Probability that `j` of `m` connections end their frame in one slot when
/// each ends independently with probability `q`. Zero terminations are
/// included: the `j = 0` term is `(1 - q)^m`.
pub fn termination_prob(m: u32, j: u32, q: f64) -> f64 {
    if j > m {
        return 0.0;
    }
    binomial(m, j) * q.powi(j as i32) * (1.0 - q).powi((m - j) as i32)
}

/// Connections grouped by bond order plus the channels no SU occupies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionLayout {
    /// `blocks[j - 1]` connections use `j` channels each.
    pub blocks: Vec<u32>,
    pub free: u32,
}

impl ConnectionLayout {
    pub fn new(blocks: Vec<u32>, free: u32) -> Self {
        Self { blocks, free }
    }

    /// Layout of `blocks` on `channels` data channels.
    pub fn on_channels(blocks: &[u32], channels: u32) -> Option<Self> {
        let used: u32 = blocks
            .iter()
            .enumerate()
            .map(|(i, &a)| (i as u32 + 1) * a)
            .sum();
        channels.checked_sub(used).map(|free| Self {
            blocks: blocks.to_vec(),
            free,
        })
    }

    pub fn channels(&self) -> u32 {
        self.free
            + self
                .blocks
                .iter()
                .enumerate()
                .map(|(i, &a)| (i as u32 + 1) * a)
                .sum::<u32>()
    }
}

/// Probability that, with every channel observed busy independently with
/// probability `q_c`, exactly `busy` channels are busy in total, exactly
/// `hits[j - 1]` of the `j`-bonded connections see at least one busy channel,
/// and the remaining busy channels fall on free channels.
///
/// The count of qualifying occupancy patterns is the coefficient of `x^busy`
/// in `prod_j C(a_j, r_j) ((1 + x)^j - 1)^(r_j) * (1 + x)^f`: each hit block
/// contributes any non-empty subset of its channels, untouched blocks
/// contribute nothing and free channels contribute any subset.
pub fn preemption_prob(layout: &ConnectionLayout, hits: &[u32], busy: u32, q_c: f64) -> f64 {
    let channels = layout.channels();
    if busy > channels || hits.len() != layout.blocks.len() {
        return 0.0;
    }
    if hits.iter().zip(&layout.blocks).any(|(r, a)| r > a) {
        return 0.0;
    }
    let patterns = pattern_count_by_busy(layout, hits);
    let count = patterns.get(busy as usize).copied().unwrap_or(0.0);
    if count == 0.0 {
        return 0.0;
    }
    count * q_c.powi(busy as i32) * (1.0 - q_c).powi((channels - busy) as i32)
}

/// [`preemption_prob`] summed over every busy count:
/// `prod_j C(a_j, r_j) h_j^(r_j) (1 - h_j)^(a_j - r_j)` with
/// `h_j = 1 - (1 - q_c)^j` the chance a `j`-bonded connection is hit.
pub fn preemption_prob_marginal(layout: &ConnectionLayout, hits: &[u32], q_c: f64) -> f64 {
    if hits.len() != layout.blocks.len() {
        return 0.0;
    }
    let mut prob = 1.0;
    for (i, (&a, &r)) in layout.blocks.iter().zip(hits).enumerate() {
        if r > a {
            return 0.0;
        }
        let spared = (1.0 - q_c).powi(i as i32 + 1);
        prob *= binomial(a, r) * (1.0 - spared).powi(r as i32) * spared.powi((a - r) as i32);
    }
    prob
}

/// Number of occupancy patterns producing exactly the given hit vector,
/// indexed by total busy count.
fn pattern_count_by_busy(layout: &ConnectionLayout, hits: &[u32]) -> Vec<f64> {
    let mut poly = vec![1.0];
    for (i, (&a, &r)) in layout.blocks.iter().zip(hits).enumerate() {
        let order = i as u32 + 1;
        // (1 + x)^j - 1
        let hit_block: Vec<f64> = (0..=order)
            .map(|w| if w == 0 { 0.0 } else { binomial(order, w) })
            .collect();
        for _ in 0..r {
            poly = poly_mul(&poly, &hit_block);
        }
        let ways = binomial(a, r);
        poly.iter_mut().for_each(|c| *c *= ways);
    }
    let free: Vec<f64> = (0..=layout.free).map(|w| binomial(layout.free, w)).collect();
    poly_mul(&poly, &free)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(12, 6), 924.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(0, 0), 1.0);
    }

    #[test]
    fn arrangement_reference_values() {
        let p = (-1.0f64).exp() / 12.0;
        let one = arrangement_prob(12, p, 0, 1);
        assert_abs_diff_eq!(one, 0.2612, epsilon = 1e-4);
        assert_abs_diff_eq!(arrangement_prob(12, p, 0, 0), 1.0 - one, epsilon = 1e-15);
        assert_eq!(arrangement_prob(12, p, 6, 1), 0.0);
        assert_eq!(arrangement_prob(12, p, 6, 0), 1.0);
        assert_eq!(arrangement_prob(13, p, 6, 1), 0.0);
    }

    #[test]
    fn termination_reference_values() {
        assert_abs_diff_eq!(termination_prob(2, 1, 0.1), 0.18, epsilon = 1e-15);
        assert_abs_diff_eq!(termination_prob(2, 0, 0.1), 0.81, epsilon = 1e-15);
        assert_eq!(termination_prob(2, 3, 0.1), 0.0);
        assert_eq!(termination_prob(0, 0, 0.3), 1.0);
    }

    #[test]
    fn preemption_all_idle() {
        let layout = ConnectionLayout::new(vec![1, 1], 1);
        let q_c = 0.3;
        assert_abs_diff_eq!(
            preemption_prob(&layout, &[0, 0], 0, q_c),
            0.7f64.powi(4),
            epsilon = 1e-15
        );
    }

    #[test]
    fn preemption_one_two_bond_and_a_free_channel() {
        let layout = ConnectionLayout::new(vec![0, 1], 1);
        assert_abs_diff_eq!(preemption_prob(&layout, &[0, 1], 1, 0.5), 0.25, epsilon = 1e-15);
        let total: f64 = (0..=3).map(|z| preemption_prob(&layout, &[0, 1], z, 0.5)).sum();
        assert_abs_diff_eq!(total, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(preemption_prob_marginal(&layout, &[0, 1], 0.5), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn infeasible_preemptions_are_zero() {
        let layout = ConnectionLayout::new(vec![1, 0], 2);
        assert_eq!(preemption_prob(&layout, &[2, 0], 2, 0.5), 0.0);
        assert_eq!(preemption_prob(&layout, &[0, 1], 2, 0.5), 0.0);
        // one hit on a 1-bond needs at least one busy channel
        assert_eq!(preemption_prob(&layout, &[1, 0], 0, 0.5), 0.0);
        assert_eq!(preemption_prob(&layout, &[0, 0], 4, 0.5), 0.0);
    }

    fn arb_layout() -> impl Strategy<Value = ConnectionLayout> {
        (prop::collection::vec(0u32..=3, 1..=3), 0u32..=4)
            .prop_map(|(blocks, free)| ConnectionLayout::new(blocks, free))
    }

    fn hit_vectors(blocks: &[u32]) -> Vec<Vec<u32>> {
        let mut out = vec![vec![]];
        for &a in blocks {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..=a).map(move |r| {
                        let mut w = v.clone();
                        w.push(r);
                        w
                    })
                })
                .collect();
        }
        out
    }

    proptest! {
        #[test]
        fn preemption_distribution_is_closed(layout in arb_layout(), q_c in 0.0f64..=1.0) {
            let mut total = 0.0;
            for hits in hit_vectors(&layout.blocks) {
                let by_z: f64 = (0..=layout.channels())
                    .map(|z| preemption_prob(&layout, &hits, z, q_c))
                    .sum();
                let marginal = preemption_prob_marginal(&layout, &hits, q_c);
                prop_assert!((by_z - marginal).abs() < 1e-12);
                total += marginal;
            }
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn arrangement_is_a_probability(n in 2u32..200, a in 0u32..100, p in 0.0f64..1.0) {
            prop_assume!(2 * a <= n);
            let one = arrangement_prob(n, p, a, 1);
            prop_assert!((0.0..=1.0).contains(&one));
            prop_assert!((one + arrangement_prob(n, p, a, 0) - 1.0).abs() < 1e-15);
        }
    }
}
