//! Seeded sampling helpers shared by validation probes, the solver and the
//! simulator. All randomness in the crate flows through ChaCha12 streams so
//! identical seeds give identical results on every platform.

use crate::game::StationaryStrategy;
use rand_core::RngCore;

/// Uniform draw in [0,1) with 53 bits of precision.
pub(crate) fn next_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Flat Dirichlet row: normalized unit exponentials.
pub(crate) fn dirichlet_row(rng: &mut impl RngCore, n: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n)
        .map(|_| {
            let u = 1.0 - next_f64(rng); // in (0,1]
            -u.ln()
        })
        .collect();
    let sum: f64 = row.iter().sum();
    for v in &mut row {
        *v /= sum;
    }
    row
}

pub(crate) fn sample_strategy(rng: &mut impl RngCore, counts: &[usize]) -> StationaryStrategy {
    let rows = counts.iter().map(|&c| dirichlet_row(rng, c)).collect();
    StationaryStrategy::new(rows).expect("sampled rows are valid by construction")
}

/// Categorical draw from an (unnormalized nonnegative) weight row.
pub(crate) fn sample_index(rng: &mut impl RngCore, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = next_f64(rng) * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Mixed-radix enumeration of deterministic choice vectors; yields up to
/// `limit` vectors (exhaustive when the product of counts fits).
pub(crate) fn deterministic_choices(counts: &[usize], limit: usize) -> (Vec<Vec<usize>>, bool) {
    let total: usize = counts
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c).filter(|&t| t <= limit))
        .unwrap_or(limit + 1);
    if total <= limit {
        let mut out = Vec::with_capacity(total);
        let mut cur = vec![0usize; counts.len()];
        loop {
            out.push(cur.clone());
            let mut i = counts.len();
            loop {
                if i == 0 {
                    return (out, true);
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] < counts[i] {
                    break;
                }
                cur[i] = 0;
            }
        }
    }
    (Vec::new(), false)
}
