//! Paired significance testing: two-sided Wilcoxon signed-rank (exact by
//! enumeration for small n, normal approximation with tie correction beyond)
//! and Benjamini-Hochberg step-up selection.

use statrs::distribution::{ContinuousCDF, Normal};

use super::EvalError;

/// Largest n for which the exact signed-rank null distribution is used.
pub const WILCOXON_EXACT_LIMIT: usize = 25;

/// Two-sided Wilcoxon signed-rank p-value for paired samples. Zero
/// differences are dropped; fewer than six non-zero pairs is an error.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::DimensionMismatch {
            rows: a.len(),
            targets: b.len(),
        });
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n < 6 {
        return Err(EvalError::TooFewPairs { nonzero: n });
    }

    let ranks = average_ranks(&diffs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();

    if n <= WILCOXON_EXACT_LIMIT {
        Ok(exact_two_sided_p(&ranks, w_plus))
    } else {
        Ok(normal_two_sided_p(&diffs, w_plus))
    }
}

/// Ranks of |d| in ascending order, with tied values sharing their average
/// rank.
fn average_ranks(diffs: &[f64]) -> Vec<f64> {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // positions i..=j are 1-based ranks i+1..=j+1
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Exact null distribution of W+ by dynamic programming over doubled ranks
/// (average ranks are half-integers, so doubling makes them exact integers).
fn exact_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let mut table = vec![0u64; max_sum + 1];
    table[0] = 1;
    for &r in &doubled {
        for s in (r..=max_sum).rev() {
            table[s] += table[s - r];
        }
    }
    let total = 2f64.powi(ranks.len() as i32);
    let w2 = (2.0 * w_plus).round() as usize;
    let cdf_le: u64 = table[..=w2].iter().sum();
    let cdf_ge: u64 = table[w2..].iter().sum();
    let p = 2.0 * (cdf_le.min(cdf_ge) as f64) / total;
    p.min(1.0)
}

fn normal_two_sided_p(diffs: &[f64], w_plus: f64) -> f64 {
    let n = diffs.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    // Tie correction: subtract (t^3 - t)/48 per group of tied |d|.
    let mut sorted: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        variance -= (t * t * t - t) / 48.0;
        i = j + 1;
    }
    let z = (w_plus - mean) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0)
}

/// Benjamini-Hochberg step-up rule at level `q`: sort ascending, find the
/// largest k with `p_(k) <= k q / m`, reject hypotheses 1..=k. Returns flags
/// in the input order.
pub fn benjamini_hochberg(p_values: &[f64], q: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
    let mut cutoff = 0;
    for (rank0, &idx) in order.iter().enumerate() {
        let k = rank0 + 1;
        if p_values[idx] <= k as f64 * q / m as f64 {
            cutoff = k;
        }
    }
    let mut flags = vec![false; m];
    for &idx in &order[..cutoff] {
        flags[idx] = true;
    }
    flags
}
