//! Non-parametric statistics for paired RMSE comparisons: the Wilcoxon
//! signed-rank test and Cliff's delta effect size.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped; ties get midranks. Exact by sign-assignment enumeration for
/// n ≤ 12, normal approximation with tie correction above.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("wilcoxon".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("wilcoxon input".into()));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Ok(1.0);
    }
    let n = diffs.len();
    let ranks = midranks(&diffs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();

    if n <= 12 {
        // enumerate all 2^n sign assignments of the observed ranks
        let total = 1u32 << n;
        let mut le = 0u32;
        let mut ge = 0u32;
        for mask in 0..total {
            let w: f64 = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| ranks[i])
                .sum();
            if w <= w_plus + 1e-9 {
                le += 1;
            }
            if w >= w_plus - 1e-9 {
                ge += 1;
            }
        }
        let tail = (le.min(ge) as f64) / total as f64;
        Ok((2.0 * tail).min(1.0))
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = tie_groups(&ranks)
            .into_iter()
            .map(|t| {
                let t = t as f64;
                (t * t * t - t) / 48.0
            })
            .sum();
        let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
        if variance <= 0.0 {
            return Ok(1.0);
        }
        let z = (w_plus - mean) / variance.sqrt();
        let normal = Normal::new(0.0, 1.0).unwrap();
        Ok((2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0))
    }
}

/// Midranks of |diffs|.
fn midranks(diffs: &[f64]) -> Vec<f64> {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().partial_cmp(&diffs[j].abs()).unwrap());
    let mut ranks = vec![0.0; n];
    let mut at = 0;
    while at < n {
        let mut end = at;
        while end + 1 < n && diffs[order[end + 1]].abs() == diffs[order[at]].abs() {
            end += 1;
        }
        let mid = (at + end) as f64 / 2.0 + 1.0;
        for &idx in &order[at..=end] {
            ranks[idx] = mid;
        }
        at = end + 1;
    }
    ranks
}

fn tie_groups(ranks: &[f64]) -> Vec<usize> {
    let mut sorted = ranks.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut groups = Vec::new();
    let mut at = 0;
    while at < sorted.len() {
        let mut end = at;
        while end + 1 < sorted.len() && sorted[end + 1] == sorted[at] {
            end += 1;
        }
        if end > at {
            groups.push(end - at + 1);
        }
        at = end + 1;
    }
    groups
}

/// Cliff's delta: (#{a_i > b_j} − #{a_i < b_j}) / (|a|·|b|), in [−1, 1].
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("cliffs_delta".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cliffs_delta input".into()));
    }
    let mut greater = 0i64;
    let mut less = 0i64;
    for x in a {
        for y in b {
            if x > y {
                greater += 1;
            } else if x < y {
                less += 1;
            }
        }
    }
    Ok((greater - less) as f64 / (a.len() * b.len()) as f64)
}

/// Conventional Cliff's delta magnitude thresholds.
pub const CLIFFS_MEDIUM: f64 = 0.33;
pub const CLIFFS_LARGE: f64 = 0.474;
