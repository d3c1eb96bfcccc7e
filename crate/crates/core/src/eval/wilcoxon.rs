//! Two-sided Wilcoxon signed-rank test on paired samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of non-zero differences handled by the exact distribution.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub p_value: f64,
    /// Pairs left after discarding zero differences.
    pub n: usize,
    pub method: WilcoxonMethod,
}

/// Average ranks of `values` (ascending), doubled so ties stay integral.
fn doubled_ranks(values: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share rank (start+1+end)/2
        let doubled = (start + 1 + end) as u64;
        for &i in &order[start..end] {
            ranks[i] = doubled;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidConfig(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if let Some(i) = diffs.iter().position(|d| !d.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            w_plus: 0.0,
            p_value: 1.0,
            n: 0,
            method: WilcoxonMethod::Exact,
        });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_ranks(&magnitudes);
    let total2: u64 = ranks.iter().sum();
    let w_plus2: u64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_plus = w_plus2 as f64 / 2.0;
    let statistic = w_plus.min((total2 - w_plus2) as f64 / 2.0);

    let (p_value, method) = if n <= EXACT_LIMIT {
        (exact_p_value(&ranks, w_plus2), WilcoxonMethod::Exact)
    } else {
        (normal_p_value(n, &ties, w_plus), WilcoxonMethod::Normal)
    };
    Ok(WilcoxonResult {
        statistic,
        w_plus,
        p_value: p_value.min(1.0),
        n,
        method,
    })
}

/// Share of the `2^n` sign assignments at least as far from the centre as
/// the observed doubled statistic.
fn exact_p_value(ranks: &[u64], observed2: u64) -> f64 {
    let total2: u64 = ranks.iter().sum();
    let mut counts = vec![0f64; total2 as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let centre2 = total2 as i64;
    let dev = (2 * observed2 as i64 - centre2).abs();
    let extreme: f64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| (2 * *s as i64 - centre2).abs() >= dev)
        .map(|(_, c)| c)
        .sum();
    extreme / 2f64.powi(ranks.len() as i32)
}

/// Normal approximation with tie and continuity correction.
fn normal_p_value(n: usize, ties: &[usize], w_plus: f64) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}
