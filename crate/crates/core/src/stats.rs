//! Paired one-sided Wilcoxon signed-rank test and small summary helpers.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Minimum number of non-zero paired differences.
pub const MIN_DIFFERENCES: usize = 5;
/// Largest sample size handled by exact enumeration.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

/// Outcome of a one-sided test of the alternative "a > b".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Differences remaining after dropping zeros.
    pub n: usize,
    pub method: WilcoxonMethod,
}

/// Absolute differences ranked with average ranks for ties, stored doubled so
/// they stay integral.
struct SignedRanks {
    doubled: Vec<u64>,
    positive: Vec<bool>,
    tie_sizes: Vec<usize>,
}

impl SignedRanks {
    fn new(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::UnpairedSamples(a.len(), b.len()));
        }
        let mut diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
        if diffs.len() < MIN_DIFFERENCES {
            return Err(Error::TooFewDifferences {
                needed: MIN_DIFFERENCES,
                have: diffs.len(),
            });
        }
        diffs.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
        let n = diffs.len();
        let mut doubled = vec![0; n];
        let mut tie_sizes = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && diffs[j + 1].abs() == diffs[i].abs() {
                j += 1;
            }
            // ranks i+1..=j+1 share (i+1 + j+1)/2
            for r in &mut doubled[i..=j] {
                *r = (i + j + 2) as u64;
            }
            tie_sizes.push(j - i + 1);
            i = j + 1;
        }
        Ok(SignedRanks {
            doubled,
            positive: diffs.iter().map(|d| *d > 0.0).collect(),
            tie_sizes,
        })
    }

    fn doubled_statistic(&self) -> u64 {
        self.doubled.iter().zip(&self.positive).filter(|(_, p)| **p).map(|(r, _)| r).sum()
    }

    /// Null probabilities of every doubled statistic value.
    fn null_distribution(&self) -> Vec<f64> {
        let total: u64 = self.doubled.iter().sum();
        let mut counts = vec![0.0f64; total as usize + 1];
        counts[0] = 1.0;
        let mut reach = 0usize;
        for &r in &self.doubled {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] != 0.0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let scale = 0.5f64.powi(self.doubled.len() as i32);
        counts.iter().map(|c| c * scale).collect()
    }
}

/// Exact null distribution regardless of sample size.
pub fn wilcoxon_exact(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let ranks = SignedRanks::new(a, b)?;
    let w = ranks.doubled_statistic() as usize;
    let dist = ranks.null_distribution();
    let p: f64 = dist[w..].iter().sum();
    Ok(WilcoxonResult {
        statistic: w as f64 / 2.0,
        p_value: p.min(1.0),
        n: ranks.doubled.len(),
        method: WilcoxonMethod::Exact,
    })
}

/// Normal approximation with tie-corrected variance and continuity correction.
pub fn wilcoxon_normal(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let ranks = SignedRanks::new(a, b)?;
    let n = ranks.doubled.len() as f64;
    let w = ranks.doubled_statistic() as f64 / 2.0;
    let mean = n * (n + 1.0) / 4.0;
    let ties: f64 = ranks.tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum();
    let sd = (n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0).sqrt();
    let z = (w - mean - 0.5) / sd;
    let normal = Normal::standard();
    Ok(WilcoxonResult {
        statistic: w,
        p_value: normal.sf(z),
        n: ranks.doubled.len(),
        method: WilcoxonMethod::Normal,
    })
}

/// Exact for up to [`EXACT_MAX_N`] non-zero differences, normal beyond.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let exact = wilcoxon_exact(a, b)?;
    if exact.n <= EXACT_MAX_N {
        Ok(exact)
    } else {
        wilcoxon_normal(a, b)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation over sqrt(n); zero for fewer than two values.
pub fn standard_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}
