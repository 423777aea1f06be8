//! The credal set induced by a consonant conformal transducer and its
//! epistemic uncertainty measures.
//!
//! A consonant profile `pi` defines the plausibility measure
//! `upper(A) = max_{y in A} pi(y)` (with `upper({}) = 0`) and its conjugate
//! `lower(A) = 1 - upper(A^c)`. Two maximum-mean-imprecision quantities are
//! computed in closed form:
//!
//! * MMI-TV, the largest `|upper(A) - lower(A)|` over events, which is the
//!   second-largest p-value;
//! * MMI-pi, the gap between the upper and lower Choquet expectations of `pi`
//!   itself, `sum_{k=2}^{K+1} (pi_(k-1) - pi_(k)) * pi_(k)` over the
//!   descending p-values with `pi_(K+1) = 0`.
//!
//! The supremum over an empty set is taken to be 0 throughout. One
//! consequence: a flat profile `[1, 1, ..., 1]` has MMI-TV 1 but MMI-pi 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transducer::{PValueProfile, RegressionTransducer};

/// Maxitive upper probability of a consonant p-value profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PlausibilityMeasure {
    profile: PValueProfile,
}

impl PlausibilityMeasure {
    pub fn new(profile: PValueProfile) -> Result<Self> {
        if !profile.is_consonant() {
            return Err(Error::NotConsonant);
        }
        Ok(PlausibilityMeasure { profile })
    }

    /// From raw values in `[0, 1]` whose maximum is exactly 1.
    pub fn from_pvalues(pvalues: Vec<f64>) -> Result<Self> {
        Self::new(PValueProfile::from_pvalues(pvalues)?)
    }

    pub fn profile(&self) -> &PValueProfile {
        &self.profile
    }

    pub fn pvalues(&self) -> &[f64] {
        self.profile.pvalues()
    }

    pub fn labels(&self) -> usize {
        self.profile.labels()
    }

    /// Panics if a label in `event` is out of range.
    pub fn upper_prob(&self, event: &[usize]) -> f64 {
        let pv = self.pvalues();
        event.iter().map(|&y| pv[y]).fold(0.0, f64::max)
    }

    pub fn lower_prob(&self, event: &[usize]) -> f64 {
        1.0 - self.upper_prob(&complement(event, self.labels()))
    }

    /// Descending p-values, duplicates kept.
    fn sorted_desc(&self) -> Vec<f64> {
        let mut v = self.pvalues().to_vec();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Smallest event whose lower probability reaches `1 - alpha`.
    ///
    /// Labels are added in descending p-value order. After the `j` most
    /// plausible labels are in, the lower probability is `1 - pi_(j+1)`, and
    /// no `j`-element event can do better because its complement always
    /// contains one of the `j + 1` most plausible labels. So the first prefix
    /// with `pi_(j+1) <= alpha` is minimal.
    pub fn ihdr(&self, alpha: f64) -> Result<Vec<usize>> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidAlpha(alpha));
        }
        let order = self.profile.descending_labels();
        let pv = self.pvalues();
        let size = order.iter().position(|&y| pv[y] <= alpha).unwrap_or(order.len());
        let mut region = order[..size].to_vec();
        region.sort_unstable();
        Ok(region)
    }

    pub fn mmi_tv(&self) -> Result<f64> {
        if self.labels() < 2 {
            return Err(Error::TooFewLabels {
                needed: 2,
                have: self.labels(),
            });
        }
        Ok(self.sorted_desc()[1])
    }

    pub fn mmi_pi(&self) -> f64 {
        let sorted = self.sorted_desc();
        let mut total = 0.0;
        for k in 1..=sorted.len() {
            let current = sorted.get(k).copied().unwrap_or(0.0);
            total += (sorted[k - 1] - current) * current;
        }
        total
    }

    /// `int_0^1 sup_{y not in C_alpha} pi(y) d alpha`, integrated exactly over
    /// the cells between consecutive distinct p-values, where the region is
    /// constant.
    pub fn mmi_pi_integral(&self) -> f64 {
        let mut breaks: Vec<f64> = self.pvalues().to_vec();
        breaks.push(0.0);
        breaks.push(1.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let pv = self.pvalues();
        let mut total = 0.0;
        for cell in breaks.windows(2) {
            let (a, b) = (cell[0], cell[1]);
            let mid = 0.5 * (a + b);
            let excluded_sup = pv.iter().filter(|&&p| p <= mid).fold(0.0, |m: f64, &p| m.max(p));
            total += (b - a) * excluded_sup;
        }
        total
    }

    /// MMI-TV, MMI-pi and region sizes at each requested level.
    pub fn report(&self, alphas: &[f64]) -> Result<UncertaintyReport> {
        let set_sizes = alphas
            .iter()
            .map(|&alpha| {
                Ok(SetSize {
                    alpha,
                    size: self.profile.prediction_set(alpha)?.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(UncertaintyReport {
            mmi_tv: self.mmi_tv()?,
            mmi_pi: self.mmi_pi(),
            set_sizes,
        })
    }
}

/// Labels in `0..labels` not in `event`.
pub fn complement(event: &[usize], labels: usize) -> Vec<usize> {
    let mut member = vec![false; labels];
    for &y in event {
        member[y] = true;
    }
    (0..labels).filter(|&y| !member[y]).collect()
}

pub fn upper_prob(m: &PlausibilityMeasure, event: &[usize]) -> f64 {
    m.upper_prob(event)
}

pub fn lower_prob(m: &PlausibilityMeasure, event: &[usize]) -> f64 {
    m.lower_prob(event)
}

pub fn ihdr(m: &PlausibilityMeasure, alpha: f64) -> Result<Vec<usize>> {
    m.ihdr(alpha)
}

pub fn mmi_tv(m: &PlausibilityMeasure) -> Result<f64> {
    m.mmi_tv()
}

pub fn mmi_pi(m: &PlausibilityMeasure) -> f64 {
    m.mmi_pi()
}

pub fn mmi_pi_integral(m: &PlausibilityMeasure) -> f64 {
    m.mmi_pi_integral()
}

pub fn report(m: &PlausibilityMeasure, alphas: &[f64]) -> Result<UncertaintyReport> {
    m.report(alphas)
}

/// MMI-pi of a split-conformal regressor whose score satisfies
/// `inf_{y not in C_alpha} s(x, y) = q_hat(1 - alpha)`:
///
/// ```text
/// 1 + int_0^1 (1 - ceil((n_cal + 1)(1 - alpha))) / (n_cal + 1) d alpha
/// ```
///
/// The ceiling is constant on each cell `((j-1)/m, j/m)`, `m = n_cal + 1`,
/// so the integral is an exact finite sum. The value does not depend on the
/// test input.
pub fn mmi_regression(n_cal: usize) -> Result<f64> {
    if n_cal < 1 {
        return Err(Error::Empty("calibration set"));
    }
    let m = (n_cal + 1) as f64;
    let total: f64 = (1..=n_cal + 1)
        .map(|j| {
            let mid = (j as f64 - 0.5) / m;
            let k = (m * (1.0 - mid)).ceil();
            (1.0 + (1.0 - k) / m) / m
        })
        .sum();
    Ok(total)
}

/// MMI-pi of one regression test input, computed from the transducer itself
/// on a response grid rather than from the closed form.
///
/// For each cell of the p-value lattice the region `{y : pi(y) > alpha}` is
/// read off the grid, and `inf_{y not in C_alpha} s(x, y)` is located by
/// bisecting every grid step where membership flips. The count
/// `#{s_i >= t}` is left-continuous in `t`, so it is evaluated at the
/// in-region side of each bisected boundary. The integrand is
/// `(1 + #{s_i >= inf s}) / (n_cal + 1)`, with `inf` of an empty set `+inf`.
pub fn mmi_regression_grid(transducer: &RegressionTransducer<'_>, points: usize) -> f64 {
    let cal = transducer.calibration();
    let m = cal.n_cal() + 1;
    let (lo, hi) = transducer.grid_span();
    let grid = transducer.grid(lo, hi, points);
    let mut total = 0.0;
    for j in 1..=m {
        let alpha = (j as f64 - 0.5) / m as f64;
        let inside: Vec<bool> = grid.iter().map(|&(_, p)| p > alpha).collect();
        let mut inf_score = f64::INFINITY;
        for (g, &(y, _)) in grid.iter().enumerate() {
            if !inside[g] {
                inf_score = inf_score.min(transducer.score(y));
            }
        }
        for g in 1..grid.len() {
            if inside[g] == inside[g - 1] {
                continue;
            }
            let (mut y_in, mut y_out) = if inside[g] {
                (grid[g].0, grid[g - 1].0)
            } else {
                (grid[g - 1].0, grid[g].0)
            };
            for _ in 0..200 {
                let mid = 0.5 * (y_in + y_out);
                if mid == y_in || mid == y_out {
                    break;
                }
                if transducer.pvalue(mid) > alpha {
                    y_in = mid;
                } else {
                    y_out = mid;
                }
            }
            inf_score = inf_score.min(transducer.score(y_in));
        }
        let count = if inf_score.is_finite() {
            cal.count_at_least(inf_score)
        } else {
            0
        };
        total += (1 + count) as f64 / m as f64 / m as f64;
    }
    total
}

/// Size of the prediction region at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetSize {
    pub alpha: f64,
    pub size: usize,
}

/// Uncertainty summary of one test input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub mmi_tv: f64,
    pub mmi_pi: f64,
    pub set_sizes: Vec<SetSize>,
}

impl UncertaintyReport {
    pub fn size_at(&self, alpha: f64) -> Option<usize> {
        self.set_sizes.iter().find(|s| s.alpha == alpha).map(|s| s.size)
    }

    /// `instance_id,mmi_tv,mmi_pi,size_at_<alpha>...`
    pub fn csv_header(alphas: &[f64]) -> String {
        let mut header = String::from("instance_id,mmi_tv,mmi_pi");
        for a in alphas {
            header.push_str(&format!(",size_at_{a}"));
        }
        header
    }

    pub fn csv_row(&self, instance_id: usize) -> String {
        let mut row = format!("{instance_id},{},{}", self.mmi_tv, self.mmi_pi);
        for s in &self.set_sizes {
            row.push_str(&format!(",{}", s.size));
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scores::{RegressionPrediction, ScoreKind, ScoreSpec};
    use crate::transducer::CalibrationSet;
    use proptest::prelude::*;

    fn pm(v: &[f64]) -> PlausibilityMeasure {
        PlausibilityMeasure::from_pvalues(v.to_vec()).unwrap()
    }

    #[test]
    fn requires_consonance() {
        assert!(matches!(
            PlausibilityMeasure::from_pvalues(vec![0.9, 0.5]),
            Err(Error::NotConsonant)
        ));
    }

    #[test]
    fn upper_and_lower_examples() {
        let m = pm(&[1.0, 0.5, 0.1]);
        assert_eq!(m.upper_prob(&[1, 2]), 0.5);
        assert_eq!(m.upper_prob(&[]), 0.0);
        assert_eq!(m.upper_prob(&[0, 1, 2]), 1.0);
        assert_eq!(m.lower_prob(&[0]), 0.5);
        assert_eq!(m.lower_prob(&[0, 1, 2]), 1.0);
        assert_eq!(m.lower_prob(&[]), 0.0);
    }

    #[test]
    fn ihdr_examples() {
        let m = pm(&[1.0, 0.5, 0.1]);
        assert_eq!(m.ihdr(0.3).unwrap(), vec![0, 1]);
        assert_eq!(m.ihdr(0.3).unwrap(), m.profile().prediction_set(0.3).unwrap().labels);
        assert_eq!(m.ihdr(0.0).unwrap(), vec![0, 1, 2]);
        assert_eq!(m.ihdr(0.99).unwrap(), vec![0]);
    }

    #[test]
    fn mmi_tv_examples() {
        assert_eq!(pm(&[1.0, 0.4, 0.1]).mmi_tv().unwrap(), 0.4);
        assert_eq!(pm(&[1.0, 0.0, 0.0, 0.0]).mmi_tv().unwrap(), 0.0);
        assert_eq!(pm(&[1.0; 5]).mmi_tv().unwrap(), 1.0);
        assert!(matches!(pm(&[1.0]).mmi_tv(), Err(Error::TooFewLabels { .. })));
    }

    #[test]
    fn mmi_pi_examples() {
        assert!((pm(&[1.0, 0.5, 0.25]).mmi_pi() - 0.3125).abs() < 1e-15);
        assert_eq!(pm(&[1.0, 0.0, 0.0]).mmi_pi(), 0.0);
        assert_eq!(pm(&[1.0, 1.0, 1.0]).mmi_pi(), 0.0);
        assert!((pm(&[1.0, 0.6, 0.6, 0.2]).mmi_pi() - 0.32).abs() < 1e-15);
    }

    #[test]
    fn mmi_pi_integral_examples() {
        assert!((pm(&[1.0, 0.5, 0.25]).mmi_pi_integral() - 0.3125).abs() < 1e-15);
        assert!((pm(&[1.0, 0.6, 0.6, 0.2]).mmi_pi_integral() - 0.32).abs() < 1e-15);
        assert_eq!(pm(&[1.0, 1.0, 1.0]).mmi_pi_integral(), 0.0);
    }

    /// `(m + 1) / (2m)` with `m = n_cal + 1`, from integrating the ceiling
    /// staircase by hand.
    fn regression_closed_form(n_cal: usize) -> f64 {
        (n_cal as f64 + 2.0) / (2.0 * (n_cal as f64 + 1.0))
    }

    #[test]
    fn mmi_regression_examples() {
        assert!((mmi_regression(1).unwrap() - 0.75).abs() < 1e-12);
        assert!((mmi_regression(3).unwrap() - 0.625).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for n in [1, 2, 5, 10, 100, 1000, 10_000] {
            let v = mmi_regression(n).unwrap();
            assert!((v - regression_closed_form(n)).abs() < 1e-12);
            assert!(v < prev && v > 0.5);
            prev = v;
        }
        assert!((mmi_regression(10_000).unwrap() - 0.5).abs() < 1e-4);
        assert!(mmi_regression(0).is_err());
    }

    #[test]
    fn regression_grid_matches_closed_form() {
        let cal = CalibrationSet::calibrate(&[0.3, 1.2, 0.7], 1e-9, 1).unwrap();
        for kind in [ScoreKind::AbsResidual, ScoreKind::WeightedResidual, ScoreKind::Cqr] {
            let pred = RegressionPrediction::new(2.0, 1.5, 1.4, 2.6).unwrap();
            let t = RegressionTransducer::new(&cal, pred, ScoreSpec::new(kind)).unwrap();
            let grid = mmi_regression_grid(&t, 1001);
            assert!((grid - 0.625).abs() < 1e-3, "{kind}: {grid}");
        }
    }

    #[test]
    fn report_examples() {
        let m = pm(&[1.0, 0.5, 0.1]);
        let r = m.report(&[0.05, 0.3]).unwrap();
        assert_eq!(r.size_at(0.05), Some(3));
        assert_eq!(r.size_at(0.3), Some(2));
        assert_eq!(r.mmi_tv, 0.5);
        assert_eq!(r.mmi_pi, m.mmi_pi());
        assert!(m.report(&[]).unwrap().set_sizes.is_empty());
        assert_eq!(m.report(&[0.05, 0.3]).unwrap(), r);
        assert_eq!(UncertaintyReport::csv_header(&[0.05, 0.3]), "instance_id,mmi_tv,mmi_pi,size_at_0.05,size_at_0.3");
        assert_eq!(r.csv_row(7), format!("7,0.5,{},3,2", m.mmi_pi()));
    }

    pub(crate) fn consonant_profiles(max_k: usize) -> impl Strategy<Value = PlausibilityMeasure> {
        (prop::collection::vec(0.0f64..=1.0, 1..max_k), any::<prop::sample::Index>()).prop_map(
            |(mut v, idx)| {
                let top = idx.index(v.len() + 1);
                v.insert(top, 1.0);
                PlausibilityMeasure::from_pvalues(v).unwrap()
            },
        )
    }

    fn subset(mask: u32, k: usize) -> Vec<usize> {
        (0..k).filter(|&y| mask >> y & 1 == 1).collect()
    }

    #[test]
    fn partial_shrink_can_raise_mmi_pi() {
        let before = PlausibilityMeasure::from_pvalues(vec![1.0, 0.75]).unwrap();
        let after = PlausibilityMeasure::from_pvalues(vec![1.0, 0.5]).unwrap();
        assert!(after.mmi_pi() > before.mmi_pi());
        assert!(after.mmi_tv().unwrap() < before.mmi_tv().unwrap());
    }

    proptest! {
        #[test]
        fn maxitivity(m in consonant_profiles(10), a in any::<u32>(), b in any::<u32>()) {
            let k = m.labels();
            let (a, b) = (subset(a, k), subset(b, k));
            let mut union = a.clone();
            union.extend(&b);
            prop_assert_eq!(m.upper_prob(&union), m.upper_prob(&a).max(m.upper_prob(&b)));
        }

        #[test]
        fn duality_exhaustive(m in consonant_profiles(8)) {
            let k = m.labels();
            for mask in 0..(1u32 << k) {
                let a = subset(mask, k);
                let ac = complement(&a, k);
                prop_assert!((m.upper_prob(&a) + m.lower_prob(&ac) - 1.0).abs() < 1e-15);
            }
        }

        #[test]
        fn bounds_hold(m in consonant_profiles(12)) {
            let tv = m.mmi_tv().unwrap_or(0.0);
            let pi = m.mmi_pi();
            prop_assert!(0.0 <= pi && pi <= tv + 1e-15 && tv <= 1.0);
        }

        #[test]
        fn integral_matches_closed_form(m in consonant_profiles(12)) {
            prop_assert!((m.mmi_pi_integral() - m.mmi_pi()).abs() <= 1e-12);
        }

        #[test]
        fn information_gain_never_increases_mmi(
            m in consonant_profiles(10),
            which in any::<prop::sample::Index>(),
            shrink in 0.0f64..1.0,
        ) {
            let pv = m.pvalues().to_vec();
            let top = m.profile().top_label().unwrap();
            let candidates: Vec<usize> = (0..pv.len()).filter(|&y| y != top && pv[y] > 0.0).collect();
            if candidates.is_empty() {
                return Ok(());
            }
            let y = candidates[which.index(candidates.len())];
            let mut smaller = pv.clone();
            smaller[y] *= shrink;
            let after = PlausibilityMeasure::from_pvalues(smaller).unwrap();
            prop_assert!(after.mmi_tv().unwrap() <= m.mmi_tv().unwrap());
            // mmi_pi is only monotone when the label is ruled out entirely
            let mut ruled_out = pv.clone();
            ruled_out[y] = 0.0;
            let after = PlausibilityMeasure::from_pvalues(ruled_out).unwrap();
            prop_assert!(after.mmi_pi() <= m.mmi_pi() + 1e-15);
        }

        #[test]
        fn ihdr_equals_prediction_set(m in consonant_profiles(10), eps in prop::sample::select(vec![-1e-9, 0.0, 1e-9])) {
            let mut alphas: Vec<f64> = m.pvalues().iter().map(|p| p + eps).collect();
            alphas.extend([0.0, 0.5, 0.999]);
            for a in alphas.into_iter().filter(|a| (0.0..1.0).contains(a)) {
                prop_assert_eq!(m.ihdr(a).unwrap(), m.profile().prediction_set(a).unwrap().labels);
            }
        }
    }
}
