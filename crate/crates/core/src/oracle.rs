//! Exponential-time reference implementations over all `2^K` events.
//!
//! Used by the test suites and by `mmicp oracle-check` to validate the
//! closed forms in [`crate::imprecise`]. Events are bitmasks over at most
//! [`MAX_ORACLE_LABELS`] labels.

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::imprecise::PlausibilityMeasure;
use crate::rng;

pub const MAX_ORACLE_LABELS: usize = 12;

const CAPACITY_TOLERANCE: f64 = 1e-12;

fn check_size(labels: usize) -> Result<()> {
    if labels > MAX_ORACLE_LABELS {
        Err(Error::LabelSpaceTooLarge(labels))
    } else if labels == 0 {
        Err(Error::Empty("label space"))
    } else {
        Ok(())
    }
}

/// Labels in the event `mask`.
pub fn members(mask: u32, labels: usize) -> Vec<usize> {
    (0..labels).filter(|&y| mask >> y & 1 == 1).collect()
}

pub fn mask_of(event: &[usize]) -> u32 {
    event.iter().fold(0, |m, &y| m | 1 << y)
}

/// A normalized monotone set function, tabulated over every event.
#[derive(Debug, Clone, PartialEq)]
pub struct Capacity {
    labels: usize,
    values: Vec<f64>,
}

impl Capacity {
    pub fn new(labels: usize, values: Vec<f64>) -> Result<Self> {
        check_size(labels)?;
        let full = (1usize << labels) - 1;
        if values.len() != full + 1 {
            return Err(Error::InvalidCapacity(format!(
                "expected {} values, got {}",
                full + 1,
                values.len()
            )));
        }
        if values[0].abs() > CAPACITY_TOLERANCE || (values[full] - 1.0).abs() > CAPACITY_TOLERANCE {
            return Err(Error::InvalidCapacity("must be 0 on the empty set and 1 on the full set".into()));
        }
        for mask in 1..=full {
            for y in 0..labels {
                if mask >> y & 1 == 1 && values[mask ^ (1 << y)] > values[mask] + CAPACITY_TOLERANCE {
                    return Err(Error::InvalidCapacity(format!("not monotone at event {mask:#b}")));
                }
            }
        }
        Ok(Capacity { labels, values })
    }

    fn tabulate(labels: usize, f: impl Fn(u32) -> f64) -> Result<Self> {
        check_size(labels)?;
        let values = (0..1u32 << labels).map(f).collect();
        Capacity::new(labels, values)
    }

    /// `A -> max_{y in A} pi(y)`.
    pub fn upper_of(m: &PlausibilityMeasure) -> Result<Self> {
        let pv = m.pvalues();
        Self::tabulate(pv.len(), |mask| {
            members(mask, pv.len()).into_iter().map(|y| pv[y]).fold(0.0, f64::max)
        })
    }

    /// `A -> 1 - max_{y not in A} pi(y)`.
    pub fn lower_of(m: &PlausibilityMeasure) -> Result<Self> {
        Self::upper_of(m)?.conjugate()
    }

    /// `A -> sum_{y in A} p(y)`.
    pub fn additive(probs: &[f64]) -> Result<Self> {
        Self::tabulate(probs.len(), |mask| members(mask, probs.len()).into_iter().map(|y| probs[y]).sum())
    }

    /// 1 on the full set, 0 elsewhere.
    pub fn vacuous(labels: usize) -> Result<Self> {
        let full = (1u32 << labels) - 1;
        Self::tabulate(labels, |mask| if mask == full { 1.0 } else { 0.0 })
    }

    /// `A -> 1 - nu(A^c)`.
    pub fn conjugate(&self) -> Result<Self> {
        let full = (1usize << self.labels) - 1;
        let values = (0..=full).map(|mask| 1.0 - self.values[full ^ mask]).collect();
        Capacity::new(self.labels, values)
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn value(&self, mask: u32) -> f64 {
        self.values[mask as usize]
    }
}

/// `inf f + int_{inf f}^{sup f} nu({f >= t}) dt`, exact over the distinct
/// values of `f`.
pub fn choquet_integral(nu: &Capacity, f: &[f64]) -> Result<f64> {
    check_size(f.len())?;
    if f.len() != nu.labels() {
        return Err(Error::DimensionMismatch(format!(
            "function over {} labels, capacity over {}",
            f.len(),
            nu.labels()
        )));
    }
    let mut levels = f.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut total = levels[0];
    for w in levels.windows(2) {
        let upper_set = (0..f.len()).filter(|&y| f[y] >= w[1]).fold(0u32, |m, y| m | 1 << y);
        total += (w[1] - w[0]) * nu.value(upper_set);
    }
    Ok(total)
}

/// `max_A |upper(A) - lower(A)|` by enumeration.
pub fn mmi_bruteforce_tv(m: &PlausibilityMeasure) -> Result<f64> {
    let upper = Capacity::upper_of(m)?;
    let lower = upper.conjugate()?;
    Ok((0..1u32 << m.labels())
        .map(|mask| (upper.value(mask) - lower.value(mask)).abs())
        .fold(0.0, f64::max))
}

/// Upper minus lower Choquet expectation of `pi` itself.
pub fn mmi_bruteforce_pi(m: &PlausibilityMeasure) -> Result<f64> {
    let upper = Capacity::upper_of(m)?;
    let lower = upper.conjugate()?;
    Ok(choquet_integral(&upper, m.pvalues())? - choquet_integral(&lower, m.pvalues())?)
}

/// Mass function indexed by event bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    labels: usize,
    masses: Vec<f64>,
}

impl MassFunction {
    pub fn mass(&self, mask: u32) -> f64 {
        self.masses[mask as usize]
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Events with mass above `tol` in absolute value.
    pub fn focal_sets(&self, tol: f64) -> Vec<u32> {
        (0..self.masses.len() as u32).filter(|&m| self.masses[m as usize].abs() > tol).collect()
    }

    /// `A -> sum_{B subset A} m(B)`.
    pub fn reconstruct(&self) -> Vec<f64> {
        (0..self.masses.len() as u32)
            .map(|a| submasks(a).map(|b| self.mass(b)).sum())
            .collect()
    }

    pub fn labels(&self) -> usize {
        self.labels
    }
}

/// Every submask of `a`, including 0 and `a`.
fn submasks(a: u32) -> impl Iterator<Item = u32> {
    let mut next = Some(a);
    std::iter::from_fn(move || {
        let current = next?;
        next = if current == 0 { None } else { Some((current - 1) & a) };
        Some(current)
    })
}

/// `m(A) = sum_{B subset A} (-1)^{|A| - |B|} lp(B)`.
pub fn mobius_inverse(lp: &Capacity) -> Result<MassFunction> {
    check_size(lp.labels())?;
    let masses = (0..1u32 << lp.labels())
        .map(|a| {
            submasks(a)
                .map(|b| {
                    let sign = if (a.count_ones() - b.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * lp.value(b)
                })
                .sum()
        })
        .collect();
    Ok(MassFunction {
        labels: lp.labels(),
        masses,
    })
}

/// `sum_A m(A) log2 |A|` over the Möbius masses of `lp`.
pub fn generalised_hartley(lp: &Capacity) -> Result<f64> {
    let masses = mobius_inverse(lp)?;
    Ok((1..1u32 << lp.labels())
        .map(|a| masses.mass(a) * (a.count_ones() as f64).log2())
        .sum())
}

/// Minimal-cardinality event with `lower(A) >= 1 - alpha`, by enumeration.
/// Among minimal events, prefers larger p-values, then lower indices.
pub fn ihdr_bruteforce(m: &PlausibilityMeasure, alpha: f64) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let lower = Capacity::lower_of(m)?;
    let k = m.labels();
    let pv = m.pvalues();
    let key = |mask: u32| {
        let mut vals: Vec<f64> = members(mask, k).into_iter().map(|y| pv[y]).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    };
    let mut best: Option<u32> = None;
    for mask in 0..1u32 << k {
        if lower.value(mask) < 1.0 - alpha {
            continue;
        }
        best = match best {
            None => Some(mask),
            Some(b) => {
                let better = match mask.count_ones().cmp(&b.count_ones()) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => {
                        let (km, kb) = (key(mask), key(b));
                        match km.partial_cmp(&kb) {
                            Some(std::cmp::Ordering::Greater) => true,
                            Some(std::cmp::Ordering::Equal) => members(mask, k) < members(b, k),
                            _ => false,
                        }
                    }
                };
                Some(if better { mask } else { b })
            }
        };
    }
    Ok(members(best.expect("the full event always qualifies"), k))
}

/// Random consonant profile on the conformal lattice of a random calibration
/// size, so ties between labels occur.
pub fn random_lattice_profile(rng: &mut rng::Rng, labels: usize) -> PlausibilityMeasure {
    let n_cal: usize = rng.random_range(1..=40);
    let m = (n_cal + 1) as f64;
    let mut pv: Vec<f64> = (0..labels)
        .map(|_| rng.random_range(1..=n_cal + 1) as f64 / m)
        .collect();
    let top = rng.random_range(0..labels);
    pv[top] = 1.0;
    PlausibilityMeasure::from_pvalues(pv).expect("consonant by construction")
}

/// Random consonant profile with continuous values.
pub fn random_continuous_profile(rng: &mut rng::Rng, labels: usize) -> PlausibilityMeasure {
    let mut pv: Vec<f64> = (0..labels).map(|_| rng.random::<f64>()).collect();
    let top = rng.random_range(0..labels);
    pv[top] = 1.0;
    PlausibilityMeasure::from_pvalues(pv).expect("consonant by construction")
}

/// Random distribution with masses that are multiples of `2^-10`, so every
/// event probability and every inclusion-exclusion sum is exact in `f64`.
pub fn random_dyadic_distribution(rng: &mut rng::Rng, labels: usize) -> Vec<f64> {
    const UNITS: u32 = 1 << 10;
    let mut cuts: Vec<u32> = (0..labels - 1).map(|_| rng.random_range(1..UNITS)).collect();
    cuts.push(0);
    cuts.push(UNITS);
    cuts.sort_unstable();
    cuts.windows(2).map(|w| (w[1] - w[0]) as f64 / UNITS as f64).collect()
}

/// Settings for [`run_suite`].
#[derive(Debug, Clone, Serialize)]
pub struct SuiteConfig {
    pub max_labels: usize,
    pub profiles: usize,
    pub seed: u64,
    /// Perturbs one closed form so the suite must fail; a self-test hook.
    pub inject_fault: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            max_labels: 10,
            profiles: 500,
            seed: 0,
            inject_fault: false,
        }
    }
}

/// Outcome of one oracle-vs-closed-form comparison family.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub max_error: f64,
    pub first_failure: Option<String>,
}

impl CheckResult {
    fn new(name: &'static str) -> Self {
        CheckResult {
            name,
            cases: 0,
            failures: 0,
            max_error: 0.0,
            first_failure: None,
        }
    }

    fn record(&mut self, error: f64, tolerance: f64, context: impl FnOnce() -> String) {
        self.cases += 1;
        self.max_error = self.max_error.max(error);
        if !(error <= tolerance) {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(context());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs every oracle comparison on seeded random profiles.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    check_size(config.max_labels)?;
    if config.max_labels < 2 {
        return Err(Error::TooFewLabels {
            needed: 2,
            have: config.max_labels,
        });
    }
    let mut draws = rng::stream(config.seed, "oracle-suite", 0);
    let fault = if config.inject_fault { 1e-6 } else { 0.0 };

    let mut tv = CheckResult::new("mmi_tv == enumerated sup |upper - lower|");
    let mut pi = CheckResult::new("mmi_pi == Choquet upper - lower");
    let mut integral = CheckResult::new("mmi_pi_integral == mmi_pi");
    let mut ihdr = CheckResult::new("ihdr == prediction_set == enumerated minimal region");
    let mut chain = CheckResult::new("consonant Mobius masses on the nested chain");
    let mut hartley = CheckResult::new("Hartley: vacuous = log2 K, precise = 0");
    let mut additive = CheckResult::new("Choquet of additive capacity == expectation");

    for case in 0..config.profiles {
        let k = draws.random_range(2..=config.max_labels);
        let m = if case % 2 == 0 {
            random_lattice_profile(&mut draws, k)
        } else {
            random_continuous_profile(&mut draws, k)
        };
        let show = || format!("{:?}", m.pvalues());

        let closed_tv = m.mmi_tv()? + fault;
        tv.record((closed_tv - mmi_bruteforce_tv(&m)?).abs(), 1e-12, show);

        let closed_pi = m.mmi_pi();
        pi.record((closed_pi - mmi_bruteforce_pi(&m)?).abs(), 1e-12, show);
        integral.record((m.mmi_pi_integral() - closed_pi).abs(), 1e-12, show);

        let mut alphas: Vec<f64> = vec![0.0];
        for &p in m.pvalues() {
            alphas.extend([p - 1e-9, p, p + 1e-9]);
        }
        for alpha in alphas.into_iter().filter(|a| (0.0..1.0).contains(a)) {
            let greedy = m.ihdr(alpha)?;
            let region = m.profile().prediction_set(alpha)?.labels;
            let brute = ihdr_bruteforce(&m, alpha)?;
            let mismatch = greedy != region || greedy != brute;
            ihdr.record(if mismatch { 1.0 } else { 0.0 }, 0.0, || {
                format!("{:?} alpha={alpha}: greedy {greedy:?}, region {region:?}, enumerated {brute:?}", m.pvalues())
            });
        }

        let masses = mobius_inverse(&Capacity::lower_of(&m)?)?;
        let order = m.profile().descending_labels();
        let nested: Vec<u32> = (1..=k).map(|j| mask_of(&order[..j])).collect();
        let off_chain = masses
            .focal_sets(1e-12)
            .into_iter()
            .filter(|a| !nested.contains(a))
            .count();
        let negative = (0..1u32 << k).any(|a| masses.mass(a) < -1e-12);
        chain.record(
            (masses.total() - 1.0).abs() + off_chain as f64 + if negative { 1.0 } else { 0.0 },
            1e-12,
            show,
        );

        let vacuous = generalised_hartley(&Capacity::vacuous(k)?)?;
        hartley.record((vacuous - (k as f64).log2()).abs(), 0.0, || format!("vacuous K={k}: {vacuous}"));
        let probs = random_dyadic_distribution(&mut draws, k);
        let precise = generalised_hartley(&Capacity::additive(&probs)?)?;
        hartley.record(precise.abs(), 0.0, || format!("precise {probs:?}: {precise}"));

        let f: Vec<f64> = (0..k).map(|_| draws.random_range(-2.0..2.0)).collect();
        let expectation: f64 = f.iter().zip(&probs).map(|(a, b)| a * b).sum();
        let choquet = choquet_integral(&Capacity::additive(&probs)?, &f)?;
        additive.record((choquet - expectation).abs(), 1e-12, || format!("p={probs:?} f={f:?}"));
    }
    Ok(vec![tv, pi, integral, ihdr, chain, hartley, additive])
}
