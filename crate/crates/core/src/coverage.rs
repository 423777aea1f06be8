//! Monte-Carlo checks of marginal coverage and uniform validity.
//!
//! Each trial draws a fresh calibration set and one test point from a
//! Gaussian-blob model whose exact posterior serves as the classifier.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epu::ConformalScorer;
use crate::error::{Error, Result};
use crate::models::{BlobGenerator, BlobSpec};
use crate::rng;
use crate::scores::{ProbVector, ScoreKind, ScoreSpec};
use crate::transducer::PValueProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub blobs: BlobSpec,
    pub n_cals: Vec<usize>,
    pub trials: usize,
    pub alphas: Vec<f64>,
    pub score: ScoreSpec,
    pub jitter: Option<f64>,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        CoverageConfig {
            blobs: BlobSpec::default(),
            n_cals: vec![20, 100],
            trials: 10_000,
            alphas: (1..=10).map(|i| i as f64 * 0.05).collect(),
            score: ScoreSpec::new(ScoreKind::Aps),
            jitter: None,
        }
    }
}

impl CoverageConfig {
    pub fn validate(&self) -> Result<()> {
        self.score.validate()?;
        if self.trials == 0 || self.n_cals.is_empty() || self.alphas.is_empty() {
            return Err(Error::Config("coverage needs trials, n_cal values and alphas".into()));
        }
        if self.n_cals.contains(&0) {
            return Err(Error::Empty("calibration set"));
        }
        if let Some(&a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::InvalidAlpha(a));
        }
        BlobGenerator::new(self.blobs, 0).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub n_cal: usize,
    pub alpha: f64,
    pub trials: usize,
    /// Frequency of the true label in the raw prediction set.
    pub raw_coverage: f64,
    pub consonant_coverage: f64,
    /// Frequency of `pi(true label) <= alpha` under the consonant profile.
    pub uniform_validity: f64,
    /// Binomial standard deviation `sqrt(alpha (1 - alpha) / trials)`.
    pub sigma: f64,
    pub coverage_ok: bool,
    pub validity_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
    /// `(instance, lattice alpha)` pairs compared between raw and consonant sets.
    pub lattice_checks: usize,
    /// Pairs where the raw set was empty.
    pub empty_raw_sets: usize,
    /// Pairs where the consonant set differs other than by filling an empty set.
    pub consonance_violations: usize,
}

impl CoverageReport {
    pub fn passed(&self) -> bool {
        self.consonance_violations == 0 && self.rows.iter().all(|r| r.coverage_ok && r.validity_ok)
    }

    pub const CSV_HEADER: &'static str =
        "n_cal,alpha,trials,raw_coverage,consonant_coverage,uniform_validity,sigma,coverage_ok,validity_ok";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{},{}",
                    r.n_cal,
                    r.alpha,
                    r.trials,
                    r.raw_coverage,
                    r.consonant_coverage,
                    r.uniform_validity,
                    r.sigma,
                    r.coverage_ok,
                    r.validity_ok
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    raw_covered: Vec<usize>,
    consonant_covered: Vec<usize>,
    invalid: Vec<usize>,
    lattice_checks: usize,
    empty_raw: usize,
    violations: usize,
}

impl Tally {
    fn zeros(alphas: usize) -> Self {
        Tally {
            raw_covered: vec![0; alphas],
            consonant_covered: vec![0; alphas],
            invalid: vec![0; alphas],
            ..Tally::default()
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in [
            (&mut self.raw_covered, &other.raw_covered),
            (&mut self.consonant_covered, &other.consonant_covered),
            (&mut self.invalid, &other.invalid),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.lattice_checks += other.lattice_checks;
        self.empty_raw += other.empty_raw;
        self.violations += other.violations;
        self
    }
}

/// Compares raw and consonant prediction sets at every lattice level.
/// Returns `(checks, empty raw sets, violations)`.
pub fn consonance_lattice_check(raw: &PValueProfile, n_cal: usize) -> Result<(usize, usize, usize)> {
    let consonant = raw.enforce_consonance();
    let top = consonant.top_label().expect("consonant profiles have a top label");
    let (mut empty, mut violations) = (0, 0);
    for j in 0..=n_cal {
        let alpha = j as f64 / (n_cal + 1) as f64;
        let r = raw.prediction_set(alpha)?;
        let c = consonant.prediction_set(alpha)?;
        if r.is_empty() {
            empty += 1;
            if c.labels != [top] {
                violations += 1;
            }
        } else if r != c {
            violations += 1;
        }
    }
    Ok((n_cal + 1, empty, violations))
}

pub fn run_coverage(config: &CoverageConfig, seed: u64) -> Result<CoverageReport> {
    config.validate()?;
    let generator = BlobGenerator::new(config.blobs, rng::derive_seed(seed, "coverage-centers", 0))?;
    let mut rows = Vec::new();
    let mut total = Tally::zeros(0);
    for (block, &n_cal) in config.n_cals.iter().enumerate() {
        let tally = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let trial_seed = rng::derive_seed(rng::derive_seed(seed, "coverage-block", block as u64), "trial", t as u64);
                one_trial(&generator, config, n_cal, trial_seed)
            })
            .try_reduce(|| Tally::zeros(config.alphas.len()), |a, b| Ok(a.merge(b)))?;
        let n = config.trials as f64;
        for (i, &alpha) in config.alphas.iter().enumerate() {
            let sigma = (alpha * (1.0 - alpha) / n).sqrt();
            let raw = tally.raw_covered[i] as f64 / n;
            let consonant = tally.consonant_covered[i] as f64 / n;
            let invalid = tally.invalid[i] as f64 / n;
            rows.push(CoverageRow {
                n_cal,
                alpha,
                trials: config.trials,
                raw_coverage: raw,
                consonant_coverage: consonant,
                uniform_validity: invalid,
                sigma,
                coverage_ok: raw.min(consonant) >= 1.0 - alpha - 3.0 * sigma,
                validity_ok: invalid <= alpha + 3.0 * sigma,
            });
        }
        total.lattice_checks += tally.lattice_checks;
        total.empty_raw += tally.empty_raw;
        total.violations += tally.violations;
    }
    Ok(CoverageReport {
        rows,
        lattice_checks: total.lattice_checks,
        empty_raw_sets: total.empty_raw,
        consonance_violations: total.violations,
    })
}

fn one_trial(generator: &BlobGenerator, config: &CoverageConfig, n_cal: usize, seed: u64) -> Result<Tally> {
    let sample = generator.sample(n_cal + 1, &mut rng::stream(seed, "sample", 0));
    let probs: Vec<ProbVector> = sample.rows().map(|x| generator.posterior(x)).collect();
    let scorer = ConformalScorer::fit(&probs[..n_cal], &sample.labels()[..n_cal], config.score, config.jitter, seed)?;
    let y = sample.labels()[n_cal];
    let raw = scorer.profile(&probs[n_cal], 0)?;
    let consonant = raw.enforce_consonance();

    let mut tally = Tally::zeros(config.alphas.len());
    for (i, &alpha) in config.alphas.iter().enumerate() {
        tally.raw_covered[i] = usize::from(raw.pvalues()[y] > alpha);
        tally.consonant_covered[i] = usize::from(consonant.pvalues()[y] > alpha);
        tally.invalid[i] = usize::from(consonant.pvalues()[y] <= alpha);
    }
    let (checks, empty, violations) = consonance_lattice_check(&raw, n_cal)?;
    tally.lattice_checks = checks;
    tally.empty_raw = empty;
    tally.violations = violations;
    Ok(tally)
}
