//! Selective classification: abstain on the most uncertain test inputs and
//! trace accuracy on the retained rest.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epu::{ConformalScorer, Strategy};
use crate::error::{Error, Result};
use crate::models::{BlobGenerator, BlobSpec, Learner, LearnerKind};
use crate::rng;
use crate::scores::{ProbVector, ScoreKind, ScoreSpec};

/// Number of rejection rates on the default grid.
pub const GRID_POINTS: usize = 100;
/// Largest rejection rate on the default grid.
pub const MAX_REJECTION: f64 = 0.99;

/// `GRID_POINTS` evenly spaced rates in `[0, MAX_REJECTION]`.
pub fn rejection_grid() -> Vec<f64> {
    (0..GRID_POINTS)
        .map(|i| MAX_REJECTION * i as f64 / (GRID_POINTS - 1) as f64)
        .collect()
}

/// `ceil((1 - r) n)`, robust to the rounding of `(1 - r) n`.
pub fn retained_count(rejection: f64, n: usize) -> usize {
    let exact = (1.0 - rejection) * n as f64;
    let nearest = exact.round();
    let kept = if (exact - nearest).abs() <= 1e-9 * n.max(1) as f64 {
        nearest
    } else {
        exact.ceil()
    };
    kept as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcCurve {
    pub rejection_rates: Vec<f64>,
    pub accuracies: Vec<f64>,
    pub retained: Vec<usize>,
    /// Trapezoidal area over the grid, divided by the grid span.
    pub auarc: f64,
}

impl ArcCurve {
    pub fn auarc_percent(&self) -> f64 {
        100.0 * self.auarc
    }
}

/// Builds the curve from per-instance uncertainty, correctness and a
/// canonical id. Instances are rejected in order of decreasing uncertainty,
/// ties broken by ascending id, so the curve does not depend on input order.
pub fn arc_from_scores(uncertainty: &[f64], correct: &[bool], ids: &[u64]) -> Result<ArcCurve> {
    let n = uncertainty.len();
    if correct.len() != n || ids.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} uncertainty values, {} correctness flags, {} ids",
            correct.len(),
            ids.len()
        )));
    }
    if n == 0 {
        return Err(Error::Empty("test set"));
    }
    if uncertainty.iter().any(|u| u.is_nan()) {
        return Err(Error::Config("uncertainty values must not be NaN".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| uncertainty[b].total_cmp(&uncertainty[a]).then(ids[a].cmp(&ids[b])));

    // correct_suffix[j] = correct instances among order[j..]
    let mut correct_suffix = vec![0usize; n + 1];
    for j in (0..n).rev() {
        correct_suffix[j] = correct_suffix[j + 1] + usize::from(correct[order[j]]);
    }

    let rejection_rates = rejection_grid();
    let mut accuracies = Vec::with_capacity(rejection_rates.len());
    let mut retained = Vec::with_capacity(rejection_rates.len());
    for &r in &rejection_rates {
        let kept = retained_count(r, n);
        if kept == 0 {
            return Err(Error::Empty("retained set"));
        }
        accuracies.push(correct_suffix[n - kept] as f64 / kept as f64);
        retained.push(kept);
    }
    let area: f64 = rejection_rates
        .windows(2)
        .zip(accuracies.windows(2))
        .map(|(r, a)| (r[1] - r[0]) * (a[0] + a[1]) / 2.0)
        .sum();
    Ok(ArcCurve {
        auarc: area / MAX_REJECTION,
        rejection_rates,
        accuracies,
        retained,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectiveConfig {
    pub n_cal: usize,
    /// `None` uses every row not drawn for calibration.
    pub n_test: Option<usize>,
    pub score: ScoreSpec,
    pub jitter: Option<f64>,
}

impl Default for SelectiveConfig {
    fn default() -> Self {
        SelectiveConfig {
            n_cal: 500,
            n_test: Some(1000),
            score: ScoreSpec::new(ScoreKind::Aps),
            jitter: None,
        }
    }
}

/// Probabilities plus true labels, each row carrying a canonical id.
#[derive(Debug, Clone)]
pub struct Labelled<'a> {
    pub probs: &'a [ProbVector],
    pub labels: &'a [usize],
    pub ids: &'a [u64],
}

impl Labelled<'_> {
    fn check(&self) -> Result<()> {
        if self.labels.len() != self.probs.len() || self.ids.len() != self.probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} probability rows, {} labels, {} ids",
                self.probs.len(),
                self.labels.len(),
                self.ids.len()
            )));
        }
        Ok(())
    }
}

/// Calibrates on `cal` and evaluates every strategy on `test`.
pub fn run_selective_split(
    cal: Labelled<'_>,
    test: Labelled<'_>,
    strategies: &[Strategy],
    config: &SelectiveConfig,
    seed: u64,
) -> Result<Vec<ArcCurve>> {
    cal.check()?;
    test.check()?;
    let scorer = ConformalScorer::fit(cal.probs, cal.labels, config.score, config.jitter, seed)?;
    let correct: Vec<bool> = test
        .probs
        .iter()
        .zip(test.labels)
        .map(|(p, &y)| p.argmax() == y)
        .collect();
    let measures = test
        .probs
        .par_iter()
        .zip(test.ids.par_iter())
        .map(|(p, &id)| scorer.measure(p, id))
        .collect::<Result<Vec<_>>>()?;
    strategies
        .iter()
        .map(|strategy| {
            strategy.validate()?;
            let uncertainty = measures
                .iter()
                .zip(test.ids)
                .map(|(m, &id)| {
                    strategy.value(m, || {
                        use rand::Rng as _;
                        rng::stream(seed, "random-strategy", id).random::<f64>()
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            arc_from_scores(&uncertainty, &correct, test.ids)
        })
        .collect()
}

/// Draws a seeded disjoint calibration/test split of a probability matrix
/// (row index = canonical id) and evaluates every strategy.
pub fn run_selective(
    probs: &[ProbVector],
    labels: &[usize],
    strategies: &[Strategy],
    config: &SelectiveConfig,
    seed: u64,
) -> Result<Vec<ArcCurve>> {
    if labels.len() != probs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} probability rows but {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let n = probs.len();
    let n_test = config.n_test.unwrap_or(n.saturating_sub(config.n_cal));
    if config.n_cal == 0 || n_test == 0 || config.n_cal + n_test > n {
        return Err(Error::InvalidSplit(format!(
            "{} calibration + {n_test} test rows from {n}",
            config.n_cal
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, "selective-split", 0));
    let pick = |idx: &[usize]| {
        (
            idx.iter().map(|&i| probs[i].clone()).collect::<Vec<_>>(),
            idx.iter().map(|&i| labels[i]).collect::<Vec<_>>(),
            idx.iter().map(|&i| i as u64).collect::<Vec<_>>(),
        )
    };
    let (cp, cl, ci) = pick(&order[..config.n_cal]);
    let (tp, tl, ti) = pick(&order[config.n_cal..config.n_cal + n_test]);
    run_selective_split(
        Labelled { probs: &cp, labels: &cl, ids: &ci },
        Labelled { probs: &tp, labels: &tl, ids: &ti },
        strategies,
        config,
        rng::derive_seed(seed, "selective-calibration", 0),
    )
}

/// A seeded synthetic problem: blob data, a learner fitted on a training
/// split, and its predicted probabilities on `n_eval` fresh rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub blobs: BlobSpec,
    pub learner: LearnerKind,
    pub n_train: usize,
    pub n_eval: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            blobs: BlobSpec::default(),
            learner: LearnerKind::softmax(),
            n_train: 500,
            n_eval: 1500,
        }
    }
}

pub fn synthetic_probabilities(spec: &SyntheticSpec, seed: u64) -> Result<(Vec<ProbVector>, Vec<usize>)> {
    let generator = BlobGenerator::new(spec.blobs, rng::derive_seed(seed, "blob-centers", 0))?;
    let train = generator.sample(spec.n_train, &mut rng::stream(seed, "synthetic-train", 0));
    let eval = generator.sample(spec.n_eval, &mut rng::stream(seed, "synthetic-eval", 0));
    let mut model = Learner::new(spec.learner, rng::derive_seed(seed, "learner", 0));
    model.fit(&train)?;
    let probs = (0..eval.len())
        .into_par_iter()
        .map(|i| model.predict_proba(eval.row(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok((probs, eval.labels().to_vec()))
}
