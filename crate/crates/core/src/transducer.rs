//! Split-conformal calibration, conformal p-values and prediction regions.
//!
//! Calibration scores are jittered once at construction (`s + eps * u`,
//! `u ~ U[0, 1]` from a seeded stream) so they are strictly increasing. A test
//! score `s` then has conformal p-value
//!
//! ```text
//! pi(s) = (1 + #{i : s_i >= s}) / (1 + n_cal)
//! ```
//!
//! and the prediction region at level `alpha` is `{y : pi(y) > alpha}`.
//! Stretching the largest p-value of a profile to 1 makes the transducer
//! consonant; that only changes the region when it was empty.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scores::{ProbVector, RegressionPrediction, ScoreKind, ScoreSpec};

/// Default jitter, relative to the calibration score range.
pub const DEFAULT_RELATIVE_JITTER: f64 = 1e-9;

/// Default resolution of the regression grid evaluator.
pub const DEFAULT_GRID_POINTS: usize = 1001;

/// Jittered, sorted calibration scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSet {
    scores: Vec<f64>,
    jitter_eps: f64,
    seed: u64,
}

/// Jitter magnitude for `raw`: [`DEFAULT_RELATIVE_JITTER`] times the score
/// range (or times 1 when all scores coincide).
pub fn default_jitter(raw: &[f64]) -> f64 {
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let range = hi - lo;
    let scale = if range.is_finite() && range > 0.0 { range } else { 1.0 };
    DEFAULT_RELATIVE_JITTER * scale
}

impl CalibrationSet {
    /// Jitter and sort `raw_scores`.
    pub fn calibrate(raw_scores: &[f64], jitter_eps: f64, seed: u64) -> Result<Self> {
        if raw_scores.is_empty() {
            return Err(Error::Empty("calibration scores"));
        }
        if !(jitter_eps > 0.0) || !jitter_eps.is_finite() {
            return Err(Error::InvalidJitter(jitter_eps));
        }
        if raw_scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("calibration scores must be finite".into()));
        }
        let mut draws = rng::stream(seed, "jitter", 0);
        let mut scores: Vec<f64> = raw_scores
            .iter()
            .map(|s| s + jitter_eps * draws.random::<f64>())
            .collect();
        scores.sort_by(f64::total_cmp);
        // Jitter below the float resolution of the scores can leave ties.
        for i in 1..scores.len() {
            if scores[i] <= scores[i - 1] {
                scores[i] = scores[i - 1].next_up();
            }
        }
        Ok(CalibrationSet {
            scores,
            jitter_eps,
            seed,
        })
    }

    /// Deserializes and re-checks the sortedness invariant.
    pub fn from_json(text: &str) -> Result<Self> {
        let cal: CalibrationSet = serde_json::from_str(text)?;
        cal.validate()?;
        Ok(cal)
    }

    /// Checks the invariants that deserialization cannot enforce.
    pub fn validate(&self) -> Result<()> {
        if self.scores.is_empty() {
            return Err(Error::Empty("calibration scores"));
        }
        if !self.scores.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("calibration scores are not strictly increasing".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn n_cal(&self) -> usize {
        self.scores.len()
    }

    pub fn jitter_eps(&self) -> f64 {
        self.jitter_eps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Rank `k = ceil((1 - alpha)(n_cal + 1))` of the calibration quantile.
    pub fn quantile_rank(&self, alpha: f64) -> Result<usize> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(ceil_rank((1.0 - alpha) * (self.n_cal() + 1) as f64))
    }

    /// The `k`-th smallest calibration score, or `+inf` when `k > n_cal`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        let k = self.quantile_rank(alpha)?;
        Ok(if k > self.n_cal() {
            f64::INFINITY
        } else {
            self.scores[k.max(1) - 1]
        })
    }

    /// Number of calibration scores `>= test_score`.
    pub fn count_at_least(&self, test_score: f64) -> usize {
        self.scores.len() - self.scores.partition_point(|&s| s < test_score)
    }

    pub fn pvalue(&self, test_score: f64) -> f64 {
        (1 + self.count_at_least(test_score)) as f64 / (1 + self.n_cal()) as f64
    }

    /// Label-wise p-values of one test input.
    pub fn profile(&self, test_scores: &[f64]) -> Result<PValueProfile> {
        if test_scores.is_empty() {
            return Err(Error::Empty("label scores"));
        }
        Ok(PValueProfile::from_pvalues_unchecked(
            test_scores.iter().map(|&s| self.pvalue(s)).collect(),
        ))
    }
}

/// `ceil(x)` that absorbs float noise just above an integer.
fn ceil_rank(x: f64) -> usize {
    let nearest = x.round();
    if (x - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}

/// Free-function form of [`CalibrationSet::calibrate`].
pub fn calibrate(raw_scores: &[f64], jitter_eps: f64, seed: u64) -> Result<CalibrationSet> {
    CalibrationSet::calibrate(raw_scores, jitter_eps, seed)
}

pub fn quantile(cal: &CalibrationSet, alpha: f64) -> Result<f64> {
    cal.quantile(alpha)
}

pub fn conformal_pvalue(cal: &CalibrationSet, test_score: f64) -> f64 {
    cal.pvalue(test_score)
}

pub fn profile(cal: &CalibrationSet, test_scores: &[f64]) -> Result<PValueProfile> {
    cal.profile(test_scores)
}

/// Scores of the true labels of a calibration split.
pub fn calibration_scores(
    probs: &[ProbVector],
    labels: &[usize],
    spec: &ScoreSpec,
    rng: &mut rng::Rng,
) -> Result<Vec<f64>> {
    if probs.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} probability rows but {} labels",
            probs.len(),
            labels.len()
        )));
    }
    probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            let u = spec.needs_uniform().then(|| rng.random::<f64>());
            spec.classification_score(p, y, u)
        })
        .collect()
}

/// Conformal p-values of every label for one test input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueProfile {
    pvalues: Vec<f64>,
    consonant: bool,
    top_label: Option<usize>,
}

impl PValueProfile {
    /// Builds a profile from arbitrary values in `[0, 1]`. The profile counts
    /// as consonant when its maximum equals 1.
    pub fn from_pvalues(pvalues: Vec<f64>) -> Result<Self> {
        if pvalues.is_empty() {
            return Err(Error::Empty("p-values"));
        }
        if let Some(bad) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!("p-value {bad} outside [0, 1]")));
        }
        Ok(Self::from_pvalues_unchecked(pvalues))
    }

    fn from_pvalues_unchecked(pvalues: Vec<f64>) -> Self {
        let top = first_argmax(&pvalues);
        let consonant = pvalues[top] == 1.0;
        PValueProfile {
            pvalues,
            consonant,
            top_label: consonant.then_some(top),
        }
    }

    pub fn pvalues(&self) -> &[f64] {
        &self.pvalues
    }

    pub fn labels(&self) -> usize {
        self.pvalues.len()
    }

    pub fn is_consonant(&self) -> bool {
        self.consonant
    }

    pub fn top_label(&self) -> Option<usize> {
        self.top_label
    }

    /// Stretches the largest p-value to 1. Ties go to the lowest index.
    pub fn enforce_consonance(&self) -> PValueProfile {
        let top = first_argmax(&self.pvalues);
        let mut pvalues = self.pvalues.clone();
        pvalues[top] = 1.0;
        PValueProfile {
            pvalues,
            consonant: true,
            top_label: Some(top),
        }
    }

    /// `{y : pi(y) > alpha}` for `0 <= alpha < 1`.
    pub fn prediction_set(&self, alpha: f64) -> Result<PredictionSet> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidAlpha(alpha));
        }
        let labels = self
            .pvalues
            .iter()
            .enumerate()
            .filter(|&(_, &p)| p > alpha)
            .map(|(y, _)| y)
            .collect();
        Ok(PredictionSet { labels, alpha })
    }

    /// Labels sorted by descending p-value, ties by ascending index.
    pub fn descending_labels(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.pvalues.len()).collect();
        order.sort_by(|&a, &b| self.pvalues[b].total_cmp(&self.pvalues[a]).then(a.cmp(&b)));
        order
    }
}

fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn enforce_consonance(p: &PValueProfile) -> PValueProfile {
    p.enforce_consonance()
}

pub fn prediction_set(p: &PValueProfile, alpha: f64) -> Result<PredictionSet> {
    p.prediction_set(alpha)
}

/// A classification prediction region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub labels: Vec<usize>,
    pub alpha: f64,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: usize) -> bool {
        self.labels.binary_search(&label).is_ok()
    }
}

/// A regression prediction region `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    /// False when the calibration quantile is infinite.
    pub bounded: bool,
}

impl PredictionInterval {
    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Inverts a regression score at the calibration quantile.
pub fn regression_interval(
    cal: &CalibrationSet,
    pred: &RegressionPrediction,
    alpha: f64,
    spec: &ScoreSpec,
) -> Result<PredictionInterval> {
    let q = cal.quantile(alpha)?;
    interval_at(q, pred, alpha, spec)
}

fn interval_at(
    q: f64,
    pred: &RegressionPrediction,
    alpha: f64,
    spec: &ScoreSpec,
) -> Result<PredictionInterval> {
    let (lower, upper) = match spec.kind {
        ScoreKind::AbsResidual => (pred.point - q, pred.point + q),
        ScoreKind::WeightedResidual => {
            if !(pred.weight > 0.0) {
                return Err(Error::NonPositiveWeight(pred.weight));
            }
            (pred.point - q * pred.weight, pred.point + q * pred.weight)
        }
        ScoreKind::Cqr => (pred.lower_q - q, pred.upper_q + q),
        other => return Err(Error::WrongScoreKind(other)),
    };
    Ok(PredictionInterval {
        lower,
        upper,
        alpha,
        bounded: q.is_finite(),
    })
}

/// The conformal transducer of one regression test input, `y -> pi_x(y)`.
#[derive(Debug, Clone, Copy)]
pub struct RegressionTransducer<'a> {
    cal: &'a CalibrationSet,
    pred: RegressionPrediction,
    spec: ScoreSpec,
}

impl<'a> RegressionTransducer<'a> {
    pub fn new(cal: &'a CalibrationSet, pred: RegressionPrediction, spec: ScoreSpec) -> Result<Self> {
        if !spec.kind.is_regression() {
            return Err(Error::WrongScoreKind(spec.kind));
        }
        if spec.kind == ScoreKind::WeightedResidual && !(pred.weight > 0.0) {
            return Err(Error::NonPositiveWeight(pred.weight));
        }
        Ok(RegressionTransducer { cal, pred, spec })
    }

    pub fn calibration(&self) -> &CalibrationSet {
        self.cal
    }

    pub fn score(&self, y: f64) -> f64 {
        crate::scores::regression_score(&self.pred, y, &self.spec).expect("validated at construction")
    }

    pub fn pvalue(&self, y: f64) -> f64 {
        self.cal.pvalue(self.score(y))
    }

    pub fn interval(&self, alpha: f64) -> Result<PredictionInterval> {
        regression_interval(self.cal, &self.pred, alpha, &self.spec)
    }

    /// Response range that contains every finite prediction interval, with
    /// one extra interval half-width of margin on each side.
    pub fn grid_span(&self) -> (f64, f64) {
        let q_max = self.cal.scores()[self.cal.n_cal() - 1].abs().max(1e-6);
        let widest = interval_at(q_max, &self.pred, 0.5, &self.spec).expect("validated at construction");
        let margin = 0.5 * widest.width().max(1e-6);
        (widest.lower - margin, widest.upper + margin)
    }

    /// `(y, pi(y))` on an evenly spaced grid of `points >= 2` responses.
    pub fn grid(&self, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
        let points = points.max(2);
        (0..points)
            .map(|i| {
                let y = lo + (hi - lo) * i as f64 / (points - 1) as f64;
                (y, self.pvalue(y))
            })
            .collect()
    }
}
