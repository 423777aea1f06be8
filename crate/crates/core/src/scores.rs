//! Nonconformity scores.
//!
//! Classification scores map a probability vector and a candidate label to a
//! real number; larger means less conforming. Regression scores do the same
//! for a point or quantile prediction and a candidate response.
//!
//! | kind | score |
//! |------|-------|
//! | LAC | `1 - p[y]` |
//! | APS | mass ranked strictly above `y` plus `u * p[y]` (`u = 1` when deterministic) |
//! | RAPS | APS plus `lambda * max(0, rank(y) - k_reg)` |
//! | MARGIN | `max_{k != y} p[k] - p[y]` |
//! | ABS_RESIDUAL | `|y - f(x)|` |
//! | WEIGHTED_RESIDUAL | `|y - f(x)| / w(x)` |
//! | CQR | `max(f_lo(x) - y, y - f_hi(x))` |

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// A categorical distribution over `K >= 2` classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidProbVector(format!(
                "need at least 2 classes, got {}",
                probs.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidProbVector(format!("entry {bad} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidProbVector(format!("entries sum to {total}")));
        }
        Ok(ProbVector(probs))
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidProbVector(format!("weights sum to {total}")));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(classes: usize) -> Result<Self> {
        Self::new(vec![1.0 / classes as f64; classes])
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, class: usize) -> Result<f64> {
        self.0.get(class).copied().ok_or(Error::ClassOutOfRange {
            index: class,
            classes: self.0.len(),
        })
    }

    /// Most probable class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        self.descending_order()[0]
    }

    /// Class indices by descending probability, ties by ascending index.
    pub fn descending_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.0.len()).collect();
        order.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]).then(a.cmp(&b)));
        order
    }
}

/// Point, scale and quantile outputs of a regression model at one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionPrediction {
    pub point: f64,
    pub weight: f64,
    pub lower_q: f64,
    pub upper_q: f64,
}

impl RegressionPrediction {
    pub fn new(point: f64, weight: f64, lower_q: f64, upper_q: f64) -> Result<Self> {
        if !(weight > 0.0) {
            return Err(Error::NonPositiveWeight(weight));
        }
        if !(lower_q <= upper_q) {
            return Err(Error::InvalidRegressionPrediction(format!(
                "lower quantile {lower_q} above upper quantile {upper_q}"
            )));
        }
        Ok(Self {
            point,
            weight,
            lower_q,
            upper_q,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScoreKind {
    Lac,
    Aps,
    Raps,
    Margin,
    AbsResidual,
    WeightedResidual,
    Cqr,
}

impl ScoreKind {
    pub fn is_classification(self) -> bool {
        matches!(self, ScoreKind::Lac | ScoreKind::Aps | ScoreKind::Raps | ScoreKind::Margin)
    }

    pub fn is_regression(self) -> bool {
        !self.is_classification()
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ScoreKind::Lac => "lac",
            ScoreKind::Aps => "aps",
            ScoreKind::Raps => "raps",
            ScoreKind::Margin => "margin",
            ScoreKind::AbsResidual => "abs_residual",
            ScoreKind::WeightedResidual => "weighted_residual",
            ScoreKind::Cqr => "cqr",
        };
        f.write_str(name)
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lac" => Ok(ScoreKind::Lac),
            "aps" => Ok(ScoreKind::Aps),
            "raps" => Ok(ScoreKind::Raps),
            "margin" => Ok(ScoreKind::Margin),
            "abs" | "abs_residual" => Ok(ScoreKind::AbsResidual),
            "weighted" | "weighted_residual" => Ok(ScoreKind::WeightedResidual),
            "cqr" => Ok(ScoreKind::Cqr),
            other => Err(Error::Config(format!("unknown score kind `{other}`"))),
        }
    }
}

/// Which score to use and its tuning knobs.
///
/// `raps_lambda` and `raps_kreg` only matter for RAPS; `aps_randomized` only
/// for APS and RAPS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSpec {
    pub kind: ScoreKind,
    pub raps_lambda: f64,
    pub raps_kreg: usize,
    pub aps_randomized: bool,
}

impl Default for ScoreSpec {
    fn default() -> Self {
        ScoreSpec::new(ScoreKind::Aps)
    }
}

impl ScoreSpec {
    pub fn new(kind: ScoreKind) -> Self {
        ScoreSpec {
            kind,
            raps_lambda: 0.01,
            raps_kreg: 1,
            aps_randomized: false,
        }
    }

    pub fn raps(lambda: f64, kreg: usize) -> Self {
        ScoreSpec {
            raps_lambda: lambda,
            raps_kreg: kreg,
            ..ScoreSpec::new(ScoreKind::Raps)
        }
    }

    pub fn randomized(mut self, on: bool) -> Self {
        self.aps_randomized = on;
        self
    }

    /// True when evaluating this score consumes a uniform draw.
    pub fn needs_uniform(&self) -> bool {
        self.aps_randomized && matches!(self.kind, ScoreKind::Aps | ScoreKind::Raps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ScoreKind::Raps {
            if !(self.raps_lambda >= 0.0) {
                return Err(Error::Config(format!(
                    "raps_lambda must be nonnegative, got {}",
                    self.raps_lambda
                )));
            }
            if self.raps_kreg == 0 {
                return Err(Error::Config("raps_kreg must be positive".into()));
            }
        }
        Ok(())
    }

    /// Score of label `y`. `u` must be supplied exactly when
    /// [`needs_uniform`](Self::needs_uniform) holds; otherwise it is ignored.
    pub fn classification_score(&self, p: &ProbVector, y: usize, u: Option<f64>) -> Result<f64> {
        let u = if self.needs_uniform() {
            Some(u.ok_or(Error::MissingUniform)?)
        } else {
            None
        };
        match self.kind {
            ScoreKind::Lac => lac_score(p, y),
            ScoreKind::Aps => aps_score(p, y, u),
            ScoreKind::Raps => raps_score(p, y, u, self),
            ScoreKind::Margin => margin_score(p, y),
            other => Err(Error::WrongScoreKind(other)),
        }
    }

    /// Scores for every label of `p`, drawing one uniform per label from
    /// `rng` when the score is randomized.
    pub fn label_scores(&self, p: &ProbVector, rng: &mut crate::rng::Rng) -> Result<Vec<f64>> {
        (0..p.classes())
            .map(|y| {
                let u = self.needs_uniform().then(|| rng.random::<f64>());
                self.classification_score(p, y, u)
            })
            .collect()
    }

    pub fn regression_score(&self, pred: &RegressionPrediction, y: f64) -> Result<f64> {
        regression_score(pred, y, self)
    }
}

pub fn lac_score(p: &ProbVector, y: usize) -> Result<f64> {
    Ok(1.0 - p.get(y)?)
}

fn check_uniform(u: Option<f64>) -> Result<()> {
    match u {
        Some(u) if !(0.0..=1.0).contains(&u) => Err(Error::InvalidUniform(u)),
        _ => Ok(()),
    }
}

/// Returns (mass ranked strictly above `y`, 1-based rank of `y`).
fn mass_above(p: &ProbVector, y: usize) -> Result<(f64, usize)> {
    p.get(y)?;
    let order = p.descending_order();
    let position = order.iter().position(|&c| c == y).expect("label present in order");
    let above = order[..position].iter().map(|&c| p.as_slice()[c]).sum();
    Ok((above, position + 1))
}

pub fn aps_score(p: &ProbVector, y: usize, u: Option<f64>) -> Result<f64> {
    check_uniform(u)?;
    let (above, _) = mass_above(p, y)?;
    Ok(above + u.unwrap_or(1.0) * p.as_slice()[y])
}

pub fn raps_score(p: &ProbVector, y: usize, u: Option<f64>, spec: &ScoreSpec) -> Result<f64> {
    if spec.kind != ScoreKind::Raps {
        return Err(Error::WrongScoreKind(spec.kind));
    }
    spec.validate()?;
    check_uniform(u)?;
    let (above, rank) = mass_above(p, y)?;
    let penalty = spec.raps_lambda * rank.saturating_sub(spec.raps_kreg) as f64;
    Ok(above + u.unwrap_or(1.0) * p.as_slice()[y] + penalty)
}

pub fn margin_score(p: &ProbVector, y: usize) -> Result<f64> {
    let own = p.get(y)?;
    let best_other = p
        .as_slice()
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != y)
        .map(|(_, &q)| q)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best_other - own)
}

pub fn regression_score(pred: &RegressionPrediction, y: f64, spec: &ScoreSpec) -> Result<f64> {
    match spec.kind {
        ScoreKind::AbsResidual => Ok((y - pred.point).abs()),
        ScoreKind::WeightedResidual => {
            if !(pred.weight > 0.0) {
                return Err(Error::NonPositiveWeight(pred.weight));
            }
            Ok((y - pred.point).abs() / pred.weight)
        }
        ScoreKind::Cqr => Ok((pred.lower_q - y).max(y - pred.upper_q)),
        other => Err(Error::WrongScoreKind(other)),
    }
}
