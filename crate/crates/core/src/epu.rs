//! Per-instance epistemic uncertainty under a split-conformal classifier,
//! shared by the active-learning and selective-classification harnesses.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imprecise::PlausibilityMeasure;
use crate::rng;
use crate::scores::{ProbVector, ScoreSpec};
use crate::transducer::{calibration_scores, default_jitter, CalibrationSet, PValueProfile};

/// How an instance's uncertainty is summarized. Larger means more uncertain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Strategy {
    MmiPi,
    MmiTv,
    /// Prediction-set size at the given miscoverage level.
    SetSize(f64),
    /// Seeded uniform draw; a sanity floor.
    Random,
}

impl Strategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Strategy::SetSize(a) if !(a > 0.0 && a < 1.0) => Err(Error::InvalidAlpha(a)),
            _ => Ok(()),
        }
    }

    /// `draw` is consulted only by [`Strategy::Random`].
    pub fn value(&self, m: &PlausibilityMeasure, draw: impl FnOnce() -> f64) -> Result<f64> {
        Ok(match *self {
            Strategy::MmiPi => m.mmi_pi(),
            Strategy::MmiTv => m.mmi_tv()?,
            Strategy::SetSize(alpha) => m.profile().prediction_set(alpha)?.len() as f64,
            Strategy::Random => draw(),
        })
    }

    /// The comparison set used in the experiments.
    pub fn standard_set() -> Vec<Strategy> {
        let mut out = vec![Strategy::MmiPi, Strategy::MmiTv];
        out.extend([0.01, 0.05, 0.1, 0.2, 0.3].map(Strategy::SetSize));
        out.push(Strategy::Random);
        out
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::MmiPi => f.write_str("mmi_pi"),
            Strategy::MmiTv => f.write_str("mmi_tv"),
            Strategy::SetSize(a) => write!(f, "set_size:{a}"),
            Strategy::Random => f.write_str("random"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let strategy = match s.trim() {
            "mmi_pi" => Strategy::MmiPi,
            "mmi_tv" => Strategy::MmiTv,
            "random" => Strategy::Random,
            other => match other.strip_prefix("set_size:") {
                Some(a) => Strategy::SetSize(
                    a.parse()
                        .map_err(|_| Error::Config(format!("bad set_size level `{a}`")))?,
                ),
                None => {
                    return Err(Error::Config(format!(
                        "unknown strategy `{other}` (expected mmi_pi, mmi_tv, set_size:<alpha> or random)"
                    )))
                }
            },
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A calibrated classification transducer.
#[derive(Debug, Clone)]
pub struct ConformalScorer {
    cal: CalibrationSet,
    spec: ScoreSpec,
    seed: u64,
}

impl ConformalScorer {
    /// Scores the calibration split and jitters with `seed`. A `jitter` of
    /// `None` uses the relative default.
    pub fn fit(probs: &[ProbVector], labels: &[usize], spec: ScoreSpec, jitter: Option<f64>, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut draws = rng::stream(seed, "calibration-scores", 0);
        let raw = calibration_scores(probs, labels, &spec, &mut draws)?;
        let eps = jitter.unwrap_or_else(|| default_jitter(&raw));
        Ok(ConformalScorer {
            cal: CalibrationSet::calibrate(&raw, eps, seed)?,
            spec,
            seed,
        })
    }

    pub fn from_calibration(cal: CalibrationSet, spec: ScoreSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        Ok(ConformalScorer { cal, spec, seed })
    }

    pub fn calibration(&self) -> &CalibrationSet {
        &self.cal
    }

    /// Raw p-value profile. `instance` seeds the randomized scores, so the
    /// result depends only on the instance's identity, never on its position.
    pub fn profile(&self, p: &ProbVector, instance: u64) -> Result<PValueProfile> {
        let mut draws = rng::stream(self.seed, "test-scores", instance);
        self.cal.profile(&self.spec.label_scores(p, &mut draws)?)
    }

    pub fn measure(&self, p: &ProbVector, instance: u64) -> Result<PlausibilityMeasure> {
        PlausibilityMeasure::new(self.profile(p, instance)?.enforce_consonance())
    }

    pub fn uncertainty(&self, strategy: Strategy, p: &ProbVector, instance: u64) -> Result<f64> {
        let m = self.measure(p, instance)?;
        strategy.value(&m, || rng::stream(self.seed, "random-strategy", instance).random::<f64>())
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn first_argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|b| *v > values[b]) {
            best = Some(i);
        }
    }
    best
}
