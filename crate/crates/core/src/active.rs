//! Pool-based active learning driven by conformal uncertainty.
//!
//! Each round redraws a train/calibration split of the labelled set, fits the
//! learner, records accuracy on a fixed held-out test set, and then queries
//! the pool instance the strategy deems most uncertain.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epu::{first_argmax, ConformalScorer, Strategy};
use crate::error::{Error, Result};
use crate::models::{Dataset, Learner, LearnerKind};
use crate::rng;
use crate::scores::{ScoreKind, ScoreSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveConfig {
    pub initial_train: usize,
    pub pool_size: usize,
    pub test_size: usize,
    pub rounds: usize,
    /// Share of the labelled set used for fitting; the rest calibrates.
    pub train_fraction: f64,
    pub score: ScoreSpec,
    /// Absolute jitter; `None` uses the relative default.
    pub jitter: Option<f64>,
}

impl Default for ActiveConfig {
    fn default() -> Self {
        ActiveConfig {
            initial_train: 100,
            pool_size: 2000,
            test_size: 1000,
            rounds: 300,
            train_fraction: 0.7,
            score: ScoreSpec::new(ScoreKind::Aps),
            jitter: None,
        }
    }
}

impl ActiveConfig {
    pub fn validate(&self, data_len: usize) -> Result<()> {
        self.score.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidSplit(format!("train fraction {} outside (0, 1)", self.train_fraction)));
        }
        if self.test_size == 0 {
            return Err(Error::InvalidSplit("test set is empty".into()));
        }
        let needed = self.initial_train + self.pool_size + self.test_size;
        if needed > data_len {
            return Err(Error::InvalidSplit(format!(
                "{needed} instances requested but the dataset has {data_len}"
            )));
        }
        if self.rounds > self.pool_size {
            return Err(Error::PoolExhausted {
                acquired: self.pool_size,
                requested: self.rounds,
            });
        }
        split_sizes(self.initial_train, self.train_fraction).map(|_| ())
    }
}

/// `(train, calibration)` sizes for a labelled set of size `n`.
fn split_sizes(n: usize, train_fraction: f64) -> Result<(usize, usize)> {
    let train = (n as f64 * train_fraction).round() as usize;
    if train == 0 || train >= n {
        return Err(Error::InvalidSplit(format!(
            "{n} labelled instances leave an empty train or calibration split"
        )));
    }
    Ok((train, n - train))
}

/// The trajectory of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRun {
    pub seed: u64,
    pub strategy: Strategy,
    pub rounds: usize,
    /// Test accuracy before any query and after each one.
    pub accuracies: Vec<f64>,
    /// Dataset row indices in query order.
    pub acquired: Vec<usize>,
}

impl ExperimentRun {
    pub fn final_accuracy(&self) -> f64 {
        *self.accuracies.last().expect("at least the initial round")
    }
}

pub fn run_active(
    data: &Dataset,
    strategy: Strategy,
    learner: LearnerKind,
    config: &ActiveConfig,
    seed: u64,
) -> Result<ExperimentRun> {
    strategy.validate()?;
    config.validate(data.len())?;

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng::stream(seed, "partition", 0));
    let (test, rest) = order.split_at(config.test_size);
    let (initial, rest) = rest.split_at(config.initial_train);
    let mut labelled = initial.to_vec();
    let mut pool = rest[..config.pool_size].to_vec();

    let test_set = data.subset(test);
    {
        let held_out: BTreeSet<usize> = test.iter().copied().collect();
        assert!(
            labelled.iter().chain(&pool).all(|i| !held_out.contains(i)),
            "test set overlaps the labelled set or the pool"
        );
    }

    let mut accuracies = Vec::with_capacity(config.rounds + 1);
    let mut acquired = Vec::with_capacity(config.rounds);
    for round in 0..=config.rounds {
        let (n_train, _) = split_sizes(labelled.len(), config.train_fraction)?;
        let mut shuffled = labelled.clone();
        shuffled.shuffle(&mut rng::stream(seed, "round-split", round as u64));
        let (train_idx, cal_idx) = shuffled.split_at(n_train);

        let mut model = Learner::new(learner, rng::derive_seed(seed, "learner", round as u64));
        model.fit(&data.subset(train_idx))?;
        accuracies.push(accuracy(&model, &test_set)?);
        if round == config.rounds {
            break;
        }

        let cal = data.subset(cal_idx);
        let scorer = ConformalScorer::fit(
            &model.predict_all(&cal)?,
            cal.labels(),
            config.score,
            config.jitter,
            rng::derive_seed(seed, "calibration", round as u64),
        )?;
        let values = pool
            .par_iter()
            .map(|&i| scorer.uncertainty(strategy, &model.predict_proba(data.row(i))?, i as u64))
            .collect::<Result<Vec<f64>>>()?;
        let pick = first_argmax(&values).ok_or(Error::PoolExhausted {
            acquired: acquired.len(),
            requested: config.rounds,
        })?;
        let chosen = pool.remove(pick);
        labelled.push(chosen);
        acquired.push(chosen);
    }

    Ok(ExperimentRun {
        seed,
        strategy,
        rounds: config.rounds,
        accuracies,
        acquired,
    })
}

fn accuracy(model: &Learner, test: &Dataset) -> Result<f64> {
    let correct = (0..test.len())
        .into_par_iter()
        .map(|i| Ok(usize::from(model.predict_proba(test.row(i))?.argmax() == test.labels()[i])))
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(correct as f64 / test.len() as f64)
}
