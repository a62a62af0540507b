//! Random-search hyperparameter optimization.
//!
//! Every trial draws its configuration and seed from a generator keyed by
//! the study's master seed and the trial index, so trials can run in any
//! order (and in parallel) with identical results.

use std::fmt;

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DatasetSplits, TagSchema};
use crate::encoding::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{init_model, EncoderConfig, HeadConfig, ModelBundle};
use crate::optim::OptimizerKind;
use crate::trainer::{self, TrainConfig, TrainLog, DEFAULT_MAX_EPOCHS, DEFAULT_PATIENCE};

pub const DEFAULT_TRIALS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LrScale {
    Log,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub lr_min: f64,
    pub lr_max: f64,
    pub lr_scale: LrScale,
    pub batch_sizes: Vec<usize>,
    pub optimizers: Vec<OptimizerKind>,
    pub weight_decays: Vec<f64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            lr_min: 5e-5,
            lr_max: 1e-2,
            lr_scale: LrScale::Log,
            batch_sizes: vec![8, 16, 32, 64],
            optimizers: OptimizerKind::ALL.to_vec(),
            weight_decays: vec![1e-3, 1e-2, 1e-4],
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_max && self.lr_max.is_finite()) {
            return Err(Error::Config(format!(
                "learning-rate range [{}, {}] is invalid",
                self.lr_min, self.lr_max
            )));
        }
        if self.batch_sizes.is_empty() || self.optimizers.is_empty() || self.weight_decays.is_empty() {
            return Err(Error::Config("every choice set needs at least one value".into()));
        }
        if self.batch_sizes.contains(&0) || self.weight_decays.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Config("batch sizes must be positive, weight decays >= 0".into()));
        }
        Ok(())
    }

    pub fn contains(&self, t: &TrialConfig) -> bool {
        (self.lr_min..=self.lr_max).contains(&t.learning_rate)
            && self.batch_sizes.contains(&t.batch_size)
            && self.optimizers.contains(&t.optimizer)
            && self.weight_decays.contains(&t.weight_decay)
    }
}

/// One point of the search space plus the seed that drives its run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub weight_decay: f64,
    pub trial_seed: u64,
}

pub fn sample_trial<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> TrialConfig {
    let learning_rate = match space.lr_scale {
        LrScale::Linear => Uniform::new_inclusive(space.lr_min, space.lr_max).sample(rng),
        LrScale::Log => Uniform::new_inclusive(space.lr_min.ln(), space.lr_max.ln())
            .sample(rng)
            .exp()
            .clamp(space.lr_min, space.lr_max),
    };
    TrialConfig {
        learning_rate,
        batch_size: *space.batch_sizes.choose(rng).expect("non-empty"),
        optimizer: *space.optimizers.choose(rng).expect("non-empty"),
        weight_decay: *space.weight_decays.choose(rng).expect("non-empty"),
        trial_seed: rng.next_u64(),
    }
}

/// The configuration of trial `index` of a study seeded with `master_seed`.
pub fn trial_config(space: &SearchSpace, master_seed: u64, index: usize) -> TrialConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    sample_trial(space, &mut rng)
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrialStatus {
    Completed { best_val_loss: f64, log: TrainLog },
    Failed { reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub config: TrialConfig,
    pub status: TrialStatus,
}

impl TrialRecord {
    pub fn best_val_loss(&self) -> Option<f64> {
        match &self.status {
            TrialStatus::Completed { best_val_loss, .. } => Some(*best_val_loss),
            TrialStatus::Failed { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub n_trials: usize,
    pub master_seed: u64,
    pub max_epochs: usize,
    pub patience: usize,
}

impl StudyConfig {
    pub fn new(master_seed: u64) -> Self {
        Self {
            n_trials: DEFAULT_TRIALS,
            master_seed,
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
        }
    }

    pub fn with_trials(mut self, n_trials: usize) -> Self {
        self.n_trials = n_trials;
        self
    }

    pub fn with_max_epochs(mut self, max_epochs: usize) -> Self {
        self.max_epochs = max_epochs;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub trials: Vec<TrialRecord>,
    pub best_trial: usize,
    /// Restored weights of the best trial.
    pub best_model: ModelBundle,
}

impl StudyResult {
    /// `trial,lr,batch,optimizer,wd,status,best_val_loss` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,lr,batch,optimizer,wd,status,best_val_loss\n");
        for t in &self.trials {
            let c = &t.config;
            let (status, loss) = match t.best_val_loss() {
                Some(l) => ("completed", l.to_string()),
                None => ("failed", String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{status},{loss}\n",
                t.index, c.learning_rate, c.batch_size, c.optimizer, c.weight_decay
            ));
        }
        out
    }

    pub fn completed(&self) -> impl Iterator<Item = &TrialRecord> {
        self.trials.iter().filter(|t| t.best_val_loss().is_some())
    }
}

impl fmt::Display for TrialConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lr={:.3e} batch={} optimizer={} wd={}",
            self.learning_rate, self.batch_size, self.optimizer, self.weight_decay
        )
    }
}

/// Index of the smallest loss among completed trials; ties go to the
/// lowest index.
pub fn select_best(losses: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, l) in losses.iter().enumerate() {
        if let Some(l) = *l {
            if best.map_or(true, |(_, b)| l < b) {
                best = Some((i, l));
            }
        }
    }
    best.map(|(i, _)| i)
}

pub fn best_config(sr: &StudyResult) -> Result<TrialConfig> {
    let losses: Vec<Option<f64>> = sr.trials.iter().map(TrialRecord::best_val_loss).collect();
    select_best(&losses)
        .map(|i| sr.trials[i].config.clone())
        .ok_or(Error::StudyFailed(sr.trials.len()))
}

fn run_trial(
    index: usize,
    encoder: &EncoderConfig,
    head: &HeadConfig,
    splits: &DatasetSplits,
    vocab: &Vocabulary,
    schema: &TagSchema,
    space: &SearchSpace,
    study: &StudyConfig,
) -> (TrialRecord, Option<ModelBundle>) {
    let config = trial_config(space, study.master_seed, index);
    let tc = TrainConfig::new(config.clone())
        .with_max_epochs(study.max_epochs)
        .with_patience(study.patience);
    let result = init_model(encoder, head, schema, vocab, config.trial_seed)
        .and_then(|m| trainer::train(m, &splits.train, &splits.validation, vocab, schema, &tc));
    match result {
        Ok(out) => (
            TrialRecord {
                index,
                config,
                status: TrialStatus::Completed {
                    best_val_loss: out.log.best_val_loss(),
                    log: out.log,
                },
            },
            Some(out.model),
        ),
        Err(e) => (
            TrialRecord {
                index,
                config,
                status: TrialStatus::Failed { reason: e.to_string() },
            },
            None,
        ),
    }
}

/// Run `study.n_trials` independent trials in parallel.
pub fn run_study(
    encoder: &EncoderConfig,
    head: &HeadConfig,
    splits: &DatasetSplits,
    vocab: &Vocabulary,
    schema: &TagSchema,
    space: &SearchSpace,
    study: &StudyConfig,
) -> Result<StudyResult> {
    run_study_with_progress(encoder, head, splits, vocab, schema, space, study, |_| {})
}

/// [`run_study`], calling `progress` as each trial finishes. Completion
/// order may vary between runs; the result does not.
#[allow(clippy::too_many_arguments)]
pub fn run_study_with_progress<P>(
    encoder: &EncoderConfig,
    head: &HeadConfig,
    splits: &DatasetSplits,
    vocab: &Vocabulary,
    schema: &TagSchema,
    space: &SearchSpace,
    study: &StudyConfig,
    progress: P,
) -> Result<StudyResult>
where
    P: Fn(&TrialRecord) + Sync,
{
    if study.n_trials == 0 {
        return Err(Error::Config("a study needs at least one trial".into()));
    }
    space.validate()?;
    let runs: Vec<(TrialRecord, Option<ModelBundle>)> = (0..study.n_trials)
        .into_par_iter()
        .map(|i| {
            let run = run_trial(i, encoder, head, splits, vocab, schema, space, study);
            progress(&run.0);
            run
        })
        .collect();

    let losses: Vec<Option<f64>> = runs.iter().map(|(r, _)| r.best_val_loss()).collect();
    let best_trial = select_best(&losses).ok_or(Error::StudyFailed(study.n_trials))?;
    let mut trials = Vec::with_capacity(runs.len());
    let mut best_model = None;
    for (record, model) in runs {
        if record.index == best_trial {
            best_model = model;
        }
        trials.push(record);
    }
    Ok(StudyResult {
        trials,
        best_trial,
        best_model: best_model.expect("best trial completed"),
    })
}
