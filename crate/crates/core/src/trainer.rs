//! Shuffled mini-batch training with early stopping on validation loss.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{AddressSample, TagSchema};
use crate::encoding::{encode_batch, Vocabulary};
use crate::error::{Error, Result};
use crate::hpo::TrialConfig;
use crate::model::{forward, loss_and_grads, loss_sum, ModelBundle, Mode};
use crate::optim::{LrSchedule, OptimizerConfig, OptimizerState};

pub const DEFAULT_MAX_EPOCHS: usize = 10;
pub const DEFAULT_PATIENCE: usize = 2;

/// Epoch budget, stopping rule and the trial hyperparameters to train with.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub trial: TrialConfig,
}

impl TrainConfig {
    pub fn new(trial: TrialConfig) -> Self {
        Self {
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
            trial,
        }
    }

    pub fn with_max_epochs(mut self, max_epochs: usize) -> Self {
        self.max_epochs = max_epochs;
        self
    }

    pub fn with_patience(mut self, patience: usize) -> Self {
        self.patience = patience;
        self
    }

    pub fn batch_size(&self) -> usize {
        self.trial.batch_size
    }

    pub fn seed(&self) -> u64 {
        self.trial.trial_seed
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig::new(self.trial.optimizer, self.trial.weight_decay)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config("max_epochs and patience must be at least 1".into()));
        }
        if self.trial.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        let lr = self.trial.learning_rate;
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {lr} must be positive")));
        }
        Ok(())
    }
}

/// One finished epoch. Equality ignores `wall_time`.
#[derive(Clone, Debug)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Learning rate of the epoch's first step.
    pub lr: f64,
    pub wall_time: f64,
}

impl PartialEq for EpochRecord {
    fn eq(&self, other: &Self) -> bool {
        self.epoch == other.epoch
            && self.train_loss.to_bits() == other.train_loss.to_bits()
            && self.val_loss.to_bits() == other.val_loss.to_bits()
            && self.lr.to_bits() == other.lr.to_bits()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub stopped_epoch: usize,
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn best_val_loss(&self) -> f64 {
        self.epochs[self.best_epoch - 1].val_loss
    }

    /// `epoch,train_loss,val_loss,lr` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,lr\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.val_loss, e.lr));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Continue,
    Stop,
}

/// Patience counter over validation losses. Only a strict decrease counts
/// as an improvement.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> Verdict {
        match self.best {
            Some((_, best)) if val_loss >= best => {
                self.stale += 1;
                if self.stale >= self.patience {
                    Verdict::Stop
                } else {
                    Verdict::Continue
                }
            }
            _ => {
                self.best = Some((epoch, val_loss));
                self.stale = 0;
                Verdict::Improved
            }
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.map(|(e, _)| e)
    }
}

/// Weights and optimizer state from the best epoch, with the full log.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: ModelBundle,
    pub optimizer: OptimizerState,
    pub log: TrainLog,
}

/// Token-mean cross-entropy of `samples` in eval mode.
pub fn evaluate_loss(
    model: &ModelBundle,
    samples: &[AddressSample],
    vocab: &Vocabulary,
    schema: &TagSchema,
    batch_size: usize,
) -> Result<f64> {
    if samples.is_empty() || batch_size == 0 {
        return Err(Error::Config("evaluate_loss needs samples and a positive batch size".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut total = 0.0;
    let mut count = 0;
    for chunk in samples.chunks(batch_size) {
        let batch = encode_batch(chunk, vocab, schema)?;
        let out = forward(model, &batch, Mode::Eval, &mut rng)?;
        let (s, c) = loss_sum(&out, &batch);
        total += s;
        count += c;
    }
    if count == 0 {
        return Err(Error::EmptyLoss);
    }
    Ok(total / count as f64)
}

/// Train on `train`, validating on `validation` after every epoch.
pub fn train(
    model: ModelBundle,
    train: &[AddressSample],
    validation: &[AddressSample],
    vocab: &Vocabulary,
    schema: &TagSchema,
    tc: &TrainConfig,
) -> Result<TrainOutcome> {
    if validation.is_empty() {
        return Err(Error::Config("validation split is empty".into()));
    }
    let batch_size = tc.batch_size();
    train_with_validator(model, train, vocab, schema, tc, |m, _| {
        evaluate_loss(m, validation, vocab, schema, batch_size)
    })
}

/// Like [`train`], with the validation loss supplied by `validator`, which
/// receives the model after each epoch and the 1-based epoch number.
pub fn train_with_validator<F>(
    mut model: ModelBundle,
    train: &[AddressSample],
    vocab: &Vocabulary,
    schema: &TagSchema,
    tc: &TrainConfig,
    mut validator: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&ModelBundle, usize) -> Result<f64>,
{
    tc.validate()?;
    if train.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    model.check_vocab(vocab)?;

    let batch_size = tc.batch_size();
    let steps_per_epoch = train.len().div_ceil(batch_size);
    let schedule = LrSchedule::new(tc.trial.learning_rate, (tc.max_epochs * steps_per_epoch) as u64)?;
    let mut optimizer = OptimizerState::new(tc.optimizer(), &model.params);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(tc.seed());
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(tc.seed());
    dropout_rng.set_stream(1);

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut stopper = EarlyStopping::new(tc.patience);
    let mut epochs = Vec::new();
    let mut best = (model.clone(), optimizer.clone());
    let mut step = 0u64;

    for epoch in 1..=tc.max_epochs {
        let started = Instant::now();
        let first_lr = schedule.lr_at(step);
        order.shuffle(&mut shuffle_rng);
        let mut loss_total = 0.0;
        let mut token_total = 0;
        for idx in order.chunks(batch_size) {
            let samples: Vec<AddressSample> = idx.iter().map(|&i| train[i].clone()).collect();
            let batch = encode_batch(&samples, vocab, schema)?;
            let (loss, grads) = loss_and_grads(&model, &batch, Mode::Train, &mut dropout_rng)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteGradient("loss".into()));
            }
            optimizer.step(&mut model.params, &grads, schedule.lr_at(step))?;
            step += 1;
            let tokens = batch.real_tokens();
            loss_total += loss * tokens as f64;
            token_total += tokens;
        }

        let val_loss = validator(&model, epoch)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteGradient("validation loss".into()));
        }
        epochs.push(EpochRecord {
            epoch,
            train_loss: loss_total / token_total as f64,
            val_loss,
            lr: first_lr,
            wall_time: started.elapsed().as_secs_f64(),
        });
        match stopper.observe(epoch, val_loss) {
            Verdict::Improved => best = (model.clone(), optimizer.clone()),
            Verdict::Continue => {}
            Verdict::Stop => break,
        }
    }

    let stopped_epoch = epochs.len();
    let best_epoch = stopper.best_epoch().expect("at least one epoch ran");
    Ok(TrainOutcome {
        model: best.0,
        optimizer: best.1,
        log: TrainLog {
            epochs,
            stopped_epoch,
            best_epoch,
        },
    })
}
