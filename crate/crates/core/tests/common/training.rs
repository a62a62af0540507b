//! Training scenarios shared by the trainer tests and the acceptance suite.

use adresparse::data::{default_schema, generate_dataset, AddressSample, TagId, TagSchema};
use adresparse::encoding::{build_vocab, Vocabulary};
use adresparse::evalmetrics::token_accuracy;
use adresparse::hpo::TrialConfig;
use adresparse::model::{init_model, predict_tags, variant, HeadConfig, ModelBundle};
use adresparse::optim::OptimizerKind;
use adresparse::trainer::{evaluate_loss, train_with_validator, TrainConfig, TrainOutcome};

pub struct Small {
    pub schema: TagSchema,
    pub data: Vec<AddressSample>,
    pub vocab: Vocabulary,
}

pub fn small_corpus(seed: u64, size: usize) -> Small {
    let schema = default_schema();
    let data = generate_dataset(seed, size, &schema).unwrap();
    let vocab = build_vocab(&data, 1).unwrap();
    Small { schema, data, vocab }
}

/// Result of memorizing a 32-sample training set.
pub struct Overfit {
    pub steps: u64,
    pub loss: f64,
    /// Fraction of tokens.
    pub accuracy: f64,
}

/// Train the base encoder with the MLP head on 32 samples for 200 AdamW
/// steps (batch 8, 50 epochs), then score it on the same samples.
pub fn overfit_base_mlp() -> Overfit {
    let c = small_corpus(7, 32);
    let trial = TrialConfig {
        learning_rate: 3e-3,
        batch_size: 8,
        optimizer: OptimizerKind::AdamW,
        weight_decay: 0.0,
        trial_seed: 1,
    };
    let epochs = 200 * trial.batch_size / c.data.len();
    let tc = TrainConfig::new(trial).with_max_epochs(epochs).with_patience(epochs);
    let model = init_model(&variant("base").unwrap(), &HeadConfig::mlp(), &c.schema, &c.vocab, 1).unwrap();
    let out = train_with_validator(model, &c.data, &c.vocab, &c.schema, &tc, |m, _| {
        evaluate_loss(m, &c.data, &c.vocab, &c.schema, 32)
    })
    .unwrap();
    let pred = predict_tags(&out.model, &c.data, &c.vocab, &c.schema).unwrap();
    let gold: Vec<Vec<TagId>> = c.data.iter().map(|s| s.tags().to_vec()).collect();
    Overfit {
        steps: (out.log.epochs.len() * c.data.len().div_ceil(8)) as u64,
        loss: evaluate_loss(&out.model, &c.data, &c.vocab, &c.schema, 32).unwrap(),
        accuracy: token_accuracy(&gold, &pred).unwrap() / 100.0,
    }
}

/// Feed a fixed validation-loss trace to the trainer, keeping a copy of the
/// weights seen at each epoch.
pub fn scripted_run(trace: &[f64], patience: usize) -> (TrainOutcome, Vec<ModelBundle>) {
    let c = small_corpus(3, 24);
    let trial = TrialConfig {
        learning_rate: 1e-3,
        batch_size: 8,
        optimizer: OptimizerKind::Sgd,
        weight_decay: 0.0,
        trial_seed: 5,
    };
    let tc = TrainConfig::new(trial).with_max_epochs(10).with_patience(patience);
    let model = init_model(&variant("small").unwrap(), &HeadConfig::linear(), &c.schema, &c.vocab, 2).unwrap();
    let mut snapshots = Vec::new();
    let out = train_with_validator(model, &c.data, &c.vocab, &c.schema, &tc, |m, epoch| {
        snapshots.push(m.clone());
        Ok(trace[epoch - 1])
    })
    .unwrap();
    (out, snapshots)
}
