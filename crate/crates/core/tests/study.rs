//! Random-search studies on a small corpus.

mod common;

use adresparse::data::split_dataset;
use adresparse::encoding::build_vocab;
use adresparse::hpo::{best_config, run_study, trial_config, SearchSpace, StudyConfig, StudyResult, TrialStatus};
use adresparse::model::{variant, HeadConfig};
use adresparse::Error;
use common::training::small_corpus;

fn study(n_trials: usize, master_seed: u64) -> StudyResult {
    let c = small_corpus(31, 80);
    let splits = split_dataset(&c.data, 31).unwrap();
    let vocab = build_vocab(&splits.train, 1).unwrap();
    let cfg = StudyConfig::new(master_seed).with_trials(n_trials).with_max_epochs(2);
    run_study(
        &variant("small").unwrap(),
        &HeadConfig::linear(),
        &splits,
        &vocab,
        &c.schema,
        &SearchSpace::default(),
        &cfg,
    )
    .unwrap()
}

#[test]
fn single_trial() {
    let sr = study(1, 3);
    assert_eq!(sr.best_trial, 0);
    assert_eq!(best_config(&sr).unwrap(), sr.trials[0].config);
}

#[test]
fn deterministic_and_best_is_at_most_median() {
    let a = study(6, 17);
    let b = study(6, 17);
    assert_eq!(a, b);
    assert_eq!(a.to_csv(), b.to_csv());

    let mut losses: Vec<f64> = a.completed().filter_map(|t| t.best_val_loss()).collect();
    losses.sort_by(f64::total_cmp);
    let median = losses[losses.len() / 2];
    assert!(a.trials[a.best_trial].best_val_loss().unwrap() <= median);
    let best = best_config(&a).unwrap();
    assert!(SearchSpace::default().contains(&best));
    for (i, t) in a.trials.iter().enumerate() {
        assert_eq!(t.index, i);
        assert_eq!(t.config, trial_config(&SearchSpace::default(), 17, i));
    }
    assert_eq!(a.to_csv().lines().next().unwrap(), "trial,lr,batch,optimizer,wd,status,best_val_loss");
    assert_eq!(a.to_csv().lines().count(), 7);
}

#[test]
fn trial_results_do_not_depend_on_study_size() {
    let small = study(2, 40);
    let large = study(4, 40);
    assert_eq!(small.trials[..], large.trials[..2]);
}

#[test]
fn injected_losses_and_failures() {
    let mut sr = study(3, 8);
    for (t, loss) in sr.trials.iter_mut().zip([0.5, 0.3, 0.3]) {
        if let TrialStatus::Completed { best_val_loss, .. } = &mut t.status {
            *best_val_loss = loss;
        }
    }
    assert_eq!(best_config(&sr).unwrap(), sr.trials[1].config);

    for t in &mut sr.trials {
        t.status = TrialStatus::Failed { reason: "non-finite gradient".into() };
    }
    assert!(matches!(best_config(&sr), Err(Error::StudyFailed(3))));
    assert!(sr.to_csv().contains(",failed,\n"));
}

#[test]
fn study_fails_when_every_trial_diverges() {
    let c = small_corpus(31, 40);
    let splits = split_dataset(&c.data, 31).unwrap();
    let vocab = build_vocab(&splits.train, 1).unwrap();
    let space = SearchSpace {
        lr_min: 1e300,
        lr_max: 1e300,
        ..SearchSpace::default()
    };
    let cfg = StudyConfig::new(1).with_trials(3).with_max_epochs(2);
    let result = run_study(&variant("small").unwrap(), &HeadConfig::mlp(), &splits, &vocab, &c.schema, &space, &cfg);
    assert!(matches!(result, Err(Error::StudyFailed(3))), "{result:?}");
}
