use protqtn_core::checkpoint::Checkpoint;
use protqtn_core::data::{split, synth_motif_dataset, DatasetSplits, SequenceRecord};
use protqtn_core::prelude::*;
use protqtn_core::train::{evaluate_split, kfold, StoppingReason, Trainer};

/// Two-token sequences over {A, C} labelled by their first token.
fn first_token_task() -> DatasetSplits {
    let pairs = ["AA", "AC", "CA", "CC"];
    let mut records = Vec::new();
    for i in 0..40 {
        let s = pairs[i % 4];
        records.push(SequenceRecord::new(format!("ft-{i}"), s, u8::from(s.starts_with('C'))));
    }
    let half = |r: &[SequenceRecord]| r.to_vec();
    DatasetSplits { train: half(&records[..24]), validation: half(&records[24..32]), test: half(&records[32..]), seed: 0 }
}

fn small_config(seed: u64) -> TrainConfig {
    let mut c = TrainConfig { seed, max_epochs: 30, early_stop_patience: 30, batch_size: 4, ..Default::default() };
    c.model.sharing = Sharing::Hierarchical;
    c.model.mode = Mode::Discard;
    c.optimizer.learning_rate = 0.1;
    c
}

#[test]
fn first_token_task_is_learned() {
    let splits = first_token_task();
    let cfg = small_config(1);
    let (store, history) = train(&cfg, &splits).unwrap();
    let best = history.rows.iter().map(|r| r.train_acc).fold(0.0, f64::max);
    assert_eq!(best, 1.0, "{:?}", history.rows);
    let m = evaluate_split(&store, &cfg.model, &splits.test).unwrap();
    assert_eq!(m.accuracy, 1.0);
}

#[test]
fn small_learning_rate_decreases_loss() {
    let splits = split(&synth_motif_dataset(120, 6, 4, (TokenId(0), TokenId(1)), 2).unwrap(), [0.7, 0.15, 0.15], 3).unwrap();
    for seed in 0..3 {
        let mut cfg = TrainConfig { seed, max_epochs: 10, early_stop_patience: 100, ..Default::default() };
        cfg.model.mode = Mode::Discard;
        cfg.optimizer.learning_rate = 1e-3;
        let (_, h) = train(&cfg, &splits).unwrap();
        assert_eq!(h.rows.len(), 10);
        assert!(h.rows[9].train_loss < h.rows[0].train_loss, "seed {seed}: {:?}", h.rows);
    }
}

fn motif_splits() -> DatasetSplits {
    split(&synth_motif_dataset(80, 5, 4, (TokenId(0), TokenId(1)), 7).unwrap(), [0.6, 0.2, 0.2], 5).unwrap()
}

#[test]
fn training_is_bitwise_deterministic() {
    let mut cfg = small_config(11);
    cfg.max_epochs = 6;
    let a = train(&cfg, &motif_splits()).unwrap();
    let b = train(&cfg, &motif_splits()).unwrap();
    assert_eq!(a.1.to_csv(), b.1.to_csv());
    let bits = |s: &ParamStore| s.flatten().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.0), bits(&b.0));
}

#[test]
fn resume_from_checkpoint_matches_uninterrupted_run() {
    let mut cfg = small_config(4);
    cfg.max_epochs = 8;
    let splits = motif_splits();
    let trainer = Trainer::new(&cfg, &splits).unwrap();

    let mut whole = trainer.initial_state();
    trainer.run(&mut whole, |_| {}).unwrap();

    let mut partial = trainer.initial_state();
    for _ in 0..3 {
        trainer.epoch(&mut partial).unwrap();
    }
    let text = Checkpoint::new(cfg.clone(), &partial.store.clone(), Some(partial)).to_json();
    let mut resumed = Checkpoint::from_json(&text).unwrap().state.unwrap();
    trainer.check_state(&resumed).unwrap();
    trainer.run(&mut resumed, |_| {}).unwrap();

    assert_eq!(resumed.history().to_csv(), whole.history().to_csv());
    assert_eq!(
        Checkpoint::new(cfg.clone(), &resumed.best_store.clone(), Some(resumed)).to_json(),
        Checkpoint::new(cfg, &whole.best_store.clone(), Some(whole)).to_json()
    );
}

#[test]
fn larger_budget_reopens_a_finished_run() {
    let splits = motif_splits();
    let mut long = small_config(9);
    long.max_epochs = 7;
    let short = TrainConfig { max_epochs: 3, ..long.clone() };
    let full = Trainer::new(&long, &splits).unwrap();
    let mut whole = full.initial_state();
    full.run(&mut whole, |_| {}).unwrap();

    let first = Trainer::new(&short, &splits).unwrap();
    let mut state = first.initial_state();
    first.run(&mut state, |_| {}).unwrap();
    assert_eq!(state.stopping_reason, Some(StoppingReason::MaxEpochs));
    full.resume(&mut state).unwrap();
    full.run(&mut state, |_| {}).unwrap();
    assert_eq!(state, whole);
}

#[test]
fn history_bookkeeping_is_monotone() {
    let mut cfg = small_config(2);
    cfg.max_epochs = 15;
    cfg.early_stop_patience = 2;
    let (_, h) = train(&cfg, &motif_splits()).unwrap();
    let mut best = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    for r in &h.rows {
        if r.val_acc > best {
            best = r.val_acc;
            best_epoch = r.epoch;
        }
    }
    assert_eq!(h.best_epoch, best_epoch);
    if h.stopping_reason == Some(StoppingReason::EarlyStop) {
        assert_eq!(h.rows.len(), best_epoch + cfg.early_stop_patience);
    }
    assert!(h.rows.windows(2).all(|w| w[1].epoch == w[0].epoch + 1));
}

#[test]
fn kfold_reports_fold_means() {
    let records = synth_motif_dataset(100, 4, 4, (TokenId(0), TokenId(1)), 1).unwrap();
    let mut cfg = small_config(3);
    cfg.max_epochs = 3;
    cfg.k_folds = 5;
    let report = kfold(&cfg, &records).unwrap();
    assert_eq!(report.folds.len(), 5);
    let held: usize = report.folds.iter().map(|f| f.metrics.confusion.total()).sum();
    assert_eq!(held, 100);
    let mean = report.folds.iter().map(|f| f.metrics.accuracy).sum::<f64>() / 5.0;
    assert!((report.mean_accuracy - mean).abs() < 1e-15);
    assert!(report.std_accuracy >= 0.0);
}

#[test]
fn evaluation_metrics_are_consistent() {
    let splits = motif_splits();
    let cfg = small_config(0);
    let trainer = Trainer::new(&cfg, &splits).unwrap();
    let store = trainer.initial_state().store;
    let m = evaluate_split(&store, &cfg.model, &splits.test).unwrap();
    assert_eq!(m.confusion.total(), splits.test.len());
    let c = m.confusion;
    assert_eq!(m.accuracy, (c.tp + c.tn) as f64 / c.total() as f64);
    assert!(m.bce_loss.is_finite() && m.bce_loss > 0.0);
}
