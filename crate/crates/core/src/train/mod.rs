//! AdamW training against binary cross-entropy, with early stopping on
//! validation accuracy and k-fold validation.
//!
//! Per-sample forward and gradient passes run on the rayon pool; results are
//! collected and summed in sample-index order so runs are bitwise
//! reproducible for a given seed.

mod adamw;
mod metrics;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adamw::{AdamW, AdamWConfig};
pub use metrics::{Confusion, Metrics};

use crate::ansatz::{init_params, InitScheme, ParamSchema, ParamStore};
use crate::config::{ModelConfig, Mode};
use crate::data::{tokenize, DatasetSplits, SequenceRecord};
use crate::diagram::{DiagramError, SchemeDiagram};
use crate::engine::{evaluate_mode, plan, CircuitPlan, EngineError};
use crate::grad::{bce, grad_adjoint, grad_finite_diff, grad_param_shift, grad_spsa, GradError, Gradient};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("the {0} split is empty")]
    EmptySplit(&'static str),
    #[error("cannot make {k} folds from {n} samples (need 2 <= k <= n)")]
    InvalidFoldCount { k: usize, n: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training state does not match this run: {0}")]
    IncompatibleState(String),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Grad(#[from] GradError),
}

/// Gradient estimator used for the optimizer step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GradBackend {
    #[default]
    Adjoint,
    ParamShift,
    FiniteDiff { h: f64 },
    Spsa { c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub optimizer: AdamWConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub k_folds: usize,
    pub seed: u64,
    pub init: InitScheme,
    pub gradient: GradBackend,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            optimizer: AdamWConfig::default(),
            batch_size: 16,
            max_epochs: 50,
            early_stop_patience: 5,
            k_folds: 5,
            seed: 0,
            init: InitScheme::default(),
            gradient: GradBackend::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        self.model.validate().map_err(TrainError::InvalidConfig)?;
        let o = &self.optimizer;
        if !(o.learning_rate >= 0.0) || !o.learning_rate.is_finite() {
            return bad("learning_rate must be a non-negative number");
        }
        if !(o.weight_decay >= 0.0) {
            return bad("weight_decay must be non-negative");
        }
        if !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) {
            return bad("betas must lie in [0, 1)");
        }
        if !(o.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if self.early_stop_patience == 0 {
            return bad("early_stop_patience must be positive");
        }
        if self.k_folds < 2 {
            return bad("k_folds must be at least 2");
        }
        if let InitScheme::SmallNormal { sigma } = self.init {
            if !(sigma >= 0.0) || !sigma.is_finite() {
                return bad("init sigma must be a non-negative number");
            }
        }
        match self.gradient {
            GradBackend::FiniteDiff { h: x } | GradBackend::Spsa { c: x } if !(x > 0.0) => {
                bad("gradient perturbation must be positive")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingReason {
    MaxEpochs,
    EarlyStop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub rows: Vec<EpochRow>,
    pub best_epoch: usize,
    pub stopping_reason: Option<StoppingReason>,
}

impl TrainHistory {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_acc,val_loss,val_acc";

    /// Rows as CSV. Floats use the shortest round-trip representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc));
        }
        out
    }
}

/// Everything needed to continue a run after any completed epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub store: ParamStore,
    pub optimizer: AdamW,
    /// Completed epochs.
    pub epoch: usize,
    pub best_store: ParamStore,
    pub best_val_acc: Option<f64>,
    pub best_epoch: usize,
    pub stale_epochs: usize,
    pub rows: Vec<EpochRow>,
    pub stopping_reason: Option<StoppingReason>,
}

impl TrainState {
    pub fn history(&self) -> TrainHistory {
        TrainHistory { rows: self.rows.clone(), best_epoch: self.best_epoch, stopping_reason: self.stopping_reason }
    }

    pub fn is_finished(&self) -> bool {
        self.stopping_reason.is_some()
    }
}

struct Example {
    plan: CircuitPlan,
    label: u8,
}

fn diagrams(model: &ModelConfig, records: &[SequenceRecord]) -> Result<Vec<SchemeDiagram>, TrainError> {
    records.iter().map(|r| Ok(model.build_diagram(&tokenize(r))?)).collect()
}

fn examples(model: &ModelConfig, records: &[SequenceRecord], ds: &[SchemeDiagram]) -> Result<Vec<Example>, TrainError> {
    records
        .iter()
        .zip(ds)
        .map(|(r, d)| Ok(Example { plan: plan(d, model)?, label: r.label }))
        .collect()
}

fn metrics_of(examples: &[Example], store: &ParamStore, mode: Mode) -> Result<Metrics, TrainError> {
    let outcomes: Vec<Result<_, EngineError>> =
        examples.par_iter().map(|e| evaluate_mode(&e.plan, store, mode)).collect();
    let mut confusion = Confusion::default();
    let mut loss = 0.0;
    for (e, o) in examples.iter().zip(outcomes) {
        let o = o?;
        confusion.record(o.predicted(), e.label);
        loss += bce([o.p0, o.p1], e.label).0;
    }
    let n = examples.len().max(1) as f64;
    Ok(Metrics::from_confusion(confusion, loss / n))
}

/// Metrics of `store` on `records`, with predictions `argmax(p̂0, p̂1)`.
pub fn evaluate_split(store: &ParamStore, model: &ModelConfig, records: &[SequenceRecord]) -> Result<Metrics, TrainError> {
    let ds = diagrams(model, records)?;
    metrics_of(&examples(model, records, &ds)?, store, model.mode)
}

/// A training run bound to fixed splits.
pub struct Trainer {
    config: TrainConfig,
    schema: ParamSchema,
    train: Vec<Example>,
    validation: Vec<Example>,
}

impl Trainer {
    pub fn new(config: &TrainConfig, splits: &DatasetSplits) -> Result<Self, TrainError> {
        config.validate()?;
        if splits.train.is_empty() {
            return Err(TrainError::EmptySplit("train"));
        }
        if splits.validation.is_empty() {
            return Err(TrainError::EmptySplit("validation"));
        }
        let model = &config.model;
        let tr = diagrams(model, &splits.train)?;
        let va = diagrams(model, &splits.validation)?;
        let te = diagrams(model, &splits.test)?;
        let all: Vec<&SchemeDiagram> = tr.iter().chain(&va).chain(&te).collect();
        let schema = model.schema(&all);
        Ok(Self {
            train: examples(model, &splits.train, &tr)?,
            validation: examples(model, &splits.validation, &va)?,
            config: config.clone(),
            schema,
        })
    }

    pub fn schema(&self) -> &ParamSchema {
        &self.schema
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn initial_state(&self) -> TrainState {
        let store = init_params(&self.schema, self.config.seed, self.config.init);
        TrainState {
            optimizer: AdamW::new(store.total_params()),
            best_store: store.clone(),
            store,
            epoch: 0,
            best_val_acc: None,
            best_epoch: 0,
            stale_epochs: 0,
            rows: Vec::new(),
            stopping_reason: None,
        }
    }

    /// Check that a restored state belongs to this run.
    pub fn check_state(&self, state: &TrainState) -> Result<(), TrainError> {
        if state.store.schema() != self.schema {
            return Err(TrainError::IncompatibleState("parameter keys or shapes differ".into()));
        }
        if state.optimizer.m.len() != self.schema.total_params() || state.optimizer.v.len() != state.optimizer.m.len() {
            return Err(TrainError::IncompatibleState("optimizer state has the wrong length".into()));
        }
        if state.rows.len() != state.epoch {
            return Err(TrainError::IncompatibleState("history length differs from the epoch counter".into()));
        }
        Ok(())
    }

    fn sample_gradient(&self, e: &Example, store: &ParamStore, sample_seed: u64) -> Result<Gradient, GradError> {
        let mode = self.config.model.mode;
        match self.config.gradient {
            GradBackend::Adjoint => grad_adjoint(&e.plan, store, e.label, mode),
            GradBackend::ParamShift => grad_param_shift(&e.plan, store, e.label, mode),
            GradBackend::FiniteDiff { h } => grad_finite_diff(&e.plan, store, e.label, mode, h),
            GradBackend::Spsa { c } => grad_spsa(&e.plan, store, e.label, mode, c, sample_seed),
        }
    }

    /// Mean gradient over `batch`, summed in index order.
    fn batch_gradient(&self, batch: &[usize], store: &ParamStore, step: u64) -> Result<Vec<f64>, TrainError> {
        let seed = self.config.seed;
        let grads: Vec<Result<Gradient, GradError>> = batch
            .par_iter()
            .map(|&i| {
                let sample_seed = seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (i as u64);
                self.sample_gradient(&self.train[i], store, sample_seed)
            })
            .collect();
        let mut total = vec![0.0; store.total_params()];
        for g in grads {
            for (t, x) in total.iter_mut().zip(g?.flatten()) {
                *t += x;
            }
        }
        let n = batch.len() as f64;
        total.iter_mut().for_each(|x| *x /= n);
        Ok(total)
    }

    /// Run one epoch and update the early-stopping bookkeeping.
    pub fn epoch(&self, state: &mut TrainState) -> Result<EpochRow, TrainError> {
        let epoch = state.epoch + 1;
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);

        let mut params = state.store.flatten();
        for batch in order.chunks(self.config.batch_size) {
            let g = self.batch_gradient(batch, &state.store, state.optimizer.step)?;
            state.optimizer.step(&self.config.optimizer, &mut params, &g);
            state.store.assign(&params);
        }

        let mode = self.config.model.mode;
        let tr = metrics_of(&self.train, &state.store, mode)?;
        let va = metrics_of(&self.validation, &state.store, mode)?;
        let row = EpochRow {
            epoch,
            train_loss: tr.bce_loss,
            train_acc: tr.accuracy,
            val_loss: va.bce_loss,
            val_acc: va.accuracy,
        };
        state.epoch = epoch;
        state.rows.push(row);
        if state.best_val_acc.map_or(true, |b| va.accuracy > b) {
            state.best_val_acc = Some(va.accuracy);
            state.best_epoch = epoch;
            state.best_store = state.store.clone();
            state.stale_epochs = 0;
        } else {
            state.stale_epochs += 1;
        }
        if state.stale_epochs >= self.config.early_stop_patience {
            state.stopping_reason = Some(StoppingReason::EarlyStop);
        } else if epoch >= self.config.max_epochs {
            state.stopping_reason = Some(StoppingReason::MaxEpochs);
        }
        Ok(row)
    }

    /// Prepare a restored state for [`Trainer::run`]. A run that ended on the
    /// epoch budget is reopened when this trainer allows more epochs.
    pub fn resume(&self, state: &mut TrainState) -> Result<(), TrainError> {
        self.check_state(state)?;
        if state.stopping_reason == Some(StoppingReason::MaxEpochs) && state.epoch < self.config.max_epochs {
            state.stopping_reason = None;
        }
        Ok(())
    }

    /// Train until a stopping condition, calling `on_epoch` after each epoch.
    pub fn run(&self, state: &mut TrainState, mut on_epoch: impl FnMut(&TrainState)) -> Result<(), TrainError> {
        self.check_state(state)?;
        while !state.is_finished() {
            self.epoch(state)?;
            on_epoch(state);
        }
        Ok(())
    }
}

/// Train on `splits` and return the best-validation snapshot with its history.
pub fn train(config: &TrainConfig, splits: &DatasetSplits) -> Result<(ParamStore, TrainHistory), TrainError> {
    let trainer = Trainer::new(config, splits)?;
    let mut state = trainer.initial_state();
    trainer.run(&mut state, |_| {})?;
    let history = state.history();
    Ok((state.best_store, history))
}

/// Seeded fold assignment: a shuffled index list cut into `k` contiguous
/// folds whose sizes differ by at most one.
pub fn kfold_assignments(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, TrainError> {
    if k < 2 || k > n {
        return Err(TrainError::InvalidFoldCount { k, n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        folds.push(idx[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub metrics: Metrics,
    pub best_epoch: usize,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFoldReport {
    pub folds: Vec<FoldReport>,
    pub mean_accuracy: f64,
    /// Population standard deviation over folds.
    pub std_accuracy: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Train once per fold, validating on the held-out fold; fold metrics come
/// from each run's best-validation snapshot.
pub fn kfold(config: &TrainConfig, records: &[SequenceRecord]) -> Result<KFoldReport, TrainError> {
    let assignments = kfold_assignments(records.len(), config.k_folds, config.seed)?;
    let mut folds = Vec::with_capacity(assignments.len());
    for (f, held_out) in assignments.iter().enumerate() {
        let mut in_fold = vec![false; records.len()];
        held_out.iter().for_each(|&i| in_fold[i] = true);
        let splits = DatasetSplits {
            train: records.iter().zip(&in_fold).filter(|(_, &v)| !v).map(|(r, _)| r.clone()).collect(),
            validation: held_out.iter().map(|&i| records[i].clone()).collect(),
            test: Vec::new(),
            seed: config.seed,
        };
        let trainer = Trainer::new(config, &splits)?;
        let mut state = trainer.initial_state();
        trainer.run(&mut state, |_| {})?;
        let metrics = metrics_of(&trainer.validation, &state.best_store, config.model.mode)?;
        folds.push(FoldReport { fold: f, metrics, best_epoch: state.best_epoch, epochs: state.epoch });
    }
    let acc: Vec<f64> = folds.iter().map(|f| f.metrics.accuracy).collect();
    let f1: Vec<f64> = folds.iter().map(|f| f.metrics.f1).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&acc);
    let (mean_f1, std_f1) = mean_std(&f1);
    Ok(KFoldReport { folds, mean_accuracy, std_accuracy, mean_f1, std_f1 })
}
