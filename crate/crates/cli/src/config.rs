//! Run configuration files.
//!
//! A TOML file with optional top-level paths and `[model]`, `[training]` and
//! `[prepare]` tables. Every table rejects unknown keys. Relative paths are
//! resolved against the directory holding the file.
//!
//! ```toml
//! data = "prepared/dataset.tsv"
//! out = "runs/hptn"
//! subset = 300
//!
//! [model]
//! topology = "ptn"
//! sharing = "hierarchical"
//! mode = "discard"
//! q = 1
//! family = "sim14"
//! depth = 1
//!
//! [training]
//! seed = 7
//! learning_rate = 0.01
//! ```

use std::path::{Path, PathBuf};

use protqtn_core::ansatz::{AnsatzFamily, Family, InitScheme};
use protqtn_core::config::{BoxAnsatz, ModelConfig, Mode, Schedule, Topology};
use protqtn_core::data::{LengthBounds, DEFAULT_SPLIT_RATIOS};
use protqtn_core::prelude::Sharing;
use protqtn_core::train::{AdamWConfig, GradBackend, TrainConfig};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Canonical dataset file written by `prepare`.
    pub data: Option<PathBuf>,
    /// Output directory.
    pub out: Option<PathBuf>,
    /// Seed of the train/validation/test split. Defaults to the seed recorded
    /// in the dataset manifest, or 0.
    pub split_seed: Option<u64>,
    pub split_ratios: Option<[f64; 3]>,
    /// Train on a class-stratified subset of this many records.
    pub subset: Option<usize>,
    pub model: ModelSection,
    pub training: TrainingSection,
    pub prepare: PrepareSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub topology: String,
    pub sharing: String,
    pub mode: String,
    pub q: usize,
    pub family: String,
    pub depth: usize,
    pub schedule: String,
    /// Per-role overrides of `family`/`depth`.
    pub word: Option<AnsatzSection>,
    pub filter: Option<AnsatzSection>,
    pub merge: Option<AnsatzSection>,
    pub classifier: Option<AnsatzSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    pub family: String,
    pub depth: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub seed: u64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub k_folds: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// `uniform` or `normal`.
    pub init: String,
    pub init_sigma: f64,
    /// `adjoint`, `param_shift`, `finite_diff` or `spsa`.
    pub gradient: String,
    /// Step `h` for finite differences, perturbation `c` for SPSA.
    pub gradient_step: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrepareSection {
    pub fasta: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            out: None,
            split_seed: None,
            split_ratios: None,
            subset: None,
            model: ModelSection::default(),
            training: TrainingSection::default(),
            prepare: PrepareSection::default(),
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            topology: m.topology.to_string(),
            sharing: m.sharing.to_string(),
            mode: m.mode.to_string(),
            q: m.q,
            family: m.ansatz.merge.family.name().to_string(),
            depth: m.ansatz.merge.depth,
            schedule: m.schedule.to_string(),
            word: None,
            filter: None,
            merge: None,
            classifier: None,
        }
    }
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        let o = t.optimizer;
        Self {
            seed: t.seed,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            early_stop_patience: t.early_stop_patience,
            k_folds: t.k_folds,
            learning_rate: o.learning_rate,
            weight_decay: o.weight_decay,
            beta1: o.beta1,
            beta2: o.beta2,
            epsilon: o.epsilon,
            init: "uniform".into(),
            init_sigma: 0.1,
            gradient: "adjoint".into(),
            gradient_step: 1e-5,
        }
    }
}

impl Default for PrepareSection {
    fn default() -> Self {
        let b = LengthBounds::default();
        Self { fasta: None, labels: None, min_len: b.min, max_len: b.max }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<String>,
    pub topology: Option<String>,
    pub sharing: Option<String>,
    pub out: Option<PathBuf>,
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, CliError> {
    s.parse().map_err(CliError::Usage)
}

fn family(s: &str, depth: usize) -> Result<AnsatzFamily, CliError> {
    Ok(AnsatzFamily::new(parse::<Family>(s)?, depth))
}

impl RunConfig {
    /// Read `path`, resolving relative paths against its directory. Missing
    /// files and malformed or unknown keys are usage errors.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data, &mut cfg.out, &mut cfg.prepare.fasta, &mut cfg.prepare.labels].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or(Ok(Self::default()), Self::load)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.training.seed = s;
        }
        if let Some(m) = &o.mode {
            self.model.mode = m.clone();
        }
        if let Some(t) = &o.topology {
            self.model.topology = t.clone();
        }
        if let Some(s) = &o.sharing {
            self.model.sharing = s.clone();
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
    }

    pub fn model_config(&self) -> Result<ModelConfig, CliError> {
        let m = &self.model;
        let base = family(&m.family, m.depth)?;
        let role = |o: &Option<AnsatzSection>| o.as_ref().map_or(Ok(base), |a| family(&a.family, a.depth));
        let cfg = ModelConfig {
            topology: parse::<Topology>(&m.topology)?,
            sharing: parse::<Sharing>(&m.sharing)?,
            mode: parse::<Mode>(&m.mode)?,
            q: m.q,
            ansatz: BoxAnsatz {
                word: role(&m.word)?,
                filter: role(&m.filter)?,
                merge: role(&m.merge)?,
                classifier: role(&m.classifier)?,
            },
            schedule: parse::<Schedule>(&m.schedule)?,
        };
        cfg.validate().map_err(CliError::Usage)?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let t = &self.training;
        let init = match t.init.as_str() {
            "uniform" => InitScheme::UniformAngle,
            "normal" => InitScheme::SmallNormal { sigma: t.init_sigma },
            other => return Err(CliError::Usage(format!("invalid init `{other}` (valid: uniform, normal)"))),
        };
        let gradient = match t.gradient.as_str() {
            "adjoint" => GradBackend::Adjoint,
            "param_shift" => GradBackend::ParamShift,
            "finite_diff" => GradBackend::FiniteDiff { h: t.gradient_step },
            "spsa" => GradBackend::Spsa { c: t.gradient_step },
            other => {
                return Err(CliError::Usage(format!(
                    "invalid gradient `{other}` (valid: adjoint, param_shift, finite_diff, spsa)"
                )))
            }
        };
        let cfg = TrainConfig {
            model: self.model_config()?,
            optimizer: AdamWConfig {
                learning_rate: t.learning_rate,
                beta1: t.beta1,
                beta2: t.beta2,
                epsilon: t.epsilon,
                weight_decay: t.weight_decay,
            },
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            early_stop_patience: t.early_stop_patience,
            k_folds: t.k_folds,
            seed: t.seed,
            init,
            gradient,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn ratios(&self) -> [f64; 3] {
        self.split_ratios.unwrap_or(DEFAULT_SPLIT_RATIOS)
    }

    pub fn bounds(&self) -> Result<LengthBounds, CliError> {
        let p = &self.prepare;
        if p.min_len == 0 || p.min_len > p.max_len {
            return Err(CliError::Usage(format!("invalid length bounds {}..={}", p.min_len, p.max_len)));
        }
        Ok(LengthBounds { min: p.min_len, max: p.max_len })
    }
}
