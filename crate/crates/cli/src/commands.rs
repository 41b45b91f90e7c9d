use std::fs;
use std::path::{Path, PathBuf};

use protqtn_core::checkpoint::Checkpoint;
use protqtn_core::data::{
    filter_and_label, parse_fasta, parse_labels, read_dataset, split, stratified_subset, synth_motif_dataset,
    synth_uniprot, write_dataset, DataError, DatasetManifest, DatasetSplits, SequenceRecord,
};
use protqtn_core::engine::{evaluate, plan, EngineError};
use protqtn_core::prelude::*;
use protqtn_core::train::{kfold, Metrics, StoppingReason, TrainError, TrainState, Trainer};
use serde::Serialize;

use crate::config::{Overrides, RunConfig};
use crate::{Cli, CliError, Command, Export, Synth};

type Result<T> = std::result::Result<T, CliError>;

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn internal(m: impl Into<String>) -> CliError {
    CliError::Internal(m.into())
}

fn read(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| internal(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create output directory {}: {e}", dir.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn train_error(e: TrainError) -> CliError {
    match e {
        TrainError::EmptySplit(_) | TrainError::InvalidConfig(_) | TrainError::InvalidFoldCount { .. } => {
            usage(e.to_string())
        }
        TrainError::IncompatibleState(_) | TrainError::Diagram(_) => usage(e.to_string()),
        TrainError::Engine(_) | TrainError::Grad(_) => internal(e.to_string()),
    }
}

fn required(p: &Option<PathBuf>, what: &str, flag: &str) -> Result<PathBuf> {
    p.clone().ok_or_else(|| usage(format!("no {what} given (use {flag} or set it in --config)")))
}

pub fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    // `export` writes a single file, so only an explicit flag counts; the
    // config's `out` names a run directory.
    let export_out = g.out.clone();
    let mut cfg = RunConfig::load_or_default(g.config.as_deref())?;
    cfg.apply(&Overrides { seed: g.seed, mode: g.mode, topology: g.topology, sharing: g.sharing, out: g.out });
    match cli.command {
        Command::Prepare { fasta, labels, min_len, max_len } => {
            cfg.prepare.fasta = fasta.or(cfg.prepare.fasta);
            cfg.prepare.labels = labels.or(cfg.prepare.labels);
            cfg.prepare.min_len = min_len.unwrap_or(cfg.prepare.min_len);
            cfg.prepare.max_len = max_len.unwrap_or(cfg.prepare.max_len);
            prepare(&cfg)
        }
        Command::Train { resume } => train(&cfg, resume.as_deref()),
        Command::Crossval => crossval(&cfg),
        Command::Simulate { checkpoint, sequence } => simulate(&checkpoint, &sequence),
        Command::Export { what, sequence, checkpoint } => export(&cfg, what, &sequence, checkpoint.as_deref(), export_out.as_deref()),
        Command::Synth { kind } => synth(&cfg, kind),
    }
}

fn prepare(cfg: &RunConfig) -> Result<()> {
    let fasta_path = required(&cfg.prepare.fasta, "FASTA file", "--fasta")?;
    let labels_path = required(&cfg.prepare.labels, "label file", "--labels")?;
    let out = required(&cfg.out, "output directory", "--out")?;
    let bounds = cfg.bounds()?;
    let fasta = read(&fasta_path, "FASTA file")?;
    let labels_text = read(&labels_path, "label file")?;
    create_dir(&out)?;

    let parsed = parse_fasta(&fasta).map_err(|e| usage(format!("{}: {e}", fasta_path.display())))?;
    let labels = parse_labels(&labels_text).map_err(|e| usage(format!("{}: {e}", labels_path.display())))?;
    let (records, summary) = filter_and_label(&parsed, &labels, bounds);
    if records.is_empty() {
        eprintln!(
            "warning: no records retained ({} read, {} shorter than {}, {} longer than {}, {} unlabeled)",
            summary.input, summary.too_short, bounds.min, summary.too_long, bounds.max, summary.unlabeled
        );
    }
    let seed = cfg.split_seed.unwrap_or(cfg.training.seed);
    let ratios = cfg.ratios();
    let splits = match split(&records, ratios, seed) {
        Ok(s) => s,
        Err(DataError::TooFewRecords { got }) => {
            if got > 0 {
                eprintln!("warning: {got} records are too few to split; all go to the training split");
            }
            DatasetSplits { train: records.clone(), validation: Vec::new(), test: Vec::new(), seed }
        }
        Err(e) => return Err(usage(e.to_string())),
    };
    let manifest = DatasetManifest::new(bounds, summary, &labels, &records, &splits, ratios);
    write(&out.join("dataset.tsv"), &write_dataset(&records))?;
    write(&out.join("manifest.json"), &json(&manifest))?;
    println!(
        "kept {} of {} records ({} class 0, {} class 1); split {}/{}/{}",
        records.len(),
        summary.input,
        manifest.classes.class_0,
        manifest.classes.class_1,
        manifest.train.total,
        manifest.validation.total,
        manifest.test.total
    );
    Ok(())
}

/// Records and split seed for a training run. The seed comes from the
/// configuration, else from a `manifest.json` next to the dataset, else the
/// run seed.
fn load_dataset(cfg: &RunConfig) -> Result<(Vec<SequenceRecord>, u64)> {
    let data = required(&cfg.data, "dataset", "`data` in --config")?;
    let records = read_dataset(&read(&data, "dataset")?).map_err(|e| usage(format!("{}: {e}", data.display())))?;
    let manifest_path = data.with_file_name("manifest.json");
    let manifest_seed = if manifest_path.is_file() {
        let m: DatasetManifest = serde_json::from_str(&read(&manifest_path, "manifest")?)
            .map_err(|e| usage(format!("{}: {e}", manifest_path.display())))?;
        Some(m.split_seed)
    } else {
        None
    };
    let seed = cfg.split_seed.or(manifest_seed).unwrap_or(cfg.training.seed);
    let records = match cfg.subset {
        Some(n) if n > records.len() => {
            return Err(usage(format!("subset of {n} requested but the dataset has {} records", records.len())))
        }
        Some(n) => stratified_subset(&records, n, seed),
        None => records,
    };
    Ok((records, seed))
}

#[derive(Serialize)]
struct RunMetrics {
    best_epoch: usize,
    epochs: usize,
    stopping_reason: Option<StoppingReason>,
    train: Metrics,
    validation: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Option<Metrics>,
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_json(&read(path, "checkpoint")?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn train(cfg: &RunConfig, resume: Option<&Path>) -> Result<()> {
    let config = cfg.train_config()?;
    let out = required(&cfg.out, "output directory", "--out")?;
    let (records, seed) = load_dataset(cfg)?;
    let resumed = resume.map(load_checkpoint).transpose()?;
    create_dir(&out)?;

    let splits = split(&records, cfg.ratios(), seed).map_err(|e| usage(e.to_string()))?;
    let trainer = Trainer::new(&config, &splits).map_err(train_error)?;
    let mut state = match resumed {
        Some(ck) => {
            let budget_only = TrainConfig { max_epochs: config.max_epochs, ..ck.config.clone() };
            if budget_only != config {
                return Err(usage("checkpoint was written by a run with a different configuration"));
            }
            let mut s = ck.state.ok_or_else(|| usage("checkpoint holds no training state to resume"))?;
            trainer.resume(&mut s).map_err(train_error)?;
            s
        }
        None => trainer.initial_state(),
    };

    let ck_path = out.join("checkpoint.json");
    let save = |s: &TrainState| write(&ck_path, &Checkpoint::new(config.clone(), &s.best_store, Some(s.clone())).to_json());
    let mut failure = None;
    println!("epoch,train_loss,train_acc,val_loss,val_acc");
    trainer
        .run(&mut state, |s| {
            let r = s.rows.last().expect("epoch row");
            println!("{},{:.6},{:.4},{:.6},{:.4}", r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc);
            if failure.is_none() {
                failure = save(s).err();
            }
        })
        .map_err(train_error)?;
    if let Some(e) = failure {
        return Err(e);
    }
    save(&state)?;

    let eval = |r: &[SequenceRecord]| evaluate_split(&state.best_store, &config.model, r).map_err(train_error);
    let metrics = RunMetrics {
        best_epoch: state.best_epoch,
        epochs: state.epoch,
        stopping_reason: state.stopping_reason,
        train: eval(&splits.train)?,
        validation: eval(&splits.validation)?,
        test: if splits.test.is_empty() { None } else { Some(eval(&splits.test)?) },
    };
    write(&out.join("history.csv"), &state.history().to_csv())?;
    write(&out.join("metrics.json"), &json(&metrics))?;
    match &metrics.test {
        Some(t) => println!("best epoch {}: test accuracy {:.4}, f1 {:.4}", state.best_epoch, t.accuracy, t.f1),
        None => println!("best epoch {}: validation accuracy {:.4}", state.best_epoch, metrics.validation.accuracy),
    }
    Ok(())
}

fn crossval(cfg: &RunConfig) -> Result<()> {
    let config = cfg.train_config()?;
    let out = required(&cfg.out, "output directory", "--out")?;
    let (records, _) = load_dataset(cfg)?;
    create_dir(&out)?;
    let report = kfold(&config, &records).map_err(train_error)?;
    write(&out.join("kfold.json"), &json(&report))?;
    println!(
        "{} folds: accuracy {:.4} ± {:.4}, f1 {:.4} ± {:.4}",
        report.folds.len(),
        report.mean_accuracy,
        report.std_accuracy,
        report.mean_f1,
        report.std_f1
    );
    Ok(())
}

fn tokens_of(sequence: &str) -> Result<Vec<TokenId>> {
    let s = sequence.trim();
    if s.is_empty() {
        return Err(usage("empty sequence"));
    }
    Ok(Vocabulary::standard().encode(&s.to_ascii_uppercase()))
}

fn served(model: &ModelConfig, store: &ParamStore, n: usize) -> bool {
    model
        .build_diagram(&vec![TokenId(0); n])
        .ok()
        .and_then(|d| plan(&d, model).ok())
        .is_some_and(|p| p.keys().iter().all(|k| store.get(k).is_ok()))
}

/// Plan for `tokens`, rejecting sequences whose boxes need parameters the
/// store lacks (hierarchical keys beyond the trained length or tree).
fn served_plan(model: &ModelConfig, store: &ParamStore, tokens: &[TokenId]) -> Result<CircuitPlan> {
    let d = model.build_diagram(tokens).map_err(|e| usage(e.to_string()))?;
    let p = plan(&d, model).map_err(|e| internal(e.to_string()))?;
    if let Some(k) = p.keys().into_iter().find(|k| store.get(k).is_err()) {
        let longest = (1..tokens.len()).take_while(|&n| served(model, store, n)).last().unwrap_or(0);
        let what = match model.topology {
            Topology::Path => format!("sequence length {}", tokens.len()),
            Topology::Convolutional => format!("padded length {}", d.padded_length),
        };
        return Err(usage(format!(
            "{what} exceeds the trained model: parameter `{k}` is missing (longest servable sequence: {longest})"
        )));
    }
    Ok(p)
}

#[derive(Serialize)]
struct Simulation {
    p0: f64,
    p1: f64,
    raw_weight: f64,
    predicted: u8,
}

fn simulate(checkpoint: &Path, sequence: &str) -> Result<()> {
    let tokens = tokens_of(sequence)?;
    let ck = load_checkpoint(checkpoint)?;
    let store = ck.store().map_err(|e| usage(e.to_string()))?;
    let p = served_plan(&ck.config.model, &store, &tokens)?;
    let o = evaluate(&p, &store).map_err(|e: EngineError| internal(e.to_string()))?;
    let out = Simulation { p0: o.p0, p1: o.p1, raw_weight: o.raw_weight, predicted: o.predicted() };
    println!("{}", serde_json::to_string(&out).expect("serializable"));
    Ok(())
}

fn export(cfg: &RunConfig, what: Export, sequence: &str, checkpoint: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let tokens = tokens_of(sequence)?;
    let text = match checkpoint {
        Some(path) => {
            let ck = load_checkpoint(path)?;
            let store = ck.store().map_err(|e| usage(e.to_string()))?;
            let p = served_plan(&ck.config.model, &store, &tokens)?;
            match what {
                Export::Diagram => ck.config.model.build_diagram(&tokens).map_err(|e| usage(e.to_string()))?.to_text(),
                Export::Circuit => p.to_text(),
            }
        }
        None => {
            let model = cfg.model_config()?;
            let d = model.build_diagram(&tokens).map_err(|e| usage(e.to_string()))?;
            match what {
                Export::Diagram => d.to_text(),
                Export::Circuit => plan(&d, &model).map_err(|e| internal(e.to_string()))?.to_text(),
            }
        }
    };
    match out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn synth(cfg: &RunConfig, kind: Synth) -> Result<()> {
    let out = required(&cfg.out, "output directory", "--out")?;
    let seed = cfg.training.seed;
    match kind {
        Synth::Motif { n, seq_len, vocab, motif } => {
            let v = Vocabulary::standard();
            let m: Vec<TokenId> = motif.chars().map(|c| v.id(c.to_ascii_uppercase())).collect();
            if m.len() != 2 {
                return Err(usage(format!("motif must be two residues, got `{motif}`")));
            }
            let records = synth_motif_dataset(n, seq_len, vocab, (m[0], m[1]), seed).map_err(|e| usage(e.to_string()))?;
            create_dir(&out)?;
            write(&out.join("dataset.tsv"), &write_dataset(&records))?;
            println!("wrote {} motif records to {}", records.len(), out.join("dataset.tsv").display());
        }
        Synth::Uniprot { n } => {
            let s = synth_uniprot(n, seed);
            create_dir(&out)?;
            write(&out.join("sequences.fasta"), &s.fasta)?;
            write(&out.join("labels.tsv"), &s.labels)?;
            println!("wrote {n} records to {}", out.display());
        }
    }
    Ok(())
}
