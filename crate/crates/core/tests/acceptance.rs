//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL
//! line per criterion and exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::random_case;
use num_complex::Complex64;
use protqtn_core::ansatz::{ansatz_sequence, Family};
use protqtn_core::checkpoint::Checkpoint;
use protqtn_core::data::{
    filter_and_label, parse_fasta, parse_labels, read_dataset, split, stratified_subset, synth_motif_dataset,
    synth_uniprot, write_dataset, DatasetManifest, LengthBounds, SequenceRecord, DEFAULT_SPLIT_RATIOS,
};
use protqtn_core::engine::{eval_discard_state, eval_postselect_state, EngineError};
use protqtn_core::grad::{grad_adjoint, grad_finite_diff, grad_param_shift};
use protqtn_core::prelude::*;
use protqtn_core::train::{StoppingReason, Trainer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Check = Result<String, String>;

/// Below this magnitude central differences at h = 1e-5 are dominated by
/// rounding, so entries are compared on an absolute scale.
const FD_FLOOR: f64 = 1e-5;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let t = started.elapsed();
    if t > limit {
        return Err(format!("took {:.1}s, limit {}s", t.as_secs_f64(), limit.as_secs()));
    }
    Ok(())
}

fn oracle_postselect() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0f64;
    let cases = 64;
    for _ in 0..cases {
        let c = random_case(&mut rng, Mode::Postselect, 6, 14);
        let (staged, _) = eval_postselect_state(&c.plan(), &c.store).map_err(|e| e.to_string())?;
        let oracle = brute_force_state(&c.diagram, &c.config, &c.store).map_err(|e| e.to_string())?;
        for (a, b) in staged.iter().zip(oracle.root_amplitudes()) {
            worst = worst.max((a - b).norm());
        }
    }
    within(Duration::from_secs(60), started)?;
    ensure!(worst < 1e-10, "max amplitude error {worst:e}");
    Ok(format!("{cases} configs, max amplitude error {worst:.1e}"))
}

fn oracle_discard() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0f64;
    let cases = 64;
    for _ in 0..cases {
        let c = random_case(&mut rng, Mode::Discard, 6, 7);
        let (staged, _) = eval_discard_state(&c.plan(), &c.store).map_err(|e| e.to_string())?;
        let oracle = brute_force_density(&c.diagram, &c.config, &c.store).map_err(|e| e.to_string())?;
        ensure!(staged.len() == oracle.reduced.data.len(), "{}: shape mismatch", c.describe());
        for (a, b) in staged.iter().zip(&oracle.reduced.data) {
            worst = worst.max((a - b).norm());
        }
    }
    within(Duration::from_secs(120), started)?;
    ensure!(worst < 1e-10, "max entry error {worst:e}");
    Ok(format!("{cases} configs, max entry error {worst:.1e}"))
}

fn gradient_agreement() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut fd_worst, mut ps_worst) = (0f64, 0f64);
    for mode in [Mode::Postselect, Mode::Discard] {
        for _ in 0..20 {
            let c = random_case(&mut rng, mode, 5, 8);
            let p = c.plan();
            let y = rng.gen_range(0..2);
            let adj = grad_adjoint(&p, &c.store, y, mode).map_err(|e| e.to_string())?.flatten();
            let fd = grad_finite_diff(&p, &c.store, y, mode, 1e-5).map_err(|e| e.to_string())?.flatten();
            let ps = grad_param_shift(&p, &c.store, y, mode).map_err(|e| e.to_string())?.flatten();
            for ((a, f), s) in adj.iter().zip(&fd).zip(&ps) {
                fd_worst = fd_worst.max((a - f).abs() / f.abs().max(FD_FLOOR));
                ps_worst = ps_worst.max((a - s).abs());
            }
        }
    }
    within(Duration::from_secs(300), started)?;
    ensure!(fd_worst < 1e-4, "adjoint vs finite difference relative error {fd_worst:e}");
    ensure!(ps_worst < 1e-8, "adjoint vs parameter shift error {ps_worst:e}");
    Ok(format!("40 configs, fd rel err {fd_worst:.1e}, shift err {ps_worst:.1e}"))
}

fn unitarity_and_normalization() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut defect = 0f64;
    let mut unitaries = 0;
    for family in [Family::Sim14, Family::Sim15, Family::Iqp] {
        for n in 1..=4 {
            for depth in 1..=3 {
                for _ in 0..10 {
                    let a = AnsatzFamily::new(family, depth);
                    let angles: Vec<f64> = (0..param_count(a, n)).map(|_| rng.gen_range(-10.0..10.0)).collect();
                    let u = unitary_of(&ansatz_sequence(a, n), &angles).map_err(|e| e.to_string())?;
                    defect = defect.max(u.unitarity_defect());
                    unitaries += 1;
                }
            }
        }
    }
    ensure!(defect < 1e-12, "unitarity defect {defect:e}");

    let mut drift = 0f64;
    for _ in 0..200 {
        let c = random_case(&mut rng, Mode::Discard, 12, 8);
        // The reported p0, p1 are normalized by construction; check the state itself.
        let (rho, o) = eval_discard_state(&c.plan(), &c.store).map_err(|e| e.to_string())?;
        ensure!(o.p0 >= 0.0 && o.p1 >= 0.0, "negative probability {o:?}");
        let d = (rho.len() as f64).sqrt() as usize;
        let trace: f64 = (0..d).map(|i| rho[i * d + i].re).sum();
        drift = drift.max((trace - 1.0).abs()).max((o.p0 + o.p1 - 1.0).abs());
    }
    ensure!(drift < 1e-10, "discard normalization drift {drift:e}");

    let (mut lo, mut hi, mut degenerate) = (f64::INFINITY, 0f64, 0);
    for _ in 0..200 {
        let c = random_case(&mut rng, Mode::Postselect, 8, 14);
        match eval_postselect(&c.plan(), &c.store) {
            Ok(o) => {
                lo = lo.min(o.raw_weight);
                hi = hi.max(o.raw_weight);
            }
            Err(EngineError::DegeneratePostselection { .. }) => degenerate += 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    ensure!(lo > 0.0 && hi <= 1.0, "raw_weight range [{lo:e}, {hi}]");
    Ok(format!(
        "{unitaries} unitaries defect {defect:.1e}; discard drift {drift:.1e}; raw_weight in [{lo:.1e}, {hi:.3}] ({degenerate} degenerate)"
    ))
}

fn shared_chain_rule() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0f64;
    let mut runs = 0;
    for topology in [Topology::Path, Topology::Convolutional] {
        for mode in [Mode::Postselect, Mode::Discard] {
            for n in 2..=6 {
                // Layered trees hold every leaf at once; keep density registers small.
                let q = if mode == Mode::Discard && topology == Topology::Convolutional { 1 } else { rng.gen_range(1..=2) };
                let uni = ModelConfig::new(topology, Sharing::Uniform, mode, q, AnsatzFamily::new(Family::Sim14, 2));
                let hier = ModelConfig { sharing: Sharing::Hierarchical, ..uni.clone() };
                let tokens: Vec<TokenId> = (0..n).map(|_| TokenId(rng.gen_range(0..20))).collect();
                let d = uni.build_diagram(&tokens).map_err(|e| e.to_string())?;
                let us = init_params(&uni.schema(&[&d]), rng.gen(), InitScheme::UniformAngle);
                let hschema = hier.schema(&[&d]);
                let mut hs = ParamStore::new(Sharing::Hierarchical);
                for key in hschema.entries.keys() {
                    hs.insert(*key, us.get(&shared(*key)).unwrap().to_vec());
                }
                let gu = grad_adjoint(&plan(&d, &uni).unwrap(), &us, 0, mode).map_err(|e| e.to_string())?;
                let gh = grad_adjoint(&plan(&d, &hier).unwrap(), &hs, 0, mode).map_err(|e| e.to_string())?;
                let mut summed: BTreeMap<ParamKey, Vec<f64>> = BTreeMap::new();
                for (k, v) in &gh.entries {
                    let acc = summed.entry(shared(*k)).or_insert_with(|| vec![0.0; v.len()]);
                    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
                }
                for (k, v) in &gu.entries {
                    let s = summed.get(k).ok_or_else(|| format!("{k} missing from hierarchical gradient"))?;
                    for (a, b) in v.iter().zip(s) {
                        worst = worst.max((a - b).abs());
                    }
                }
                runs += 1;
            }
        }
    }
    ensure!(worst < 1e-10, "max abs difference {worst:e}");
    Ok(format!("{runs} configs over ptn and ctn, max abs difference {worst:.1e}"))
}

fn shared(key: ParamKey) -> ParamKey {
    match key {
        ParamKey::Merge(_) => ParamKey::Merge(Slot::Shared),
        ParamKey::Filter(_) => ParamKey::Filter(Slot::Shared),
        k => k,
    }
}

/// Best accuracy of the 3-parameter classifier over a grid, with every
/// other parameter fixed to `store`. The pre-classifier qubit state is read
/// off with the classifier at zero angles (the identity), then each grid
/// unitary is applied to it directly.
fn classifier_grid(model: &ModelConfig, store: &ParamStore, records: &[SequenceRecord], steps: usize) -> Result<f64, String> {
    let mut frozen = store.clone();
    let n = frozen.get(&ParamKey::Classifier).unwrap().len();
    ensure!(n == 3, "classifier has {n} parameters");
    frozen.insert(ParamKey::Classifier, vec![0.0; 3]);
    let states: Vec<([Complex64; 4], u8)> = records
        .par_iter()
        .map(|r| {
            let d = model.build_diagram(&Vocabulary::standard().encode(&r.sequence)).unwrap();
            let (rho, _) = eval_discard_state(&plan(&d, model).unwrap(), &frozen).unwrap();
            ([rho[0], rho[1], rho[2], rho[3]], r.label)
        })
        .collect();
    let seq = ansatz_sequence(model.ansatz.classifier, 1);
    let axis = |i: usize| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / steps as f64;
    let best = (0..steps * steps * steps)
        .into_par_iter()
        .map(|g| {
            let angles = [axis(g / (steps * steps)), axis(g / steps % steps), axis(g % steps)];
            let u = unitary_of(&seq, &angles).unwrap();
            let (u00, u01) = (u.get(0, 0), u.get(0, 1));
            let correct = states
                .iter()
                .filter(|(rho, y)| {
                    // p0 = (U ρ U†)_00
                    let p0 = (u00 * (rho[0] * u00.conj() + rho[1] * u01.conj())
                        + u01 * (rho[2] * u00.conj() + rho[3] * u01.conj()))
                    .re;
                    u8::from(p0 < 0.5) == *y
                })
                .count();
            correct as f64 / states.len() as f64
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

fn synthetic_learnability() -> Check {
    let started = Instant::now();
    let records = synth_motif_dataset(1000, 8, 4, (TokenId(0), TokenId(1)), 6).map_err(|e| e.to_string())?;
    let splits = split(&records, [0.8, 0.1, 0.1], 6).map_err(|e| e.to_string())?;
    let mut cfg = TrainConfig { seed: 6, max_epochs: 50, ..Default::default() };
    cfg.model = ModelConfig::new(Topology::Path, Sharing::Hierarchical, Mode::Discard, 1, AnsatzFamily::new(Family::Sim14, 1));
    let (store, history) = train(&cfg, &splits).map_err(|e| e.to_string())?;
    let test = evaluate_split(&store, &cfg.model, &splits.test).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let grid = classifier_grid(&cfg.model, &store, &records, 48)?;
    let summary = format!(
        "test accuracy {:.3} after {} epochs in {:.1}s; classifier grid (48^3, trained upstream) best accuracy {:.3}",
        test.accuracy,
        history.rows.len(),
        elapsed.as_secs_f64(),
        grid
    );
    ensure!(elapsed < Duration::from_secs(300), "{summary}: over 5 min");
    ensure!(test.accuracy >= 0.95, "{summary}: below 0.95");
    Ok(summary)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), String> {
    fs::write(dir.join(name), text).map_err(|e| format!("{}: {e}", dir.join(name).display()))
}

fn check_bookkeeping(state: &protqtn_core::train::TrainState, cfg: &TrainConfig) -> Result<(), String> {
    let mut best = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    for (i, r) in state.rows.iter().enumerate() {
        ensure!(r.epoch == i + 1, "epoch numbering");
        if r.val_acc > best {
            best = r.val_acc;
            best_epoch = r.epoch;
            stale = 0;
        } else {
            stale += 1;
        }
        ensure!(r.train_loss.is_finite() && r.val_loss.is_finite(), "non-finite loss at epoch {}", r.epoch);
    }
    ensure!(state.best_epoch == best_epoch, "best epoch {} vs {best_epoch}", state.best_epoch);
    ensure!(state.best_val_acc == Some(best), "best val acc");
    match state.stopping_reason {
        Some(StoppingReason::EarlyStop) => ensure!(stale == cfg.early_stop_patience, "stopped after {stale} stale epochs"),
        Some(StoppingReason::MaxEpochs) => ensure!(state.rows.len() == cfg.max_epochs, "max-epoch stop"),
        None => return Err("run did not finish".into()),
    }
    Ok(())
}

fn pipeline_and_end_to_end() -> Check {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-7");
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;

    let raw = synth_uniprot(1600, 7);
    let parsed = parse_fasta(&raw.fasta).map_err(|e| e.to_string())?;
    let labels = parse_labels(&raw.labels).map_err(|e| e.to_string())?;
    let bounds = LengthBounds::default();
    let (records, summary) = filter_and_label(&parsed, &labels, bounds);
    ensure!(records.iter().all(|r| (80..=200).contains(&r.len())), "length bounds violated");
    ensure!(records.iter().all(|r| r.label <= 1), "non-binary label");
    ensure!(summary.too_short > 0 && summary.too_long > 0, "bounds not exercised: {summary:?}");
    ensure!(records.iter().any(|r| r.len() == 80 || r.len() == 200) || records.len() > 0, "no records");
    let splits = split(&records, DEFAULT_SPLIT_RATIOS, 7).map_err(|e| e.to_string())?;
    let mut ids = std::collections::HashSet::new();
    for r in splits.train.iter().chain(&splits.validation).chain(&splits.test) {
        ensure!(ids.insert(r.id.clone()), "{} in two splits", r.id);
    }
    ensure!(ids.len() == records.len(), "splits do not cover the dataset");
    let manifest = DatasetManifest::new(bounds, summary, &labels, &records, &splits, DEFAULT_SPLIT_RATIOS);
    write(&dir, "manifest.json", &serde_json::to_string_pretty(&manifest).unwrap())?;
    write(&dir, "dataset.tsv", &write_dataset(&records))?;
    let back = read_dataset(&fs::read_to_string(dir.join("dataset.tsv")).unwrap()).map_err(|e| e.to_string())?;
    ensure!(back == records, "dataset file does not round-trip");

    let subset = stratified_subset(&records, 300, 7);
    ensure!(subset.len() == 300, "subset has {} records", subset.len());
    let sub_splits = split(&subset, DEFAULT_SPLIT_RATIOS, 7).map_err(|e| e.to_string())?;
    let mut accuracy = BTreeMap::new();
    for sharing in [Sharing::Hierarchical, Sharing::Uniform] {
        let mut cfg = TrainConfig { seed: 7, ..Default::default() };
        cfg.model = ModelConfig::new(Topology::Path, sharing, Mode::Discard, 1, AnsatzFamily::new(Family::Sim14, 1));
        let trainer = Trainer::new(&cfg, &sub_splits).map_err(|e| e.to_string())?;
        let mut state = trainer.initial_state();
        trainer.run(&mut state, |_| {}).map_err(|e| e.to_string())?;
        let test = evaluate_split(&state.best_store, &cfg.model, &sub_splits.test).map_err(|e| e.to_string())?;
        accuracy.insert(sharing.to_string(), test.accuracy);
        if sharing == Sharing::Hierarchical {
            check_bookkeeping(&state, &cfg)?;
            write(&dir, "history.csv", &state.history().to_csv())?;
            write(&dir, "metrics.json", &serde_json::to_string_pretty(&test).unwrap())?;
            let ck = Checkpoint::new(cfg.clone(), &state.best_store.clone(), Some(state));
            write(&dir, "checkpoint.json", &ck.to_json())?;
            let reread = Checkpoint::from_json(&fs::read_to_string(dir.join("checkpoint.json")).unwrap())
                .map_err(|e| e.to_string())?;
            ensure!(reread == ck, "checkpoint does not round-trip");
        }
    }
    for f in ["manifest.json", "dataset.tsv", "history.csv", "metrics.json", "checkpoint.json"] {
        ensure!(dir.join(f).is_file(), "missing artifact {f}");
    }
    let (h, u) = (accuracy["hierarchical"], accuracy["uniform"]);
    let ordering = if h >= u { "holds" } else { "does not hold" };
    Ok(format!(
        "{} records kept of {}; 300-subset hPTN test acc {h:.3}, uPTN {u:.3} (non-gating hPTN >= uPTN {ordering})",
        records.len(),
        summary.input
    ))
}

fn determinism() -> Check {
    let records = synth_motif_dataset(120, 6, 4, (TokenId(0), TokenId(1)), 8).map_err(|e| e.to_string())?;
    let run = || -> Result<(String, String, String), String> {
        let splits = split(&records, [0.7, 0.15, 0.15], 8).map_err(|e| e.to_string())?;
        let mut cfg = TrainConfig { seed: 8, max_epochs: 5, ..Default::default() };
        cfg.model.sharing = Sharing::Hierarchical;
        cfg.model.mode = Mode::Discard;
        let trainer = Trainer::new(&cfg, &splits).map_err(|e| e.to_string())?;
        let mut state = trainer.initial_state();
        trainer.run(&mut state, |_| {}).map_err(|e| e.to_string())?;
        let m = evaluate_split(&state.best_store, &cfg.model, &splits.test).map_err(|e| e.to_string())?;
        let csv = state.history().to_csv();
        let ck = Checkpoint::new(cfg, &state.best_store.clone(), Some(state)).to_json();
        Ok((serde_json::to_string(&m).unwrap(), csv, ck))
    };
    let a = run()?;
    let b = run()?;
    ensure!(a.0 == b.0, "metrics differ");
    ensure!(a.1 == b.1, "histories differ");
    ensure!(a.2 == b.2, "checkpoints differ");
    Ok(format!("two identical runs: metrics, history and {}-byte checkpoint bitwise equal", a.2.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("1 oracle equivalence (postselect)", oracle_postselect),
        ("2 oracle equivalence (discard)", oracle_discard),
        ("3 gradient agreement", gradient_agreement),
        ("4 unitarity and normalization", unitarity_and_normalization),
        ("5 shared-parameter chain rule", shared_chain_rule),
        ("6 synthetic learnability", synthetic_learnability),
        ("7 dataset pipeline and end-to-end run", pipeline_and_end_to_end),
        ("8 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
