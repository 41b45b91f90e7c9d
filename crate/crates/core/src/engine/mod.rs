//! Staged circuit plans and their evaluation.
//!
//! A [`CircuitPlan`] is a linear list of stages over a register of live
//! qubits: introducing a word's `q` qubits in `|0⟩`, applying a box's gates,
//! and eliminating a merge's second input wire. Introduced qubits are
//! appended above the live register; eliminations compact it downward.
//! Evaluation is a pure function of the plan and a [`ParamStore`].

mod exec;
pub mod oracle;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ansatz::{ansatz_sequence, box_width, AnsatzError, GateSequence, ParamKey, ParamStore, C64};
use crate::config::{ModelConfig, Mode};
use crate::diagram::{validate, BoxId, BoxRole, Endpoint, Port, SchemeDiagram, Topology, Violation};

pub use crate::config::Schedule;
pub use exec::{BoundGate, BoundPlan, Tape};
pub use oracle::{brute_force_density, brute_force_state, OracleDensity, OracleState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("diagram failed validation: {0:?}")]
    PlanOnInvalidDiagram(Vec<Violation>),
    #[error("postselected weight {weight:e} is below 1e-12")]
    DegeneratePostselection { weight: f64 },
    #[error("density-matrix trace drifted to {trace}")]
    NumericalDrift { trace: f64 },
    #[error("oracle limited to {limit} qubits, diagram needs {qubits}")]
    OracleTooLarge { qubits: usize, limit: usize },
    #[error("{mode} evaluation needs {qubits} live qubits, limit {limit}")]
    RegisterTooLarge { mode: Mode, qubits: usize, limit: usize },
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
}

/// Postselected weight below which the outcome is rejected.
pub const MIN_POSTSELECT_WEIGHT: f64 = 1e-12;
/// Allowed deviation of a density-matrix trace from one.
pub const MAX_TRACE_DRIFT: f64 = 1e-8;
/// Largest staged register, in amplitudes or density entries (2^26).
pub const MAX_REGISTER_QUBITS: usize = 26;

#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    /// Append `count` qubits in `|0⟩` for a word box.
    Introduce { node: BoxId, count: usize },
    /// Run a box's template; `qubits[j]` is the register index of box-local qubit `j`.
    Apply {
        node: BoxId,
        key: ParamKey,
        sequence: Arc<GateSequence>,
        qubits: Vec<usize>,
    },
    /// Eliminate register qubits by postselection or partial trace.
    Reduce { node: BoxId, qubits: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitPlan {
    pub config: ModelConfig,
    pub topology: Topology,
    pub stages: Vec<Stage>,
    /// Register index of the qubit measured in the Z basis.
    pub final_measure: usize,
    /// Register index of each local qubit of the classifier output wire.
    pub root_layout: Vec<usize>,
    /// Largest number of simultaneously live qubits.
    pub high_water: usize,
}

impl CircuitPlan {
    pub fn reduce_count(&self) -> usize {
        self.stages.iter().filter(|s| matches!(s, Stage::Reduce { .. })).count()
    }

    /// Live register size after each stage.
    pub fn live_profile(&self) -> Vec<usize> {
        let mut live = 0;
        self.stages
            .iter()
            .map(|s| {
                match s {
                    Stage::Introduce { count, .. } => live += count,
                    Stage::Reduce { qubits, .. } => live -= qubits.len(),
                    Stage::Apply { .. } => {}
                }
                live
            })
            .collect()
    }

    /// Number of gates the plan applies.
    pub fn gate_count(&self) -> usize {
        self.stages
            .iter()
            .map(|s| match s {
                Stage::Apply { sequence, .. } => sequence.gates.len(),
                _ => 0,
            })
            .sum()
    }

    /// Gate-per-line listing of the plan as `box<TAB>gate<TAB>qubits<TAB>param`.
    ///
    /// Qubits are register indices at the time the gate runs, control first.
    /// `param` is `key#slot`, or `-` for fixed gates. Lines starting with `#`
    /// are comments.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# protqtn-circuit v1");
        let _ = writeln!(
            out,
            "# topology={} mode={} q={} gates={} high_water={} measure={}",
            self.config.topology,
            self.config.mode,
            self.config.q,
            self.gate_count(),
            self.high_water,
            self.final_measure
        );
        for s in &self.stages {
            if let Stage::Apply { node, key, sequence, qubits } = s {
                for g in &sequence.gates {
                    let wires = match g.control {
                        Some(c) => format!("{},{}", qubits[c], qubits[g.target]),
                        None => qubits[g.target].to_string(),
                    };
                    let param = g.slot.map_or("-".to_string(), |k| format!("{key}#{k}"));
                    let _ = writeln!(out, "{node}\t{}\t{wires}\t{param}", g.kind);
                }
            }
        }
        out
    }

    /// Store keys the plan reads, in first-use order.
    pub fn keys(&self) -> Vec<ParamKey> {
        let mut seen = Vec::new();
        for s in &self.stages {
            if let Stage::Apply { key, .. } = s {
                if !seen.contains(key) {
                    seen.push(*key);
                }
            }
        }
        seen
    }
}

fn execution_order(diagram: &SchemeDiagram, schedule: Schedule, feeds: &HashMap<Port, Port>) -> Vec<BoxId> {
    let layered = schedule == Schedule::Layered && diagram.topology == Topology::Convolutional;
    if layered {
        return diagram.boxes.iter().map(|b| b.id).collect();
    }
    // Iterative post-order DFS from the classifier.
    let root = diagram
        .boxes
        .iter()
        .find(|b| b.role == BoxRole::Classifier)
        .map(|b| b.id)
        .expect("validated diagram has a classifier");
    let mut done = vec![false; diagram.boxes.len()];
    let mut order = Vec::with_capacity(diagram.boxes.len());
    let mut stack = vec![(root, 0usize)];
    while let Some((id, next_port)) = stack.pop() {
        let b = &diagram.boxes[id.0];
        if next_port < b.in_arity {
            stack.push((id, next_port + 1));
            let src = feeds[&Port { node: id, port: next_port }].node;
            if !done[src.0] {
                stack.push((src, 0));
            }
        } else if !done[id.0] {
            done[id.0] = true;
            order.push(id);
        }
    }
    order
}

/// Compile a validated diagram into a staged plan.
pub fn plan(diagram: &SchemeDiagram, config: &ModelConfig) -> Result<CircuitPlan, EngineError> {
    let violations = validate(diagram);
    if !violations.is_empty() {
        return Err(EngineError::PlanOnInvalidDiagram(violations));
    }
    let q = config.q;
    let feeds: HashMap<Port, Port> = diagram
        .wires
        .iter()
        .filter_map(|w| match w.target {
            Endpoint::Box(t) => Some((t, w.source)),
            Endpoint::Output => None,
        })
        .collect();

    // Register entries: (wire source port, wire-local qubit).
    let mut reg: Vec<(Port, usize)> = Vec::new();
    let locate = |reg: &[(Port, usize)], wire: Port| -> Vec<usize> {
        let mut found: Vec<(usize, usize)> = reg
            .iter()
            .enumerate()
            .filter(|(_, e)| e.0 == wire)
            .map(|(i, e)| (e.1, i))
            .collect();
        found.sort_unstable();
        found.into_iter().map(|(_, i)| i).collect()
    };

    let mut stages = Vec::new();
    let mut high_water = 0;
    let mut final_measure = 0;
    let mut root_layout = Vec::new();
    let mut templates: HashMap<(BoxRole, usize), Arc<GateSequence>> = HashMap::new();

    for id in execution_order(diagram, config.schedule, &feeds) {
        let b = &diagram.boxes[id.0];
        let width = box_width(&b.role, q);
        let role_key = match b.role {
            BoxRole::Word(_) => BoxRole::Word(crate::data::TokenId(0)),
            r => r,
        };
        let sequence = templates
            .entry((role_key, width))
            .or_insert_with(|| Arc::new(ansatz_sequence(config.ansatz.for_role(&b.role), width)))
            .clone();
        let key = config.key_for(b);
        let out0 = Port { node: id, port: 0 };
        match b.role {
            BoxRole::Word(_) => {
                let start = reg.len();
                reg.extend((0..q).map(|j| (out0, j)));
                high_water = high_water.max(reg.len());
                stages.push(Stage::Introduce { node: id, count: q });
                stages.push(Stage::Apply { node: id, key, sequence, qubits: (start..start + q).collect() });
            }
            BoxRole::Merge | BoxRole::Filter => {
                let left = feeds[&Port { node: id, port: 0 }];
                let right = feeds[&Port { node: id, port: 1 }];
                let (lq, rq) = (locate(&reg, left), locate(&reg, right));
                let qubits: Vec<usize> = lq.iter().chain(&rq).copied().collect();
                stages.push(Stage::Apply { node: id, key, sequence, qubits });
                for &i in &lq {
                    reg[i].0 = out0;
                }
                if b.role == BoxRole::Merge {
                    stages.push(Stage::Reduce { node: id, qubits: rq });
                    reg.retain(|e| e.0 != right);
                } else {
                    let out1 = Port { node: id, port: 1 };
                    for &i in &rq {
                        reg[i].0 = out1;
                    }
                }
            }
            BoxRole::Classifier => {
                let input = feeds[&Port { node: id, port: 0 }];
                let qubits = locate(&reg, input);
                final_measure = qubits[0];
                root_layout = qubits.clone();
                stages.push(Stage::Apply { node: id, key, sequence, qubits });
            }
        }
    }

    Ok(CircuitPlan {
        config: *config,
        topology: diagram.topology,
        stages,
        final_measure,
        root_layout,
        high_water,
    })
}

/// Normalized outcome probabilities of the measured qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub p0: f64,
    pub p1: f64,
    /// Total weight before normalization (postselection success probability).
    pub raw_weight: f64,
}

impl Outcome {
    pub(crate) fn from_raw(raw: [f64; 2]) -> Self {
        let w = raw[0] + raw[1];
        let p1 = raw[1] / w;
        // Summing squared amplitudes can overshoot 1 by a few ulps.
        Self { p0: 1.0 - p1, p1, raw_weight: w.min(1.0) }
    }

    /// `argmax(p0, p1)`, ties going to class 0.
    pub fn predicted(&self) -> u8 {
        u8::from(self.p1 > self.p0)
    }
}

/// Snapshot of the simulator state handed to observers between stages.
#[derive(Debug, Clone, Copy)]
pub enum EvalState<'a> {
    PureVector { amplitudes: &'a [C64], live_qubits: usize },
    DensityMatrix { entries: &'a [C64], live_qubits: usize },
}

impl EvalState<'_> {
    pub fn live_qubits(&self) -> usize {
        match self {
            EvalState::PureVector { live_qubits, .. } | EvalState::DensityMatrix { live_qubits, .. } => *live_qubits,
        }
    }

    /// `‖ψ‖²` or `Tr ρ`.
    pub fn weight(&self) -> f64 {
        match self {
            EvalState::PureVector { amplitudes, .. } => amplitudes.iter().map(|a| a.norm_sqr()).sum(),
            EvalState::DensityMatrix { entries, live_qubits } => crate::sim::trace(entries, *live_qubits),
        }
    }

    /// `Tr ρ²`; `‖ψ‖⁴` for pure vectors.
    pub fn purity(&self) -> f64 {
        match self {
            EvalState::PureVector { .. } => self.weight().powi(2),
            EvalState::DensityMatrix { entries, .. } => crate::sim::purity(entries),
        }
    }
}

/// Pure-state evaluation with postselection onto `⟨0|` for eliminated wires.
pub fn eval_postselect(plan: &CircuitPlan, store: &ParamStore) -> Result<Outcome, EngineError> {
    eval_postselect_state(plan, store).map(|(_, o)| o)
}

/// Like [`eval_postselect`], also returning the unnormalized amplitudes of
/// the classifier output wire in wire-local qubit order.
pub fn eval_postselect_state(plan: &CircuitPlan, store: &ParamStore) -> Result<(Vec<C64>, Outcome), EngineError> {
    let bound = BoundPlan::bind(plan, store)?;
    let (state, raw) = bound.forward_pure(None)?;
    let local = exec::permute_to_local(&state, &plan.root_layout);
    Ok((local, Outcome::from_raw(raw)))
}

/// Density-matrix evaluation with partial traces for eliminated wires.
pub fn eval_discard(plan: &CircuitPlan, store: &ParamStore) -> Result<Outcome, EngineError> {
    eval_discard_state(plan, store).map(|(_, o)| o)
}

/// Like [`eval_discard`], also returning the classifier-output density
/// matrix (row-major, wire-local qubit order).
pub fn eval_discard_state(plan: &CircuitPlan, store: &ParamStore) -> Result<(Vec<C64>, Outcome), EngineError> {
    let bound = BoundPlan::bind(plan, store)?;
    let (rho, raw) = bound.forward_density(None)?;
    Ok((exec::density_to_local(&rho, &plan.root_layout), Outcome::from_raw(raw)))
}

/// Evaluate under the plan's configured mode.
pub fn evaluate(plan: &CircuitPlan, store: &ParamStore) -> Result<Outcome, EngineError> {
    evaluate_mode(plan, store, plan.config.mode)
}

pub fn evaluate_mode(plan: &CircuitPlan, store: &ParamStore, mode: Mode) -> Result<Outcome, EngineError> {
    match mode {
        Mode::Postselect => eval_postselect(plan, store),
        Mode::Discard => eval_discard(plan, store),
    }
}

/// Evaluate while reporting the state after every stage.
pub fn evaluate_observed(
    plan: &CircuitPlan,
    store: &ParamStore,
    mode: Mode,
    observer: &mut dyn FnMut(usize, EvalState<'_>),
) -> Result<Outcome, EngineError> {
    let bound = BoundPlan::bind(plan, store)?;
    let raw = match mode {
        Mode::Postselect => bound.forward_pure(Some(observer))?.1,
        Mode::Discard => bound.forward_density(Some(observer))?.1,
    };
    Ok(Outcome::from_raw(raw))
}
