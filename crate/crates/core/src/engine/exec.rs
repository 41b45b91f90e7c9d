use crate::ansatz::{AnsatzError, GateKind, ParamStore, C64};
use crate::config::Mode;
use crate::sim::{self, Op, ZERO};

use super::{CircuitPlan, EngineError, EvalState, Stage, MAX_REGISTER_QUBITS, MAX_TRACE_DRIFT, MIN_POSTSELECT_WEIGHT};

/// A gate with its register qubits and concrete angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundGate {
    pub kind: GateKind,
    pub control: Option<usize>,
    pub target: usize,
    pub angle: f64,
    /// Index into [`ParamStore::flatten`], if the gate is parameterized.
    pub param: Option<usize>,
}

impl BoundGate {
    pub(crate) fn op(&self) -> Op {
        let m = self.kind.block(self.angle);
        match self.control {
            Some(c) => Op::Controlled { c, t: self.target, m },
            None => Op::Single { t: self.target, m },
        }
    }

    fn derivative_op(&self) -> Op {
        let m = self.kind.block_derivative(self.angle);
        match self.control {
            Some(c) => Op::ControlProjected { c, t: self.target, m },
            None => Op::Single { t: self.target, m },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum BoundStage {
    Introduce(usize),
    Apply(Vec<BoundGate>),
    Reduce(Vec<usize>),
}

/// A plan with every gate bound to the current parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundPlan {
    pub(crate) stages: Vec<BoundStage>,
    pub(crate) measure: usize,
    pub(crate) high_water: usize,
    pub n_params: usize,
}

/// Forward-pass record for reverse-mode differentiation.
#[derive(Debug, Clone)]
pub struct Tape {
    mode: Mode,
    live: usize,
    state: Vec<C64>,
    /// State just before each reduction, in stage order.
    snapshots: Vec<Vec<C64>>,
    /// Unnormalized Born probabilities of the measured qubit.
    pub raw: [f64; 2],
}

impl BoundPlan {
    pub fn bind(plan: &CircuitPlan, store: &ParamStore) -> Result<Self, EngineError> {
        let offsets = store.offsets();
        let mut stages = Vec::with_capacity(plan.stages.len());
        for s in &plan.stages {
            stages.push(match s {
                Stage::Introduce { count, .. } => BoundStage::Introduce(*count),
                Stage::Reduce { qubits, .. } => BoundStage::Reduce(qubits.clone()),
                Stage::Apply { key, sequence, qubits, .. } => {
                    let angles = store.get(key)?;
                    if angles.len() != sequence.n_params {
                        return Err(AnsatzError::ParamShapeMismatch {
                            expected: sequence.n_params,
                            got: angles.len(),
                        }
                        .into());
                    }
                    let base = offsets[key];
                    BoundStage::Apply(
                        sequence
                            .gates
                            .iter()
                            .map(|g| BoundGate {
                                kind: g.kind,
                                control: g.control.map(|c| qubits[c]),
                                target: qubits[g.target],
                                angle: g.slot.map_or(0.0, |k| angles[k]),
                                param: g.slot.map(|k| base + k),
                            })
                            .collect(),
                    )
                }
            });
        }
        Ok(Self { stages, measure: plan.final_measure, high_water: plan.high_water, n_params: store.total_params() })
    }

    /// Locations `(stage, gate)` of every parameterized gate.
    pub fn parameterized_gates(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (si, s) in self.stages.iter().enumerate() {
            if let BoundStage::Apply(gates) = s {
                for (gi, g) in gates.iter().enumerate() {
                    if g.param.is_some() {
                        out.push((si, gi));
                    }
                }
            }
        }
        out
    }

    pub fn gate(&self, at: (usize, usize)) -> &BoundGate {
        match &self.stages[at.0] {
            BoundStage::Apply(g) => &g[at.1],
            _ => panic!("stage {} applies no gates", at.0),
        }
    }

    pub fn gate_mut(&mut self, at: (usize, usize)) -> &mut BoundGate {
        match &mut self.stages[at.0] {
            BoundStage::Apply(g) => &mut g[at.1],
            _ => panic!("stage {} applies no gates", at.0),
        }
    }

    /// Rejects plans whose largest staged register would not fit.
    fn check_size(&self, mode: Mode) -> Result<(), EngineError> {
        let limit = match mode {
            Mode::Postselect => MAX_REGISTER_QUBITS,
            Mode::Discard => MAX_REGISTER_QUBITS / 2,
        };
        if self.high_water > limit {
            return Err(EngineError::RegisterTooLarge { mode, qubits: self.high_water, limit });
        }
        Ok(())
    }

    pub(crate) fn forward_pure(
        &self,
        mut observer: Option<&mut dyn FnMut(usize, EvalState<'_>)>,
    ) -> Result<(Vec<C64>, [f64; 2]), EngineError> {
        self.check_size(Mode::Postselect)?;
        let mut psi = vec![C64::new(1.0, 0.0)];
        let mut m = 0;
        for (i, s) in self.stages.iter().enumerate() {
            match s {
                BoundStage::Introduce(k) => {
                    sim::extend_pure(&mut psi, *k);
                    m += k;
                }
                BoundStage::Apply(gates) => gates.iter().for_each(|g| sim::apply(&mut psi, &g.op())),
                BoundStage::Reduce(qs) => {
                    psi = sim::postselect(&psi, m, qs);
                    m -= qs.len();
                }
            }
            if let Some(obs) = observer.as_deref_mut() {
                obs(i, EvalState::PureVector { amplitudes: &psi, live_qubits: m });
            }
        }
        let raw = sim::probs_pure(&psi, self.measure);
        check_weight(raw)?;
        Ok((psi, raw))
    }

    pub(crate) fn forward_density(
        &self,
        mut observer: Option<&mut dyn FnMut(usize, EvalState<'_>)>,
    ) -> Result<(Vec<C64>, [f64; 2]), EngineError> {
        self.check_size(Mode::Discard)?;
        let mut rho = vec![C64::new(1.0, 0.0)];
        let mut m = 0;
        for (i, s) in self.stages.iter().enumerate() {
            match s {
                BoundStage::Introduce(k) => {
                    rho = sim::extend_rho(&rho, m, *k);
                    m += k;
                }
                BoundStage::Apply(gates) => {
                    for g in gates {
                        let op = g.op();
                        sim::apply_rho(&mut rho, m, &op, &op);
                    }
                }
                BoundStage::Reduce(qs) => {
                    rho = sim::partial_trace(&rho, m, qs);
                    m -= qs.len();
                }
            }
            if let Some(obs) = observer.as_deref_mut() {
                obs(i, EvalState::DensityMatrix { entries: &rho, live_qubits: m });
            }
        }
        let tr = sim::trace(&rho, m);
        if !((tr - 1.0).abs() <= MAX_TRACE_DRIFT) {
            return Err(EngineError::NumericalDrift { trace: tr });
        }
        Ok((rho.clone(), sim::probs_rho(&rho, m, self.measure)))
    }

    /// Raw Born probabilities under `mode`.
    pub fn raw_probs(&self, mode: Mode) -> Result<[f64; 2], EngineError> {
        match mode {
            Mode::Postselect => self.forward_pure(None).map(|r| r.1),
            Mode::Discard => self.forward_density(None).map(|r| r.1),
        }
    }

    pub fn tape(&self, mode: Mode) -> Result<Tape, EngineError> {
        self.check_size(mode)?;
        let mut state = vec![C64::new(1.0, 0.0)];
        let mut m = 0;
        let mut snapshots = Vec::new();
        for s in &self.stages {
            match (s, mode) {
                (BoundStage::Introduce(k), Mode::Postselect) => {
                    sim::extend_pure(&mut state, *k);
                    m += k;
                }
                (BoundStage::Introduce(k), Mode::Discard) => {
                    state = sim::extend_rho(&state, m, *k);
                    m += k;
                }
                (BoundStage::Apply(gates), Mode::Postselect) => {
                    gates.iter().for_each(|g| sim::apply(&mut state, &g.op()));
                }
                (BoundStage::Apply(gates), Mode::Discard) => {
                    for g in gates {
                        let op = g.op();
                        sim::apply_rho(&mut state, m, &op, &op);
                    }
                }
                (BoundStage::Reduce(qs), Mode::Postselect) => {
                    let next = sim::postselect(&state, m, qs);
                    snapshots.push(std::mem::replace(&mut state, next));
                    m -= qs.len();
                }
                (BoundStage::Reduce(qs), Mode::Discard) => {
                    let next = sim::partial_trace(&state, m, qs);
                    snapshots.push(std::mem::replace(&mut state, next));
                    m -= qs.len();
                }
            }
        }
        let raw = match mode {
            Mode::Postselect => {
                let raw = sim::probs_pure(&state, self.measure);
                check_weight(raw)?;
                raw
            }
            Mode::Discard => {
                let tr = sim::trace(&state, m);
                if !((tr - 1.0).abs() <= MAX_TRACE_DRIFT) {
                    return Err(EngineError::NumericalDrift { trace: tr });
                }
                sim::probs_rho(&state, m, self.measure)
            }
        };
        Ok(Tape { mode, live: m, state, snapshots, raw })
    }

    /// Gradient of a scalar `f(p0, p1)` of the raw probabilities with respect
    /// to every flat parameter, given `df/dp_b`.
    pub fn backward(&self, tape: Tape, df_dp: [f64; 2]) -> Vec<f64> {
        let Tape { mode, live, mut state, mut snapshots, .. } = tape;
        let mut m = live;
        let mut grad = vec![0.0; self.n_params];
        let t = self.measure;

        // Cotangent: ∂f/∂ψ̄ for pure states, the observable ∂f/∂ρ for densities.
        let mut adj: Vec<C64> = match mode {
            Mode::Postselect => state.iter().enumerate().map(|(i, a)| a * df_dp[(i >> t) & 1]).collect(),
            Mode::Discard => {
                let d = 1usize << m;
                let mut o = vec![ZERO; d * d];
                for i in 0..d {
                    o[i + i * d] = C64::new(df_dp[(i >> t) & 1], 0.0);
                }
                o
            }
        };

        for s in self.stages.iter().rev() {
            match s {
                BoundStage::Apply(gates) => {
                    for g in gates.iter().rev() {
                        let op = g.op();
                        let inv = op.adjoint();
                        match mode {
                            Mode::Postselect => {
                                sim::apply(&mut state, &inv);
                                if let Some(p) = g.param {
                                    let mut chi = state.clone();
                                    sim::apply(&mut chi, &g.derivative_op());
                                    grad[p] += 2.0 * sim::inner(&adj, &chi).re;
                                }
                                sim::apply(&mut adj, &inv);
                            }
                            Mode::Discard => {
                                sim::apply_rho(&mut state, m, &inv, &inv);
                                if let Some(p) = g.param {
                                    let mut x = state.clone();
                                    sim::apply_rho(&mut x, m, &g.derivative_op(), &op);
                                    grad[p] += 2.0 * sim::inner(&adj, &x).re;
                                }
                                sim::apply_rho(&mut adj, m, &inv, &inv);
                            }
                        }
                    }
                }
                BoundStage::Reduce(qs) => {
                    let before = m + qs.len();
                    state = snapshots.pop().expect("one snapshot per reduction");
                    adj = match mode {
                        Mode::Postselect => sim::postselect_adjoint(&adj, before, qs),
                        Mode::Discard => sim::partial_trace_adjoint(&adj, before, qs),
                    };
                    m = before;
                }
                BoundStage::Introduce(k) => {
                    let before = m - k;
                    match mode {
                        Mode::Postselect => {
                            state.truncate(1 << before);
                            adj.truncate(1 << before);
                        }
                        Mode::Discard => {
                            state = sim::extend_rho_adjoint(&state, before, *k);
                            adj = sim::extend_rho_adjoint(&adj, before, *k);
                        }
                    }
                    m = before;
                }
            }
        }
        grad
    }
}

fn check_weight(raw: [f64; 2]) -> Result<(), EngineError> {
    let weight = raw[0] + raw[1];
    if !(weight >= MIN_POSTSELECT_WEIGHT) {
        return Err(EngineError::DegeneratePostselection { weight });
    }
    Ok(())
}

fn local_to_register(l: usize, layout: &[usize]) -> usize {
    layout.iter().enumerate().fold(0, |acc, (j, &r)| acc | (((l >> j) & 1) << r))
}

pub(crate) fn permute_to_local(state: &[C64], layout: &[usize]) -> Vec<C64> {
    (0..state.len()).map(|l| state[local_to_register(l, layout)]).collect()
}

pub(crate) fn density_to_local(rho: &[C64], layout: &[usize]) -> Vec<C64> {
    let d = 1usize << layout.len();
    let mut out = vec![ZERO; d * d];
    for r in 0..d {
        for c in 0..d {
            out[r * d + c] = rho[local_to_register(r, layout) + local_to_register(c, layout) * d];
        }
    }
    out
}
