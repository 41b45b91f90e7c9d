//! Gradients of the binary cross-entropy loss with respect to a [`ParamStore`].
//!
//! Four backends share one signature: exact reverse-mode differentiation
//! through the staged simulation ([`grad_adjoint`]), central differences
//! ([`grad_finite_diff`]), parameter-shift rules ([`grad_param_shift`]) and
//! simultaneous perturbation ([`grad_spsa`]). Entries of shared keys collect
//! the contributions of every box that reads them.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ansatz::{GateKind, ParamKey, ParamStore};
use crate::config::Mode;
use crate::engine::{BoundPlan, CircuitPlan, EngineError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("no parameter-shift rule for {0} gates")]
    UnsupportedGateForShift(GateKind),
    #[error("perturbation must be positive, got {0}")]
    InvalidPerturbation(f64),
}

/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` inside the loss.
pub const BCE_CLAMP: f64 = 1e-7;

/// Binary cross-entropy of the normalized class-1 probability against `label`,
/// with its derivative with respect to the raw (unnormalized) probabilities.
pub fn bce(raw: [f64; 2], label: u8) -> (f64, [f64; 2]) {
    let w = raw[0] + raw[1];
    let p1 = raw[1] / w;
    let clamped = p1.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    let (loss, dl_dp1) = if label == 1 {
        (-clamped.ln(), -1.0 / clamped)
    } else {
        (-(1.0 - clamped).ln(), 1.0 / (1.0 - clamped))
    };
    let dl_dp1 = if clamped == p1 { dl_dp1 } else { 0.0 };
    // p̂1 = p1 / (p0 + p1)
    let w2 = w * w;
    (loss, [dl_dp1 * (-raw[1] / w2), dl_dp1 * (raw[0] / w2)])
}

/// Loss gradient shaped like the store it was taken against.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub entries: BTreeMap<ParamKey, Vec<f64>>,
    pub loss: f64,
}

impl Gradient {
    pub fn from_flat(store: &ParamStore, flat: &[f64], loss: f64) -> Self {
        let mut it = flat.iter().copied();
        let entries = store
            .entries
            .iter()
            .map(|(k, v)| (*k, it.by_ref().take(v.len()).collect()))
            .collect();
        Self { entries, loss }
    }

    pub fn zeros_like(store: &ParamStore) -> Self {
        Self::from_flat(store, &vec![0.0; store.total_params()], 0.0)
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.entries.values().flatten().copied().collect()
    }

    pub fn get(&self, key: &ParamKey) -> Option<&[f64]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn is_finite(&self) -> bool {
        self.loss.is_finite() && self.entries.values().flatten().all(|x| x.is_finite())
    }

    /// Element-wise `self += other`, including the loss.
    pub fn accumulate(&mut self, other: &Gradient) {
        for (k, v) in &other.entries {
            let dst = self.entries.entry(*k).or_insert_with(|| vec![0.0; v.len()]);
            dst.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
        self.loss += other.loss;
    }

    pub fn scale(&mut self, s: f64) {
        self.entries.values_mut().flatten().for_each(|x| *x *= s);
        self.loss *= s;
    }
}

/// Loss of a single labelled evaluation.
pub fn loss(plan: &CircuitPlan, store: &ParamStore, label: u8, mode: Mode) -> Result<f64, EngineError> {
    let raw = BoundPlan::bind(plan, store)?.raw_probs(mode)?;
    Ok(bce(raw, label).0)
}

/// Exact gradient by reverse-mode differentiation through the staged plan.
pub fn grad_adjoint(plan: &CircuitPlan, store: &ParamStore, label: u8, mode: Mode) -> Result<Gradient, GradError> {
    let bound = BoundPlan::bind(plan, store)?;
    let tape = bound.tape(mode)?;
    let (l, dl_dp) = bce(tape.raw, label);
    let flat = bound.backward(tape, dl_dp);
    Ok(Gradient::from_flat(store, &flat, l))
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_difference<E>(
    mut f: impl FnMut(&[f64]) -> Result<f64, E>,
    x: &[f64],
    h: f64,
) -> Result<Vec<f64>, E> {
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

pub fn grad_finite_diff(
    plan: &CircuitPlan,
    store: &ParamStore,
    label: u8,
    mode: Mode,
    h: f64,
) -> Result<Gradient, GradError> {
    if !(h > 0.0) {
        return Err(GradError::InvalidPerturbation(h));
    }
    let mut probe = store.clone();
    let flat = central_difference(
        |x| {
            probe.assign(x);
            loss(plan, &probe, label, mode)
        },
        &store.flatten(),
        h,
    )?;
    Ok(Gradient::from_flat(store, &flat, loss(plan, store, label, mode)?))
}

/// Shift rule for a single gate: `dθ f = Σ c_k (f(θ + s_k) - f(θ - s_k))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftRule {
    pub terms: &'static [(f64, f64)],
}

const TWO_TERM: [(f64, f64); 1] = [(0.5, FRAC_PI_2)];
// Controlled rotations have generator spectrum {0, ±1/2}.
const FOUR_TERM: [(f64, f64); 2] = [
    ((SQRT_2 + 1.0) / (4.0 * SQRT_2), FRAC_PI_2),
    (-(SQRT_2 - 1.0) / (4.0 * SQRT_2), 3.0 * FRAC_PI_2),
];

pub fn shift_rule(kind: GateKind) -> Result<ShiftRule, GradError> {
    match kind {
        GateKind::Rx | GateKind::Ry | GateKind::Rz => Ok(ShiftRule { terms: &TWO_TERM }),
        GateKind::CRx | GateKind::CRz => Ok(ShiftRule { terms: &FOUR_TERM }),
        GateKind::H | GateKind::CNOT => Err(GradError::UnsupportedGateForShift(kind)),
    }
}

/// Gradient from per-gate parameter shifts of the raw probabilities, chained
/// through the loss.
pub fn grad_param_shift(plan: &CircuitPlan, store: &ParamStore, label: u8, mode: Mode) -> Result<Gradient, GradError> {
    let mut bound = BoundPlan::bind(plan, store)?;
    let raw = bound.raw_probs(mode)?;
    let (l, dl_dp) = bce(raw, label);
    let mut flat = vec![0.0; bound.n_params];
    for at in bound.parameterized_gates() {
        let gate = *bound.gate(at);
        let rule = shift_rule(gate.kind)?;
        let mut dp = [0.0; 2];
        for &(coef, shift) in rule.terms {
            bound.gate_mut(at).angle = gate.angle + shift;
            let up = bound.raw_probs(mode)?;
            bound.gate_mut(at).angle = gate.angle - shift;
            let down = bound.raw_probs(mode)?;
            for b in 0..2 {
                dp[b] += coef * (up[b] - down[b]);
            }
        }
        bound.gate_mut(at).angle = gate.angle;
        flat[gate.param.expect("parameterized gate")] += dl_dp[0] * dp[0] + dl_dp[1] * dp[1];
    }
    Ok(Gradient::from_flat(store, &flat, l))
}

/// One two-sided SPSA estimate of `∇f(x)` with Rademacher directions.
pub fn spsa_estimate<E>(
    mut f: impl FnMut(&[f64]) -> Result<f64, E>,
    x: &[f64],
    c: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, E> {
    let delta: Vec<f64> = (0..x.len()).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
    let plus: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + c * d).collect();
    let minus: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a - c * d).collect();
    let diff = f(&plus)? - f(&minus)?;
    Ok(delta.iter().map(|d| diff / (2.0 * c * d)).collect())
}

pub fn grad_spsa(
    plan: &CircuitPlan,
    store: &ParamStore,
    label: u8,
    mode: Mode,
    c: f64,
    seed: u64,
) -> Result<Gradient, GradError> {
    if !(c > 0.0) {
        return Err(GradError::InvalidPerturbation(c));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = store.clone();
    let flat = spsa_estimate(
        |x| {
            probe.assign(x);
            loss(plan, &probe, label, mode)
        },
        &store.flatten(),
        c,
        &mut rng,
    )?;
    Ok(Gradient::from_flat(store, &flat, loss(plan, store, label, mode)?))
}
