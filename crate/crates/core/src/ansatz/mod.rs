//! Semantic functor: parameterized circuits for diagram boxes.
//!
//! Every box is realized by an ansatz template of `D` layers on the box's
//! qubit width. Parameters for a box come from the [`ParamStore`] entry that
//! the sharing policy selects for it.

pub mod dense;
pub mod gates;
mod store;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ModelConfig;
use crate::diagram::{BoxRole, DiagramBox};

pub use dense::DenseMatrix;
pub use gates::{Gate, GateKind, Mat2, C64};
pub use store::{init_params, InitScheme, ParamKey, ParamSchema, ParamStore, Sharing, Slot};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnsatzError {
    #[error("parameter vector has length {got}, expected {expected}")]
    ParamShapeMismatch { expected: usize, got: usize },
    #[error("no parameters bound for key `{0}`")]
    UnboundParameters(ParamKey),
    #[error("dense oracle limited to {limit} qubits, got {qubits}")]
    OracleTooLarge { qubits: usize, limit: usize },
    #[error("ansatz needs at least one qubit and one layer")]
    EmptyAnsatz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Sim14,
    Sim15,
    Iqp,
}

impl Family {
    /// Parameters consumed by one layer on `n` qubits.
    pub fn per_layer(self, n: usize) -> usize {
        match (self, n) {
            (Family::Sim14, 1) => 3,
            (Family::Sim14, n) => 4 * n,
            (Family::Sim15, 1) => 2,
            (Family::Sim15, n) => 2 * n,
            (Family::Iqp, 1) => 1,
            (Family::Iqp, n) => n - 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Sim14 => "sim14",
            Family::Sim15 => "sim15",
            Family::Iqp => "iqp",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sim14" => Ok(Family::Sim14),
            "sim15" => Ok(Family::Sim15),
            "iqp" => Ok(Family::Iqp),
            _ => Err(format!("unknown ansatz family `{s}` (expected sim14, sim15 or iqp)")),
        }
    }
}

/// An ansatz family together with its depth `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnsatzFamily {
    pub family: Family,
    pub depth: usize,
}

impl AnsatzFamily {
    pub fn new(family: Family, depth: usize) -> Self {
        Self { family, depth }
    }
}

pub fn param_count(ansatz: AnsatzFamily, n_qubits: usize) -> usize {
    ansatz.depth * ansatz.family.per_layer(n_qubits)
}

/// Parameterized gate template on `n_qubits`; `n_params` slots are dense.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSequence {
    pub n_qubits: usize,
    pub n_params: usize,
    pub gates: Vec<Gate>,
}

fn layer_gates(family: Family, n: usize, offset: usize, gates: &mut Vec<Gate>) {
    use GateKind::*;
    if n == 1 {
        match family {
            Family::Sim14 => {
                gates.push(Gate::single(Ry, 0, Some(offset)));
                gates.push(Gate::single(Rz, 0, Some(offset + 1)));
                gates.push(Gate::single(Ry, 0, Some(offset + 2)));
            }
            Family::Sim15 => {
                gates.push(Gate::single(Ry, 0, Some(offset)));
                gates.push(Gate::single(Rz, 0, Some(offset + 1)));
            }
            Family::Iqp => {
                gates.push(Gate::single(H, 0, None));
                gates.push(Gate::single(Rz, 0, Some(offset)));
            }
        }
        return;
    }
    match family {
        Family::Sim14 => {
            for i in 0..n {
                gates.push(Gate::single(Ry, i, Some(offset + i)));
            }
            for (k, i) in (0..n).rev().enumerate() {
                gates.push(Gate::controlled(CRx, i, (i + 1) % n, Some(offset + n + k)));
            }
            for i in 0..n {
                gates.push(Gate::single(Ry, i, Some(offset + 2 * n + i)));
            }
            for i in 0..n {
                gates.push(Gate::controlled(CRx, (i + 1) % n, i, Some(offset + 3 * n + i)));
            }
        }
        Family::Sim15 => {
            for i in 0..n {
                gates.push(Gate::single(Ry, i, Some(offset + i)));
            }
            for i in (0..n).rev() {
                gates.push(Gate::controlled(CNOT, i, (i + 1) % n, None));
            }
            for i in 0..n {
                gates.push(Gate::single(Ry, i, Some(offset + n + i)));
            }
            // The first ring undone in reverse order.
            for i in 0..n {
                gates.push(Gate::controlled(CNOT, i, (i + 1) % n, None));
            }
        }
        Family::Iqp => {
            for i in 0..n {
                gates.push(Gate::single(H, i, None));
            }
            for j in 0..n - 1 {
                gates.push(Gate::controlled(CRz, j, j + 1, Some(offset + j)));
            }
        }
    }
}

/// Template of `ansatz.depth` layers on `n_qubits`.
pub fn ansatz_sequence(ansatz: AnsatzFamily, n_qubits: usize) -> GateSequence {
    let per = ansatz.family.per_layer(n_qubits);
    let mut gates = Vec::new();
    for layer in 0..ansatz.depth {
        layer_gates(ansatz.family, n_qubits, layer * per, &mut gates);
    }
    GateSequence { n_qubits, n_params: per * ansatz.depth, gates }
}

/// A template together with concrete angles.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSequence {
    pub sequence: GateSequence,
    pub angles: Vec<f64>,
}

impl BoundSequence {
    /// Angle for gate `g`, zero for parameter-free gates.
    pub fn angle(&self, g: &Gate) -> f64 {
        g.slot.map_or(0.0, |s| self.angles[s])
    }
}

/// One ansatz layer bound to `params`.
pub fn build_layer(family: Family, n_qubits: usize, params: &[f64]) -> Result<BoundSequence, AnsatzError> {
    if n_qubits == 0 {
        return Err(AnsatzError::EmptyAnsatz);
    }
    let expected = family.per_layer(n_qubits);
    if params.len() != expected {
        return Err(AnsatzError::ParamShapeMismatch { expected, got: params.len() });
    }
    Ok(BoundSequence {
        sequence: ansatz_sequence(AnsatzFamily::new(family, 1), n_qubits),
        angles: params.to_vec(),
    })
}

/// A box's circuit and what the engine does around it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxCircuit {
    pub key: ParamKey,
    pub sequence: Arc<GateSequence>,
    pub angles: Vec<f64>,
    /// Qubits the circuit acts on: `q` for word and classifier, `2q` otherwise.
    pub width: usize,
    /// Box-local qubits eliminated after the circuit (merge only).
    pub eliminated: Vec<usize>,
    /// Box-local qubit measured in the Z basis (classifier only).
    pub measured: Option<usize>,
}

/// Qubit width of a box under `q` qubits per internal wire.
pub fn box_width(role: &BoxRole, q: usize) -> usize {
    match role {
        BoxRole::Word(_) | BoxRole::Classifier => q,
        BoxRole::Filter | BoxRole::Merge => 2 * q,
    }
}

pub fn instantiate_box(
    diagram_box: &DiagramBox,
    config: &ModelConfig,
    store: &ParamStore,
) -> Result<BoxCircuit, AnsatzError> {
    let key = config.key_for(diagram_box);
    let width = box_width(&diagram_box.role, config.q);
    let ansatz = config.ansatz.for_role(&diagram_box.role);
    let sequence = ansatz_sequence(ansatz, width);
    let angles = store.get(&key)?;
    if angles.len() != sequence.n_params {
        return Err(AnsatzError::ParamShapeMismatch { expected: sequence.n_params, got: angles.len() });
    }
    let q = config.q;
    Ok(BoxCircuit {
        key,
        sequence: Arc::new(sequence),
        angles: angles.to_vec(),
        width,
        eliminated: match diagram_box.role {
            BoxRole::Merge => (q..2 * q).collect(),
            _ => Vec::new(),
        },
        measured: matches!(diagram_box.role, BoxRole::Classifier).then_some(0),
    })
}

pub const UNITARY_ORACLE_LIMIT: usize = 12;

/// Dense `2^n x 2^n` unitary of a bound sequence, gates applied in order.
pub fn unitary_of(seq: &GateSequence, angles: &[f64]) -> Result<DenseMatrix, AnsatzError> {
    if seq.n_qubits > UNITARY_ORACLE_LIMIT {
        return Err(AnsatzError::OracleTooLarge { qubits: seq.n_qubits, limit: UNITARY_ORACLE_LIMIT });
    }
    if angles.len() != seq.n_params {
        return Err(AnsatzError::ParamShapeMismatch { expected: seq.n_params, got: angles.len() });
    }
    let dim = 1usize << seq.n_qubits;
    let mut u = DenseMatrix::zeros(dim);
    for c in 0..dim {
        let mut col = vec![C64::new(0.0, 0.0); dim];
        col[c] = C64::new(1.0, 0.0);
        for g in &seq.gates {
            col = dense::naive_apply(g, g.slot.map_or(0.0, |s| angles[s]), &col);
        }
        for (r, v) in col.into_iter().enumerate() {
            u.data[r * dim + c] = v;
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const FAMILIES: [Family; 3] = [Family::Sim14, Family::Sim15, Family::Iqp];

    #[test]
    fn sim14_two_qubits_one_layer() {
        let b = build_layer(Family::Sim14, 2, &[0.1; 8]).unwrap();
        assert_eq!(b.sequence.gates.len(), 8);
        let slots: Vec<usize> = b.sequence.gates.iter().filter_map(|g| g.slot).collect();
        assert_eq!(slots, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn sim14_single_qubit_depth_two() {
        assert_eq!(param_count(AnsatzFamily::new(Family::Sim14, 2), 1), 6);
        let s = ansatz_sequence(AnsatzFamily::new(Family::Sim14, 2), 1);
        let kinds: Vec<GateKind> = s.gates.iter().map(|g| g.kind).collect();
        use GateKind::*;
        assert_eq!(kinds, vec![Ry, Rz, Ry, Ry, Rz, Ry]);
    }

    #[test]
    fn iqp_three_qubits() {
        let b = build_layer(Family::Iqp, 3, &[0.3, 0.4]).unwrap();
        let g = &b.sequence.gates;
        use GateKind::*;
        assert_eq!(
            g.iter().map(|g| (g.kind, g.control, g.target)).collect::<Vec<_>>(),
            vec![(H, None, 0), (H, None, 1), (H, None, 2), (CRz, Some(0), 1), (CRz, Some(1), 2)]
        );
        assert_eq!(b.sequence.n_params, 2);
    }

    #[test]
    fn wrong_length_rejected() {
        assert_eq!(
            build_layer(Family::Sim14, 2, &[0.0; 7]),
            Err(AnsatzError::ParamShapeMismatch { expected: 8, got: 7 })
        );
    }

    #[test]
    fn sim14_ring_orientation() {
        let s = ansatz_sequence(AnsatzFamily::new(Family::Sim14, 1), 3);
        let pairs: Vec<(usize, usize)> = s
            .gates
            .iter()
            .filter(|g| g.kind == GateKind::CRx)
            .map(|g| (g.control.unwrap(), g.target))
            .collect();
        assert_eq!(pairs, vec![(2, 0), (1, 2), (0, 1), (1, 0), (2, 1), (0, 2)]);
    }

    #[test]
    fn zero_angles_give_identity_for_sim_families() {
        for family in [Family::Sim14, Family::Sim15] {
            for n in 1..=4 {
                for depth in 1..=2 {
                    let a = AnsatzFamily::new(family, depth);
                    let s = ansatz_sequence(a, n);
                    let u = unitary_of(&s, &vec![0.0; s.n_params]).unwrap();
                    assert!(u.max_abs_diff(&DenseMatrix::identity(1 << n)) < 1e-14, "{family:?} n={n}");
                }
            }
        }
    }

    #[test]
    fn ry_pi_maps_zero_to_one() {
        let s = ansatz_sequence(AnsatzFamily::new(Family::Sim15, 1), 1);
        // Ry(π) then Rz(0).
        let u = unitary_of(&s, &[PI, 0.0]).unwrap();
        assert!(u.get(0, 0).norm() < 1e-15);
        assert!((u.get(1, 0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_size_limit() {
        let s = ansatz_sequence(AnsatzFamily::new(Family::Iqp, 1), 13);
        assert!(matches!(
            unitary_of(&s, &vec![0.0; s.n_params]),
            Err(AnsatzError::OracleTooLarge { qubits: 13, .. })
        ));
    }

    proptest! {
        #[test]
        fn slot_count_matches_formula(fi in 0usize..3, n in 1usize..=6, depth in 1usize..=3) {
            let a = AnsatzFamily::new(FAMILIES[fi], depth);
            let s = ansatz_sequence(a, n);
            let mut slots: Vec<usize> = s.gates.iter().filter_map(|g| g.slot).collect();
            slots.sort_unstable();
            prop_assert_eq!(slots, (0..param_count(a, n)).collect::<Vec<_>>());
            prop_assert!(s.gates.iter().all(|g| g.target < n && g.control.map_or(true, |c| c < n && c != g.target)));
        }

        #[test]
        fn unitary_for_random_angles(fi in 0usize..3, n in 1usize..=4, depth in 1usize..=2, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = AnsatzFamily::new(FAMILIES[fi], depth);
            let s = ansatz_sequence(a, n);
            let angles: Vec<f64> = (0..s.n_params).map(|_| rng.gen_range(-PI..PI)).collect();
            let u = unitary_of(&s, &angles).unwrap();
            prop_assert!(u.unitarity_defect() < 1e-12);
        }
    }
}
