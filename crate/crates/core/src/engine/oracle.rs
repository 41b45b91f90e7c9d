//! Brute-force references for the staged engine.
//!
//! Every word qubit gets its own register line up front; the whole circuit
//! is applied with the dense reference kernels, and eliminated qubits are
//! projected or traced out only at the very end.

use std::collections::HashMap;

use crate::ansatz::dense::{naive_apply, naive_conjugate, DenseMatrix};
use crate::ansatz::{box_width, instantiate_box, Gate, ParamStore, C64};
use crate::config::ModelConfig;
use crate::diagram::{BoxRole, Endpoint, Port, SchemeDiagram};

use super::EngineError;

pub const STATE_ORACLE_LIMIT: usize = 14;
pub const DENSITY_ORACLE_LIMIT: usize = 7;

/// Global qubit assignment and the gate list in diagram order.
struct Unrolled {
    total: usize,
    gates: Vec<(Gate, f64)>,
    root: Vec<usize>,
    eliminated: Vec<usize>,
}

fn unroll(diagram: &SchemeDiagram, config: &ModelConfig, store: &ParamStore) -> Result<Unrolled, EngineError> {
    let q = config.q;
    let total = diagram.padded_length * q;
    let feeds: HashMap<Port, Port> = diagram
        .wires
        .iter()
        .filter_map(|w| match w.target {
            Endpoint::Box(t) => Some((t, w.source)),
            Endpoint::Output => None,
        })
        .collect();
    let mut lines: HashMap<Port, Vec<usize>> = HashMap::new();
    let mut gates = Vec::new();
    let mut root = Vec::new();
    let mut eliminated = Vec::new();
    let mut next_leaf = 0;

    for b in &diagram.boxes {
        let circuit = instantiate_box(b, config, store)?;
        debug_assert_eq!(circuit.width, box_width(&b.role, q));
        let input = |port: usize| lines[&feeds[&Port { node: b.id, port }]].clone();
        let global: Vec<usize> = match b.role {
            BoxRole::Word(_) => {
                let g: Vec<usize> = (next_leaf * q..(next_leaf + 1) * q).collect();
                next_leaf += 1;
                g
            }
            BoxRole::Classifier => input(0),
            BoxRole::Merge | BoxRole::Filter => {
                let mut g = input(0);
                g.extend(input(1));
                g
            }
        };
        for g in &circuit.sequence.gates {
            let angle = g.slot.map_or(0.0, |s| circuit.angles[s]);
            let mapped = Gate {
                kind: g.kind,
                control: g.control.map(|c| global[c]),
                target: global[g.target],
                slot: g.slot,
            };
            gates.push((mapped, angle));
        }
        let out = |port| Port { node: b.id, port };
        match b.role {
            BoxRole::Word(_) => {
                lines.insert(out(0), global);
            }
            BoxRole::Merge => {
                eliminated.extend(circuit.eliminated.iter().map(|&j| global[j]));
                lines.insert(out(0), global[..q].to_vec());
            }
            BoxRole::Filter => {
                lines.insert(out(0), global[..q].to_vec());
                lines.insert(out(1), global[q..].to_vec());
            }
            BoxRole::Classifier => root = global,
        }
    }
    Ok(Unrolled { total, gates, root, eliminated })
}

/// Full state over all word qubits after projecting every eliminated qubit onto `|0⟩`.
#[derive(Debug, Clone)]
pub struct OracleState {
    pub amplitudes: Vec<C64>,
    pub total_qubits: usize,
    /// Global qubit of each local qubit of the classifier output wire.
    pub root: Vec<usize>,
    pub eliminated: Vec<usize>,
}

impl OracleState {
    /// Amplitudes of the classifier output wire (eliminated qubits at 0), in wire-local order.
    pub fn root_amplitudes(&self) -> Vec<C64> {
        (0..1usize << self.root.len())
            .map(|l| {
                let idx = self.root.iter().enumerate().fold(0, |a, (j, &g)| a | (((l >> j) & 1) << g));
                self.amplitudes[idx]
            })
            .collect()
    }
}

pub fn brute_force_state(
    diagram: &SchemeDiagram,
    config: &ModelConfig,
    store: &ParamStore,
) -> Result<OracleState, EngineError> {
    let total = diagram.padded_length * config.q;
    if total > STATE_ORACLE_LIMIT {
        return Err(EngineError::OracleTooLarge { qubits: total, limit: STATE_ORACLE_LIMIT });
    }
    let u = unroll(diagram, config, store)?;
    let mut psi = vec![C64::new(0.0, 0.0); 1usize << u.total];
    psi[0] = C64::new(1.0, 0.0);
    for (g, angle) in &u.gates {
        psi = naive_apply(g, *angle, &psi);
    }
    let mask: usize = u.eliminated.iter().map(|&e| 1usize << e).sum();
    for (i, a) in psi.iter_mut().enumerate() {
        if i & mask != 0 {
            *a = C64::new(0.0, 0.0);
        }
    }
    Ok(OracleState { amplitudes: psi, total_qubits: u.total, root: u.root, eliminated: u.eliminated })
}

/// Reduced density matrix of the classifier output wire.
#[derive(Debug, Clone)]
pub struct OracleDensity {
    /// Row-major over the wire-local qubits.
    pub reduced: DenseMatrix,
    /// The full final density matrix before tracing.
    pub full: DenseMatrix,
    pub root: Vec<usize>,
}

pub fn brute_force_density(
    diagram: &SchemeDiagram,
    config: &ModelConfig,
    store: &ParamStore,
) -> Result<OracleDensity, EngineError> {
    let total = diagram.padded_length * config.q;
    if total > DENSITY_ORACLE_LIMIT {
        return Err(EngineError::OracleTooLarge { qubits: total, limit: DENSITY_ORACLE_LIMIT });
    }
    let u = unroll(diagram, config, store)?;
    let dim = 1usize << u.total;
    let mut rho = DenseMatrix::zeros(dim);
    rho.data[0] = C64::new(1.0, 0.0);
    for (g, angle) in &u.gates {
        rho = naive_conjugate(g, *angle, &rho);
    }
    // Sum over the traced-out configurations: entries (i, j) that agree off the root.
    let root_mask: usize = u.root.iter().map(|&r| 1usize << r).sum();
    let local = |i: usize| u.root.iter().enumerate().fold(0, |a, (j, &g)| a | (((i >> g) & 1) << j));
    let d = 1usize << u.root.len();
    let mut reduced = DenseMatrix::zeros(d);
    for i in 0..dim {
        for j in 0..dim {
            if (i & !root_mask) == (j & !root_mask) {
                reduced.data[local(i) * d + local(j)] += rho.get(i, j);
            }
        }
    }
    Ok(OracleDensity { reduced, full: rho, root: u.root })
}
