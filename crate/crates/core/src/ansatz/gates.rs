use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

/// 2x2 complex block acting on a gate's target qubit, row-major.
pub type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    CRx,
    CRz,
    CNOT,
}

impl GateKind {
    pub fn is_controlled(self) -> bool {
        matches!(self, GateKind::CRx | GateKind::CRz | GateKind::CNOT)
    }

    pub fn is_parameterized(self) -> bool {
        !matches!(self, GateKind::H | GateKind::CNOT)
    }

    /// Target block for angle `theta`. Controlled gates return the block
    /// applied when the control is `|1⟩`.
    pub fn block(self, theta: f64) -> Mat2 {
        let (s, c) = (theta / 2.0).sin_cos();
        match self {
            GateKind::Rx | GateKind::CRx => {
                [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
            }
            GateKind::Ry => [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]],
            GateKind::Rz | GateKind::CRz => {
                [[C64::new(c, -s), ZERO], [ZERO, C64::new(c, s)]]
            }
            GateKind::H => {
                let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            GateKind::CNOT => [[ZERO, ONE], [ONE, ZERO]],
        }
    }

    /// Derivative of [`GateKind::block`] with respect to `theta`.
    pub fn block_derivative(self, theta: f64) -> Mat2 {
        let (s, c) = (theta / 2.0).sin_cos();
        let (hs, hc) = (0.5 * s, 0.5 * c);
        match self {
            GateKind::Rx | GateKind::CRx => {
                [[C64::new(-hs, 0.0), C64::new(0.0, -hc)], [C64::new(0.0, -hc), C64::new(-hs, 0.0)]]
            }
            GateKind::Ry => {
                [[C64::new(-hs, 0.0), C64::new(-hc, 0.0)], [C64::new(hc, 0.0), C64::new(-hs, 0.0)]]
            }
            GateKind::Rz | GateKind::CRz => {
                [[C64::new(-hs, -hc), ZERO], [ZERO, C64::new(-hs, hc)]]
            }
            GateKind::H | GateKind::CNOT => [[ZERO; 2]; 2],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "Rx",
            GateKind::Ry => "Ry",
            GateKind::Rz => "Rz",
            GateKind::H => "H",
            GateKind::CRx => "CRx",
            GateKind::CRz => "CRz",
            GateKind::CNOT => "CNOT",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One gate of a template. `slot` indexes the parameter vector of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub control: Option<usize>,
    pub target: usize,
    pub slot: Option<usize>,
}

impl Gate {
    pub fn single(kind: GateKind, target: usize, slot: Option<usize>) -> Self {
        Self { kind, control: None, target, slot }
    }

    pub fn controlled(kind: GateKind, control: usize, target: usize, slot: Option<usize>) -> Self {
        Self { kind, control: Some(control), target, slot }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self.control {
            Some(c) => vec![c, self.target],
            None => vec![self.target],
        }
    }
}

#[cfg(test)]
pub(crate) fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub(crate) fn mat2_adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub(crate) fn mat2_conj(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[0][1].conj()], [a[1][0].conj(), a[1][1].conj()]]
}
