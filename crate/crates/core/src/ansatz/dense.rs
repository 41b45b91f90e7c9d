//! Dense reference linear algebra used by the test oracles.
//!
//! Gate application here is written entry-by-entry from the embedded gate
//! matrix, and shares no code with the simulator kernels it checks.

use super::gates::{Gate, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub dim: usize,
    /// Row-major entries.
    pub data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.dim).map(|r| self.get(r, c)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.data[c * self.dim + r] = self.get(r, c).conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |(U†U - I)_{ij}|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().mul(self).max_abs_diff(&Self::identity(self.dim))
    }
}

/// Entry `(r, c)` of `gate` embedded in the full register.
pub fn gate_entry(gate: &Gate, angle: f64, r: usize, c: usize) -> C64 {
    let t = gate.target;
    if (r ^ c) & !(1usize << t) != 0 {
        return C64::new(0.0, 0.0);
    }
    if let Some(ctl) = gate.control {
        if (c >> ctl) & 1 == 0 {
            return if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        }
    }
    gate.kind.block(angle)[(r >> t) & 1][(c >> t) & 1]
}

/// `G v` computed row by row from [`gate_entry`].
pub fn naive_apply(gate: &Gate, angle: f64, v: &[C64]) -> Vec<C64> {
    let t = 1usize << gate.target;
    (0..v.len())
        .map(|r| {
            let c0 = r & !t;
            let c1 = r | t;
            gate_entry(gate, angle, r, c0) * v[c0] + gate_entry(gate, angle, r, c1) * v[c1]
        })
        .collect()
}

/// Row-vector form `v^T G^T` applied to the column index of a row-major
/// matrix: returns `M G^†` given `M`, used for `ρ -> G ρ G^†`.
pub fn naive_conjugate(gate: &Gate, angle: f64, rho: &DenseMatrix) -> DenseMatrix {
    let n = rho.dim;
    // G ρ
    let mut left = DenseMatrix::zeros(n);
    for c in 0..n {
        let col = naive_apply(gate, angle, &rho.column(c));
        for r in 0..n {
            left.data[r * n + c] = col[r];
        }
    }
    // (G ρ) G† = (G (G ρ)†)†
    let adj = left.adjoint();
    let mut right = DenseMatrix::zeros(n);
    for c in 0..n {
        let col = naive_apply(gate, angle, &adj.column(c));
        for r in 0..n {
            right.data[r * n + c] = col[r];
        }
    }
    right.adjoint()
}
