//! In-place state-vector and density-matrix kernels.
//!
//! Qubit `k` is bit `k` of a basis index. A density matrix on `m` qubits is
//! stored as a vector of `4^m` entries with the row index in the low `m` bits
//! and the column index in the high `m` bits, so `ρ -> G ρ G†` is `G` on row
//! bit `t` followed by `conj(G)` on column bit `t + m`.

use crate::ansatz::gates::{mat2_adjoint, mat2_conj, Mat2, C64};

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy)]
pub(crate) enum Op {
    Single { t: usize, m: Mat2 },
    Controlled { c: usize, t: usize, m: Mat2 },
    /// `|1⟩⟨1|_c ⊗ m`: the control-0 block is annihilated.
    ControlProjected { c: usize, t: usize, m: Mat2 },
}

impl Op {
    pub(crate) fn map(self, f: impl Fn(&Mat2) -> Mat2) -> Op {
        match self {
            Op::Single { t, m } => Op::Single { t, m: f(&m) },
            Op::Controlled { c, t, m } => Op::Controlled { c, t, m: f(&m) },
            Op::ControlProjected { c, t, m } => Op::ControlProjected { c, t, m: f(&m) },
        }
    }

    pub(crate) fn adjoint(self) -> Op {
        self.map(mat2_adjoint)
    }

    fn shifted(self, by: usize) -> Op {
        match self {
            Op::Single { t, m } => Op::Single { t: t + by, m },
            Op::Controlled { c, t, m } => Op::Controlled { c: c + by, t: t + by, m },
            Op::ControlProjected { c, t, m } => Op::ControlProjected { c: c + by, t: t + by, m },
        }
    }
}

#[inline]
fn rotate(s: &mut [C64], i: usize, j: usize, m: &Mat2) {
    let (a, b) = (s[i], s[j]);
    s[i] = m[0][0] * a + m[0][1] * b;
    s[j] = m[1][0] * a + m[1][1] * b;
}

pub(crate) fn apply(s: &mut [C64], op: &Op) {
    match *op {
        Op::Single { t, ref m } => {
            let tb = 1usize << t;
            for i in 0..s.len() {
                if i & tb == 0 {
                    rotate(s, i, i | tb, m);
                }
            }
        }
        Op::Controlled { c, t, ref m } => {
            let (cb, tb) = (1usize << c, 1usize << t);
            for i in 0..s.len() {
                if i & tb == 0 && i & cb != 0 {
                    rotate(s, i, i | tb, m);
                }
            }
        }
        Op::ControlProjected { c, t, ref m } => {
            let (cb, tb) = (1usize << c, 1usize << t);
            for i in 0..s.len() {
                if i & tb == 0 {
                    if i & cb != 0 {
                        rotate(s, i, i | tb, m);
                    } else {
                        s[i] = ZERO;
                        s[i | tb] = ZERO;
                    }
                }
            }
        }
    }
}

/// `ρ -> A ρ B†` on an `m`-qubit density vector, with `row = A`, `col = B`.
pub(crate) fn apply_rho(rho: &mut [C64], m: usize, row: &Op, col: &Op) {
    apply(rho, row);
    apply(rho, &col.map(mat2_conj).shifted(m));
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Spread the bits of `x` over the positions not in `removed` (ascending).
fn insert_zero_bits(mut x: usize, removed: &[usize]) -> usize {
    for &p in removed {
        let low = x & ((1usize << p) - 1);
        x = ((x >> p) << (p + 1)) | low;
    }
    x
}

fn spread(s: usize, removed: &[usize]) -> usize {
    removed
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &p)| acc | (((s >> k) & 1) << p))
}

fn sorted(bits: &[usize]) -> Vec<usize> {
    let mut v = bits.to_vec();
    v.sort_unstable();
    v
}

/// Keep the amplitudes with every `removed` bit at 0, compacting indices.
pub(crate) fn postselect(s: &[C64], m: usize, removed: &[usize]) -> Vec<C64> {
    let r = sorted(removed);
    let keep = m - r.len();
    (0..1usize << keep).map(|i| s[insert_zero_bits(i, &r)]).collect()
}

/// Adjoint of [`postselect`]: zero-fill the eliminated bits.
pub(crate) fn postselect_adjoint(s: &[C64], m: usize, removed: &[usize]) -> Vec<C64> {
    let r = sorted(removed);
    let mut out = vec![ZERO; 1usize << m];
    for (i, &v) in s.iter().enumerate() {
        out[insert_zero_bits(i, &r)] = v;
    }
    out
}

pub(crate) fn partial_trace(rho: &[C64], m: usize, removed: &[usize]) -> Vec<C64> {
    let r = sorted(removed);
    let keep = m - r.len();
    let dk = 1usize << keep;
    let mut out = vec![ZERO; dk * dk];
    for col in 0..dk {
        let cb = insert_zero_bits(col, &r);
        for row in 0..dk {
            let rb = insert_zero_bits(row, &r);
            let mut acc = ZERO;
            for s in 0..1usize << r.len() {
                let sp = spread(s, &r);
                acc += rho[(rb | sp) + ((cb | sp) << m)];
            }
            out[row + col * dk] = acc;
        }
    }
    out
}

/// Adjoint of [`partial_trace`]: `O -> O ⊗ I` on the eliminated bits.
pub(crate) fn partial_trace_adjoint(obs: &[C64], m: usize, removed: &[usize]) -> Vec<C64> {
    let r = sorted(removed);
    let keep = m - r.len();
    let dk = 1usize << keep;
    let mut out = vec![ZERO; 1usize << (2 * m)];
    for col in 0..dk {
        let cb = insert_zero_bits(col, &r);
        for row in 0..dk {
            let rb = insert_zero_bits(row, &r);
            let v = obs[row + col * dk];
            for s in 0..1usize << r.len() {
                let sp = spread(s, &r);
                out[(rb | sp) + ((cb | sp) << m)] = v;
            }
        }
    }
    out
}

/// Append `extra` qubits in `|0⟩` as the highest bits.
pub(crate) fn extend_pure(s: &mut Vec<C64>, extra: usize) {
    s.resize(s.len() << extra, ZERO);
}

pub(crate) fn extend_rho(rho: &[C64], m: usize, extra: usize) -> Vec<C64> {
    let (d, dn) = (1usize << m, 1usize << (m + extra));
    let mut out = vec![ZERO; dn * dn];
    for c in 0..d {
        out[c * dn..c * dn + d].copy_from_slice(&rho[c * d..c * d + d]);
    }
    out
}

/// Adjoint of [`extend_rho`]: the `⟨0|·|0⟩` block on the new bits.
pub(crate) fn extend_rho_adjoint(obs: &[C64], m: usize, extra: usize) -> Vec<C64> {
    let (d, dn) = (1usize << m, 1usize << (m + extra));
    let mut out = vec![ZERO; d * d];
    for c in 0..d {
        out[c * d..c * d + d].copy_from_slice(&obs[c * dn..c * dn + d]);
    }
    out
}

/// Born probabilities of bit `t` for a pure state.
pub(crate) fn probs_pure(s: &[C64], t: usize) -> [f64; 2] {
    let mut p = [0.0; 2];
    for (i, a) in s.iter().enumerate() {
        p[(i >> t) & 1] += a.norm_sqr();
    }
    p
}

pub(crate) fn probs_rho(rho: &[C64], m: usize, t: usize) -> [f64; 2] {
    let d = 1usize << m;
    let mut p = [0.0; 2];
    for i in 0..d {
        p[(i >> t) & 1] += rho[i + i * d].re;
    }
    p
}

pub(crate) fn trace(rho: &[C64], m: usize) -> f64 {
    let d = 1usize << m;
    (0..d).map(|i| rho[i + i * d].re).sum()
}

pub(crate) fn purity(rho: &[C64]) -> f64 {
    // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ.
    rho.iter().map(|x| x.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::gates::GateKind;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn postselect_round_trip() {
        let s: Vec<C64> = (0..8).map(|i| c(i as f64)).collect();
        let p = postselect(&s, 3, &[1]);
        assert_eq!(p, vec![c(0.0), c(1.0), c(4.0), c(5.0)]);
        let back = postselect_adjoint(&p, 3, &[1]);
        assert_eq!(back, vec![c(0.0), c(1.0), c(0.0), c(0.0), c(4.0), c(5.0), c(0.0), c(0.0)]);
    }

    #[test]
    fn trace_out_product_state() {
        // |ψ⟩ = Ry(0.7)|0⟩ on qubit 0, |φ⟩ = Ry(1.9)|0⟩ on qubit 1.
        let mut s = vec![c(1.0), ZERO, ZERO, ZERO];
        apply(&mut s, &Op::Single { t: 0, m: GateKind::Ry.block(0.7) });
        apply(&mut s, &Op::Single { t: 1, m: GateKind::Ry.block(1.9) });
        let rho: Vec<C64> = (0..16).map(|k| s[k & 3] * s[k >> 2].conj()).collect();
        let red = partial_trace(&rho, 2, &[1]);
        let (a, b) = ((0.35f64).cos(), (0.35f64).sin());
        let expect = [a * a, a * b, a * b, b * b];
        for (x, e) in red.iter().zip(expect) {
            assert!((x - c(e)).norm() < 1e-15);
        }
    }

    #[test]
    fn bell_half_discarded_is_maximally_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = [c(h), ZERO, ZERO, c(h)];
        let rho: Vec<C64> = (0..16).map(|k| s[k & 3] * s[k >> 2].conj()).collect();
        let red = partial_trace(&rho, 2, &[1]);
        let p = probs_rho(&red, 1, 0);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert!((purity(&red) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn extend_and_adjoint() {
        let rho = vec![c(1.0), c(2.0), c(3.0), c(4.0)];
        let e = extend_rho(&rho, 1, 1);
        assert_eq!(e.len(), 16);
        assert_eq!((e[0], e[1], e[4], e[5]), (c(1.0), c(2.0), c(3.0), c(4.0)));
        assert_eq!(extend_rho_adjoint(&e, 1, 1), rho);
    }
}
