//! Pauli words, their coefficients, and the fixed gate set.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::matrix::{CMatrix, C64, I_UNIT, ONE, ZERO};
use super::states::{DensityMatrix, LinalgError, PureState, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::I => CMatrix::identity(2),
            Pauli::X => pauli_x(),
            Pauli::Y => pauli_y(),
            Pauli::Z => pauli_z(),
        }
    }

    /// (x bit, z bit) in the `X^x Z^z` picture, ignoring phase.
    pub fn xz_bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliWord(pub Vec<Pauli>);

impl PauliWord {
    pub fn identity(n: usize) -> Self {
        PauliWord(vec![Pauli::I; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn matrix(&self) -> CMatrix {
        let mut acc = CMatrix::identity(1);
        for p in &self.0 {
            acc = acc.kron(&p.matrix());
        }
        acc
    }

    /// Bit masks (qubit 0 is the most significant bit).
    fn masks(&self) -> (usize, usize, usize) {
        let n = self.0.len();
        let (mut xm, mut zm, mut ny) = (0usize, 0usize, 0usize);
        for (k, p) in self.0.iter().enumerate() {
            let bit = 1usize << (n - 1 - k);
            let (x, z) = p.xz_bits();
            if x {
                xm |= bit;
            }
            if z {
                zm |= bit;
            }
            if *p == Pauli::Y {
                ny += 1;
            }
        }
        (xm, zm, ny)
    }

    /// `P|j⟩ = phase(j)·|j ⊕ xmask⟩`; returns `(xmask, phase function data)`.
    fn action(&self) -> (usize, usize, C64) {
        // Y = i·X·Z, so P = i^{#Y} · X^x Z^z and Z^z|j⟩ = (−1)^{popcount(j∧z)}|j⟩.
        let (xm, zm, ny) = self.masks();
        let global = I_UNIT.powu(ny as u32);
        (xm, zm, global)
    }

    /// Apply to a qubit state vector in O(dim).
    pub fn apply(&self, amps: &[C64]) -> Vec<C64> {
        let (xm, zm, global) = self.action();
        let mut out = vec![ZERO; amps.len()];
        for (j, a) in amps.iter().enumerate() {
            let sign = if (j & zm).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            out[j ^ xm] = global * a * sign;
        }
        out
    }

    /// `Tr(P·M)` in O(dim).
    pub fn trace_with(&self, m: &CMatrix) -> C64 {
        let (xm, zm, global) = self.action();
        let mut s = ZERO;
        for j in 0..m.rows() {
            let sign = if (j & zm).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            // P_{j⊕x, j} = global·sign(j); Tr(PM) = Σ_j P_{j⊕x,j} M_{j,j⊕x}
            s += global * sign * m[(j, j ^ xm)];
        }
        s
    }

    /// `⟨ψ|P|ψ⟩` in O(dim).
    pub fn expectation(&self, amps: &[C64]) -> C64 {
        let (xm, zm, global) = self.action();
        let mut s = ZERO;
        for (j, a) in amps.iter().enumerate() {
            let sign = if (j & zm).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            s += amps[j ^ xm].conj() * a * sign;
        }
        global * s
    }

    /// Do the two words commute?
    pub fn commutes_with(&self, other: &PauliWord) -> bool {
        let anti = self
            .0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| **a != Pauli::I && **b != Pauli::I && a != b)
            .count();
        anti % 2 == 0
    }

    /// Product `self · other` as (phase, word).
    pub fn mul(&self, other: &PauliWord) -> (C64, PauliWord) {
        let mut phase = ONE;
        let mut word = Vec::with_capacity(self.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            let (ph, p) = single_product(*a, *b);
            phase *= ph;
            word.push(p);
        }
        (phase, PauliWord(word))
    }

    /// Words over {I, X, Z} only.
    pub fn is_xz(&self) -> bool {
        self.0.iter().all(|&p| p != Pauli::Y)
    }

    /// All words over `{I,X,Z}` of length `n`, index `k` read in base 3
    /// (digit 0 = I, 1 = X, 2 = Z), most significant digit first.
    pub fn xz_word(n: usize, mut k: usize) -> PauliWord {
        let mut w = vec![Pauli::I; n];
        for slot in w.iter_mut().rev() {
            *slot = match k % 3 {
                0 => Pauli::I,
                1 => Pauli::X,
                _ => Pauli::Z,
            };
            k /= 3;
        }
        PauliWord(w)
    }
}

fn single_product(a: Pauli, b: Pauli) -> (C64, Pauli) {
    use Pauli::*;
    match (a, b) {
        (I, p) | (p, I) => (ONE, p),
        (X, X) | (Y, Y) | (Z, Z) => (ONE, I),
        (X, Y) => (I_UNIT, Z),
        (Y, X) => (-I_UNIT, Z),
        (Y, Z) => (I_UNIT, X),
        (Z, Y) => (-I_UNIT, X),
        (Z, X) => (I_UNIT, Y),
        (X, Z) => (-I_UNIT, Y),
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliWord {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.chars()
            .filter(|ch| !ch.is_whitespace() && *ch != '⊗')
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(format!("invalid Pauli letter '{other}'")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(PauliWord)
    }
}

/// `Tr(P·ρ)`, real for Hermitian ρ.
pub fn pauli_coefficient(rho: &DensityMatrix, word: &PauliWord) -> Result<f64> {
    let n = rho.num_qubits()?;
    if word.len() != n {
        return Err(LinalgError::DimMismatch(word.len(), n));
    }
    Ok(word.trace_with(rho.matrix()).re)
}

/// `⟨ψ|P|ψ⟩` for a pure qubit state.
pub fn pauli_expectation(psi: &PureState, word: &PauliWord) -> Result<f64> {
    let n = psi.num_qubits()?;
    if word.len() != n {
        return Err(LinalgError::DimMismatch(word.len(), n));
    }
    Ok(word.expectation(psi.amplitudes()).re)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_rows(&[vec![ZERO, -I_UNIT], vec![I_UNIT, ZERO]])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn hadamard() -> CMatrix {
    let h = FRAC_1_SQRT_2;
    CMatrix::from_real(2, 2, &[h, h, h, -h])
}

/// `exp(−iπ/8 σ_y)`: a real rotation by π/8, with `G⁸ = −I`.
pub fn g_gate() -> CMatrix {
    let (s, co) = (PI / 8.0).sin_cos();
    CMatrix::from_real(2, 2, &[co, -s, s, co])
}

/// Control is the first qubit, target the second.
pub fn cnot() -> CMatrix {
    CMatrix::from_real(
        4,
        4,
        &[
            1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.,
        ],
    )
}

pub fn phase_gate() -> CMatrix {
    CMatrix::diag(&[ONE, I_UNIT])
}

/// Real reflection `cos 2θ·σ_z + sin 2θ·σ_x`.
pub fn real_reflection(theta: f64) -> CMatrix {
    let (s, co) = (2.0 * theta).sin_cos();
    CMatrix::from_real(2, 2, &[co, s, s, -co])
}

pub fn rotation_y(angle: f64) -> CMatrix {
    let (s, co) = (angle / 2.0).sin_cos();
    CMatrix::from_real(2, 2, &[co, -s, s, co])
}

pub fn swap() -> CMatrix {
    CMatrix::from_real(
        4,
        4,
        &[
            1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.,
        ],
    )
}

/// The four Bell states `(P ⊗ I)|φ⟩` for `P ∈ {I, X, Z, XZ}` indexed by
/// `(x, z)` as `2x + z`; measuring outcome `(x, z)` means the pair was
/// `(X^x Z^z ⊗ I)|φ⟩`.
pub fn bell_state(x: bool, z: bool) -> Vec<C64> {
    let phi = PureState::epr();
    let mut v = phi.amplitudes().to_vec();
    if z {
        v = crate::linalg::ops::apply_local(&v, &[2, 2], &pauli_z(), &[0]).expect("2-qubit");
    }
    if x {
        v = crate::linalg::ops::apply_local(&v, &[2, 2], &pauli_x(), &[0]).expect("2-qubit");
    }
    v
}

pub fn bell_projectors() -> Vec<CMatrix> {
    (0..4)
        .map(|k| {
            let v = bell_state(k & 2 != 0, k & 1 != 0);
            CMatrix::outer(&v, &v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::c;

    #[test]
    fn epr_pauli_coefficients() {
        let rho = PureState::epr().density();
        let xx: PauliWord = "XX".parse().unwrap();
        let xz: PauliWord = "XZ".parse().unwrap();
        let yy: PauliWord = "YY".parse().unwrap();
        assert!((pauli_coefficient(&rho, &xx).unwrap() - 1.0).abs() < 1e-14);
        assert!(pauli_coefficient(&rho, &xz).unwrap().abs() < 1e-14);
        assert!((pauli_coefficient(&rho, &yy).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn fast_trace_matches_dense() {
        let rho = PureState::normalized(
            (0..8).map(|i| c(i as f64, (i * i) as f64 * 0.1)).collect(),
            vec![2, 2, 2],
        )
        .unwrap()
        .density();
        for k in 0..64 {
            let w = PauliWord(
                (0..3)
                    .map(|q| match (k >> (2 * q)) & 3 {
                        0 => Pauli::I,
                        1 => Pauli::X,
                        2 => Pauli::Y,
                        _ => Pauli::Z,
                    })
                    .collect(),
            );
            let dense = w.matrix().matmul(rho.matrix()).trace();
            assert!((w.trace_with(rho.matrix()) - dense).norm() < 1e-13, "{w}");
            let applied = w.apply(&rho.matrix().column(0));
            let dense_applied = w.matrix().apply(&rho.matrix().column(0));
            for (a, b) in applied.iter().zip(&dense_applied) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn word_products_and_commutation() {
        let xx: PauliWord = "XX".parse().unwrap();
        let zz: PauliWord = "ZZ".parse().unwrap();
        assert!(xx.commutes_with(&zz));
        let (ph, w) = xx.mul(&zz);
        assert_eq!(w.to_string(), "YY");
        let dense = xx.matrix().matmul(&zz.matrix());
        assert!(dense.approx_eq(&w.matrix().scale(ph), 1e-14));
        let xi: PauliWord = "XI".parse().unwrap();
        assert!(!xi.commutes_with(&zz));
    }

    #[test]
    fn g_gate_properties() {
        let g = g_gate();
        let mut p = CMatrix::identity(2);
        for _ in 0..8 {
            p = p.matmul(&g);
        }
        assert!(p.approx_eq(&CMatrix::identity(2).scale_real(-1.0), 1e-12));
        let xg = pauli_x().matmul(&g);
        let gdx = g.adjoint().matmul(&pauli_x());
        assert!(xg.approx_eq(&gdx, 1e-12));
        let hgh = hadamard().matmul(&g).matmul(&hadamard());
        assert!(hgh.approx_eq(&g.adjoint(), 1e-12));
    }

    #[test]
    fn bell_projectors_are_complete() {
        let sum = bell_projectors()
            .into_iter()
            .fold(CMatrix::zeros(4, 4), |a, b| &a + &b);
        assert!(sum.approx_eq(&CMatrix::identity(4), 1e-14));
    }

    #[test]
    fn xz_word_enumeration() {
        assert_eq!(PauliWord::xz_word(2, 0).to_string(), "II");
        assert_eq!(PauliWord::xz_word(2, 5).to_string(), "XZ");
        assert_eq!(PauliWord::xz_word(2, 8).to_string(), "ZZ");
    }
}
