//! Expectation values against per-qubit operator families, chiefly
//! `{I, σ_x, σ_z}^{⊗n}`, computed by contracting one qubit at a time.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::{Result, XzError};
use crate::linalg::ops::trace_distance_matrix;
use crate::linalg::pauli::{pauli_x, pauli_z};
use crate::linalg::{CMatrix, DensityMatrix, Pauli, PauliWord, PureState, C64, ZERO};

pub const MAX_XZ_QUBITS: usize = 11;

/// `Tr(Pρ)` for every `P ∈ {I,X,Z}^{⊗n}`, indexed as in
/// [`PauliWord::xz_word`] (base 3, digit 0 = I, 1 = X, 2 = Z, qubit 0 most
/// significant).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XZCoefficientVector {
    pub n: usize,
    pub entries: Vec<f64>,
}

impl XZCoefficientVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(word: &PauliWord) -> Option<usize> {
        word.0.iter().try_fold(0usize, |acc, p| {
            let digit = match p {
                Pauli::I => 0,
                Pauli::X => 1,
                Pauli::Z => 2,
                Pauli::Y => return None,
            };
            Some(3 * acc + digit)
        })
    }

    /// `None` for words containing σ_y or of the wrong length.
    pub fn get(&self, word: &PauliWord) -> Option<f64> {
        if word.len() != self.n {
            return None;
        }
        Self::index_of(word).map(|k| self.entries[k])
    }

    pub fn max_deviation(&self, other: &XZCoefficientVector) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Nonzero entries keyed by word, for reports.
    pub fn nonzero_map(&self, tol: f64) -> BTreeMap<String, f64> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > tol)
            .map(|(k, v)| (PauliWord::xz_word(self.n, k).to_string(), *v))
            .collect()
    }
}

/// Spread the bits of `r` to even positions.
fn spread(r: usize) -> usize {
    let mut out = 0;
    let mut k = 0;
    let mut v = r;
    while v != 0 {
        out |= (v & 1) << (2 * k);
        v >>= 1;
        k += 1;
    }
    out
}

/// Contract `pairs` (entry `ρ[r][c]` at the interleaved index of `(r, c)`)
/// against `family` on every qubit: output digit `d` of a qubit is
/// `Σ F_d[c][r]·ρ[r][c]`.
fn contract(mut cur: Vec<C64>, n: usize, family: &[CMatrix]) -> Vec<C64> {
    let f = family.len();
    let weights: Vec<[C64; 4]> = family
        .iter()
        .map(|m| [m[(0, 0)], m[(1, 0)], m[(0, 1)], m[(1, 1)]])
        .collect();
    let mut outer = 1usize;
    for k in 0..n {
        let inner = 1usize << (2 * (n - k - 1));
        let mut next = vec![ZERO; outer * f * inner];
        for o in 0..outer {
            for (d, w) in weights.iter().enumerate() {
                let dst = &mut next[(o * f + d) * inner..(o * f + d + 1) * inner];
                for (rc, wt) in w.iter().enumerate() {
                    if *wt == ZERO {
                        continue;
                    }
                    let src = &cur[(o * 4 + rc) * inner..(o * 4 + rc + 1) * inner];
                    for (t, s) in dst.iter_mut().zip(src) {
                        *t += wt * s;
                    }
                }
            }
        }
        cur = next;
        outer *= f;
    }
    cur
}

fn check_qubits(n: usize) -> Result<()> {
    if n > MAX_XZ_QUBITS {
        return Err(XzError::Capacity(format!(
            "{n} qubits exceeds the {MAX_XZ_QUBITS}-qubit limit"
        )));
    }
    Ok(())
}

fn density_pairs(m: &CMatrix) -> Vec<C64> {
    let dim = m.rows();
    let mut pairs = vec![ZERO; dim * dim];
    for r in 0..dim {
        let sr = spread(r) << 1;
        for c in 0..dim {
            pairs[sr | spread(c)] = m[(r, c)];
        }
    }
    pairs
}

fn pure_pairs(amps: &[C64]) -> Vec<C64> {
    let dim = amps.len();
    let spreads: Vec<usize> = (0..dim).map(spread).collect();
    let mut pairs = vec![ZERO; dim * dim];
    for (r, a) in amps.iter().enumerate() {
        if *a == ZERO {
            continue;
        }
        let sr = spreads[r] << 1;
        for (c, b) in amps.iter().enumerate() {
            pairs[sr | spreads[c]] = a * b.conj();
        }
    }
    pairs
}

/// Expectations of every word over a per-qubit family of 2×2 operators.
pub fn family_coefficients(rho: &DensityMatrix, family: &[CMatrix]) -> Result<Vec<C64>> {
    let n = rho.num_qubits()?;
    check_qubits(n)?;
    Ok(contract(density_pairs(rho.matrix()), n, family))
}

fn xz_family() -> [CMatrix; 3] {
    [CMatrix::identity(2), pauli_x(), pauli_z()]
}

/// `{I, (σ_z + σ_x)/√2, (σ_z − σ_x)/√2}`: the axes Alice's ideal CHSH
/// measurements use.
pub fn rotated_family() -> [CMatrix; 3] {
    let x = pauli_x();
    let z = pauli_z();
    [
        CMatrix::identity(2),
        (&z + &x).scale_real(FRAC_1_SQRT_2),
        (&z - &x).scale_real(FRAC_1_SQRT_2),
    ]
}

pub fn xz_coefficients(rho: &DensityMatrix) -> Result<XZCoefficientVector> {
    let n = rho.num_qubits()?;
    let entries = family_coefficients(rho, &xz_family())?
        .into_iter()
        .map(|z| z.re)
        .collect();
    Ok(XZCoefficientVector { n, entries })
}

pub fn xz_coefficients_pure(psi: &PureState) -> Result<XZCoefficientVector> {
    let n = psi.num_qubits()?;
    check_qubits(n)?;
    let entries = contract(pure_pairs(psi.amplitudes()), n, &xz_family())
        .into_iter()
        .map(|z| z.re)
        .collect();
    Ok(XZCoefficientVector { n, entries })
}

/// Apply the same 3×3 real map to every base-3 digit.
fn recombine(coeffs: &[f64], n: usize, map: &[[f64; 3]; 3]) -> Vec<f64> {
    let mut cur = coeffs.to_vec();
    for k in 0..n {
        let stride = 3usize.pow((n - 1 - k) as u32);
        let mut next = vec![0.0; cur.len()];
        for (idx, slot) in next.iter_mut().enumerate() {
            let digit = (idx / stride) % 3;
            let base = idx - digit * stride;
            *slot = (0..3).map(|e| map[digit][e] * cur[base + e * stride]).sum();
        }
        cur = next;
    }
    cur
}

/// `{I,X,Z}` coefficients as fixed linear combinations of the
/// [`rotated_family`] coefficients; determination by one family therefore
/// transfers to the other.
pub fn xz_from_rotated(rotated: &[f64], n: usize) -> XZCoefficientVector {
    let h = FRAC_1_SQRT_2;
    let map = [[1.0, 0.0, 0.0], [0.0, h, -h], [0.0, h, h]];
    XZCoefficientVector {
        n,
        entries: recombine(rotated, n, &map),
    }
}

/// Trace distance between `ρ` and its entry-wise conjugate. Both have the
/// same `{I,X,Z}` coefficients, so a positive value rules out
/// XZ-determination.
pub fn conjugation_obstruction(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    trace_distance_matrix(m, &m.conj())
}

/// Pure-state form: `√(1 − |⟨ψ̄|ψ⟩|²)`.
pub fn conjugation_obstruction_pure(psi: &PureState) -> f64 {
    let overlap: C64 = psi.amplitudes().iter().map(|a| a * a).sum();
    (1.0 - overlap.norm_sqr()).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli::pauli_y;

    fn word(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    #[test]
    fn epr_coefficients() {
        let c = xz_coefficients_pure(&PureState::epr()).unwrap();
        for (w, v) in [
            ("II", 1.0),
            ("XX", 1.0),
            ("ZZ", 1.0),
            ("XZ", 0.0),
            ("ZX", 0.0),
            ("XI", 0.0),
            ("IZ", 0.0),
        ] {
            assert!((c.get(&word(w)).unwrap() - v).abs() < 1e-15, "{w}");
        }
        assert!(c.get(&word("YY")).is_none());
    }

    #[test]
    fn pure_and_density_routes_agree() {
        let psi = crate::linalg::pauli::bell_state(true, false);
        let p = PureState::new(psi, vec![2, 2]).unwrap();
        let a = xz_coefficients_pure(&p).unwrap();
        let b = xz_coefficients(&p.density()).unwrap();
        assert!(a.max_deviation(&b) < 1e-15);
    }

    #[test]
    fn y_eigenstate_is_obstructed() {
        let rho = (&CMatrix::identity(2) + &pauli_y()).scale_real(0.5);
        let d = DensityMatrix::new(rho, vec![2]).unwrap();
        assert!((conjugation_obstruction(&d) - 1.0).abs() < 1e-12);
        let c = xz_coefficients(&d).unwrap();
        assert_eq!(c.entries, vec![1.0, 0.0, 0.0]);
        assert!(conjugation_obstruction_pure(&PureState::epr()) < 1e-15);
    }
}
