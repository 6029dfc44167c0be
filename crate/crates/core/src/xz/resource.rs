//! The 11-qubit resource states and their Pauli-twirled orthonormal basis.
//!
//! Qubit layout: 0 is the `|0⟩` wire; 1–2 the H gadget `(I⊗H)|φ⟩`; 3–4 the
//! G gadget `(I⊗G)|φ⟩`; 5–8 the CNOT gadget `CNOT_{6,8}(|φ⟩_{56}|φ⟩_{78})`;
//! 9–10 the extra identity-gadget pair. A basis element applies `P⁽⁰⁾` to
//! wire 0, `P⁽¹⁾` to qubit 9, `P⁽²⁾`, `P⁽³⁾` to qubits 1 and 3, and
//! `P⁽⁴⁾`, `P⁽⁵⁾` to qubits 5 and 7. Pauli codes are `2x + z` for `X^x Z^z`,
//! so code 3 is `XZ ∝ σ_y`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stabilizer::StabilizerSpec;
use super::Result;
use crate::linalg::matrix::kron_vec;
use crate::linalg::ops::apply_local;
use crate::linalg::pauli::{cnot, g_gate, hadamard, pauli_x, pauli_z};
use crate::linalg::{CMatrix, Pauli, PureState, C64, ONE, ZERO};

pub const RESOURCE_QUBITS: usize = 11;
pub const RESOURCE_BASIS_SIZE: usize = 1 << RESOURCE_QUBITS;

/// Qubit of each twirling Pauli `P⁽⁰⁾…P⁽⁵⁾`.
const TWIRL_QUBITS: [usize; 6] = [0, 9, 1, 3, 5, 7];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResourceBasisElement {
    pub index: usize,
    /// Codes of `P⁽⁰⁾…P⁽⁵⁾`; `P⁽⁰⁾ ∈ {0, 2}`.
    pub paulis: [u8; 6],
    pub state: PureState,
}

/// Index bits: `P⁽⁰⁾`'s x bit, then two bits for each of `P⁽¹⁾…P⁽⁵⁾`.
pub fn resource_paulis(index: usize) -> [u8; 6] {
    assert!(index < RESOURCE_BASIS_SIZE, "resource index out of range");
    let mut p = [0u8; 6];
    p[0] = 2 * ((index >> 10) & 1) as u8;
    for (j, slot) in p.iter_mut().enumerate().skip(1) {
        *slot = ((index >> (2 * (5 - j))) & 3) as u8;
    }
    p
}

fn code_matrix(code: u8) -> CMatrix {
    let mut m = CMatrix::identity(2);
    if code & 1 != 0 {
        m = pauli_z();
    }
    if code & 2 != 0 {
        m = pauli_x().matmul(&m);
    }
    m
}

fn epr() -> Vec<C64> {
    PureState::epr().amplitudes().to_vec()
}

/// `(P ⊗ U)|φ⟩`.
fn gadget_pair(code: u8, u: &CMatrix) -> Vec<C64> {
    let v = apply_local(&epr(), &[2, 2], &code_matrix(code), &[0]).expect("two qubits");
    apply_local(&v, &[2, 2], u, &[1]).expect("two qubits")
}

fn cnot_gadget(p4: u8, p5: u8) -> Vec<C64> {
    let dims = [2, 2, 2, 2];
    let mut v = kron_vec(&epr(), &epr());
    v = apply_local(&v, &dims, &cnot(), &[1, 3]).expect("four qubits");
    v = apply_local(&v, &dims, &code_matrix(p4), &[0]).expect("four qubits");
    apply_local(&v, &dims, &code_matrix(p5), &[2]).expect("four qubits")
}

/// The five tensor factors of a basis element, in qubit order: wire 0, the
/// H, G and CNOT gadgets, and the extra pair.
pub fn resource_factors(index: usize) -> Vec<Vec<C64>> {
    let p = resource_paulis(index);
    let wire0 = if p[0] == 0 {
        vec![ONE, ZERO]
    } else {
        vec![ZERO, ONE]
    };
    vec![
        wire0,
        gadget_pair(p[2], &hadamard()),
        gadget_pair(p[3], &g_gate()),
        cnot_gadget(p[4], p[5]),
        gadget_pair(p[1], &CMatrix::identity(2)),
    ]
}

/// Basis element built directly as a tensor product of its gadgets.
pub fn resource_element(index: usize) -> Result<ResourceBasisElement> {
    let parts = resource_factors(index);
    let amps = parts[1..]
        .iter()
        .fold(parts[0].clone(), |acc, v| kron_vec(&acc, v));
    Ok(ResourceBasisElement {
        index,
        paulis: resource_paulis(index),
        state: PureState::new(amps, vec![2; RESOURCE_QUBITS])?,
    })
}

/// `|0⟩ ⊗ (I⊗H)|φ⟩ ⊗ (I⊗G)|φ⟩ ⊗ CNOT(|φ⟩|φ⟩) ⊗ |φ⟩`.
pub fn plain_resource_state() -> PureState {
    resource_element(0).expect("index 0").state
}

pub fn resource_basis() -> Result<Vec<ResourceBasisElement>> {
    (0..RESOURCE_BASIS_SIZE)
        .into_par_iter()
        .map(resource_element)
        .collect()
}

fn code_paulis(code: u8) -> impl Iterator<Item = Pauli> {
    // X^x Z^z acts by conjugation as Z then X; the order only moves a phase.
    [(code & 1 != 0, Pauli::Z), (code & 2 != 0, Pauli::X)]
        .into_iter()
        .filter(|(on, _)| *on)
        .map(|(_, p)| p)
}

/// The same element as a Clifford-prepared stabilizer state followed by the
/// real local rotation `G` on qubit 4. Returns generators and per-qubit
/// rotations.
pub fn resource_stabilizer(index: usize) -> (StabilizerSpec, Vec<CMatrix>) {
    let p = resource_paulis(index);
    let mut s = StabilizerSpec::zero_state(RESOURCE_QUBITS);
    for (a, b) in [(1, 2), (3, 4), (5, 6), (7, 8), (9, 10)] {
        s.apply_h(a);
        s.apply_cnot(a, b);
    }
    s.apply_h(2);
    s.apply_cnot(6, 8);
    for (code, &q) in p.iter().zip(&TWIRL_QUBITS) {
        for pauli in code_paulis(*code) {
            s.apply_pauli(q, pauli);
        }
    }
    let mut rotations = vec![CMatrix::identity(2); RESOURCE_QUBITS];
    rotations[4] = g_gate();
    (s, rotations)
}

/// Compose `G` onto every qubit after the existing rotations.
pub fn transversal_g(rotations: &[CMatrix]) -> Vec<CMatrix> {
    let g = g_gate();
    rotations.iter().map(|u| g.matmul(u)).collect()
}

fn sparse(state: &PureState) -> Vec<(usize, C64)> {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != ZERO)
        .map(|(k, a)| (k, *a))
        .collect()
}

fn sparse_inner(a: &[(usize, C64)], b: &[(usize, C64)]) -> C64 {
    let (mut i, mut j) = (0, 0);
    let mut s = ZERO;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1.conj() * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// `max_{a,b} |⟨e_a|e_b⟩ − δ_ab|` over all pairs, using the sparsity of the
/// gadget states.
pub fn resource_gram_deviation(elements: &[ResourceBasisElement]) -> f64 {
    let sp: Vec<Vec<(usize, C64)>> = elements.iter().map(|e| sparse(&e.state)).collect();
    (0..sp.len())
        .into_par_iter()
        .map(|a| {
            (a..sp.len())
                .map(|b| {
                    let target = if a == b { ONE } else { ZERO };
                    (sparse_inner(&sp[a], &sp[b]) - target).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xz::stabilizer_xz_certificate;

    #[test]
    fn index_layout() {
        assert_eq!(resource_paulis(0), [0; 6]);
        assert_eq!(resource_paulis(1 << 10), [2, 0, 0, 0, 0, 0]);
        assert_eq!(resource_paulis(0b11), [0, 0, 0, 0, 0, 3]);
        assert_eq!(resource_paulis(0b01_00_00_00_00), [0, 1, 0, 0, 0, 0]);
    }

    #[test]
    fn both_routes_agree_on_samples() {
        for index in [0, 1, 2, 3, 777, 1024, 2047] {
            let e = resource_element(index).unwrap();
            let (spec, rot) = resource_stabilizer(index);
            let c = stabilizer_xz_certificate(&spec, &rot).unwrap();
            assert!(c.certified, "{index}");
            assert!(
                c.witness.unwrap().stabilizer_residual(&e.state).unwrap() < 1e-12,
                "{index}"
            );
        }
    }
}
