//! A labelled state vector: qubits are added as tensor factors and removed
//! when measured.

use rand::Rng;

use super::{Result, TeleportError};
use crate::linalg::ops::{apply_local, embed_operator, permute_subsystems};
use crate::linalg::pauli::{bell_projectors, bell_state};
use crate::linalg::{CMatrix, DensityMatrix, PureState, C64, ONE};

/// Largest register the simulator will hold.
pub const MAX_LIVE_QUBITS: usize = 16;

/// Amplitudes below this probability are treated as impossible outcomes.
const NEGLIGIBLE: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct Register {
    amps: Vec<C64>,
    /// Label of each live qubit, most significant first.
    ids: Vec<usize>,
    next: usize,
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub outcome: usize,
    pub probability: f64,
    /// Post-measurement register without the measured qubits; `None` for an
    /// impossible outcome.
    pub register: Option<Register>,
}

impl Default for Register {
    fn default() -> Self {
        Register { amps: vec![ONE], ids: Vec::new(), next: 0 }
    }
}

impl Register {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_state(state: &PureState) -> Result<Self> {
        let mut r = Register::new();
        r.add(state.amplitudes())?;
        Ok(r)
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Tensor on a new factor; returns the labels of its qubits.
    pub fn add(&mut self, state: &[C64]) -> Result<Vec<usize>> {
        let n = state.len().trailing_zeros() as usize;
        if state.len() != 1 << n {
            return Err(TeleportError::Capacity(format!("factor of length {} is not a qubit register", state.len())));
        }
        if self.ids.len() + n > MAX_LIVE_QUBITS {
            return Err(TeleportError::Capacity(format!("more than {MAX_LIVE_QUBITS} live qubits")));
        }
        self.amps = crate::linalg::matrix::kron_vec(&self.amps, state);
        let new: Vec<usize> = (self.next..self.next + n).collect();
        self.next += n;
        self.ids.extend(&new);
        Ok(new)
    }

    fn positions(&self, ids: &[usize]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|q| self.ids.iter().position(|x| x == q).ok_or(TeleportError::UnknownQubit(*q)))
            .collect()
    }

    pub fn apply(&mut self, op: &CMatrix, ids: &[usize]) -> Result<()> {
        let pos = self.positions(ids)?;
        self.amps = apply_local(&self.amps, &vec![2; self.ids.len()], op, &pos)?;
        Ok(())
    }

    /// Every outcome of measuring `ids` in the orthonormal `basis`.
    pub fn branches(&self, ids: &[usize], basis: &[Vec<C64>]) -> Result<Vec<Branch>> {
        let pos = self.positions(ids)?;
        let mut seen = pos.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != pos.len() {
            return Err(TeleportError::SameQubit);
        }
        let n = self.ids.len();
        let mut order = pos.clone();
        order.extend((0..n).filter(|p| !pos.contains(p)));
        let (amps, _) = permute_subsystems(&self.amps, &vec![2; n], &order)?;
        let rest_ids: Vec<usize> = order[ids.len()..].iter().map(|&p| self.ids[p]).collect();
        let rest = 1usize << rest_ids.len();
        Ok(basis
            .iter()
            .enumerate()
            .map(|(outcome, v)| {
                let mut w = vec![C64::new(0.0, 0.0); rest];
                for (i, vi) in v.iter().enumerate() {
                    let c = vi.conj();
                    if c.norm_sqr() == 0.0 {
                        continue;
                    }
                    for (j, wj) in w.iter_mut().enumerate() {
                        *wj += c * amps[i * rest + j];
                    }
                }
                let probability: f64 = w.iter().map(|a| a.norm_sqr()).sum();
                let register = (probability > NEGLIGIBLE).then(|| {
                    let s = 1.0 / probability.sqrt();
                    Register { amps: w.iter().map(|a| a * s).collect(), ids: rest_ids.clone(), next: self.next }
                });
                Branch { outcome, probability, register }
            })
            .collect())
    }

    /// Sample one outcome, collapsing and dropping the measured qubits.
    pub fn measure<R: Rng + ?Sized>(&mut self, ids: &[usize], basis: &[Vec<C64>], rng: &mut R) -> Result<usize> {
        let branches = self.branches(ids, basis)?;
        let mut u: f64 = rng.random::<f64>() * branches.iter().map(|b| b.probability).sum::<f64>();
        let last = branches.iter().rposition(|b| b.register.is_some()).expect("some outcome is possible");
        let pick = branches
            .iter()
            .position(|b| {
                if b.register.is_none() {
                    return false;
                }
                u -= b.probability;
                u < 0.0
            })
            .unwrap_or(last);
        let b = branches.into_iter().nth(pick).expect("index in range");
        *self = b.register.expect("possible outcome");
        Ok(b.outcome)
    }

    /// The state of exactly the live qubits, in the order of `ids`.
    pub fn state(&self, ids: &[usize]) -> Result<PureState> {
        if ids.len() != self.ids.len() {
            return Err(TeleportError::Capacity(format!("asked for {} of {} live qubits", ids.len(), self.ids.len())));
        }
        let order = self.positions(ids)?;
        let (amps, dims) = permute_subsystems(&self.amps, &vec![2; ids.len()], &order)?;
        Ok(PureState::new(amps, dims)?)
    }
}

/// Bell basis, code `2x + z` for `(X^x Z^z ⊗ I)|φ⟩`.
pub fn bell_basis_vectors() -> Vec<Vec<C64>> {
    (0..4).map(|k| bell_state(k & 2 != 0, k & 1 != 0)).collect()
}

pub fn computational_basis(qubits: usize) -> Vec<Vec<C64>> {
    (0..1usize << qubits)
        .map(|k| {
            let mut v = vec![C64::new(0.0, 0.0); 1 << qubits];
            v[k] = ONE;
            v
        })
        .collect()
}

/// Bell-measure qubits `a` and `b` of `state`; the collapsed state keeps the
/// other qubits in their original order.
pub fn bell_measure<R: Rng + ?Sized>(state: &PureState, a: usize, b: usize, rng: &mut R) -> Result<(u8, PureState)> {
    if a == b {
        return Err(TeleportError::SameQubit);
    }
    let mut reg = Register::from_state(state)?;
    let o = reg.measure(&[a, b], &bell_basis_vectors(), rng)?;
    let rest: Vec<usize> = reg.ids().to_vec();
    Ok((o as u8, reg.state(&rest)?))
}

/// Outcome probabilities of a Bell measurement on a mixed state.
pub fn bell_probabilities(rho: &DensityMatrix, a: usize, b: usize) -> Result<[f64; 4]> {
    if a == b {
        return Err(TeleportError::SameQubit);
    }
    let mut out = [0.0; 4];
    for (o, p) in bell_projectors().iter().enumerate() {
        let big = embed_operator(p, rho.dims(), &[a, b])?;
        out[o] = rho.expectation(&big).re;
    }
    Ok(out)
}
