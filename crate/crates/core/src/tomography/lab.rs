//! The shared physics both devices act on: a row of EPR pairs, tracked as
//! independent groups of entangled qubits.
//!
//! Devices only ever measure their own qubits in a complete orthonormal
//! basis, and a measured qubit is consumed. Measuring untouched EPR halves
//! uses the transpose trick (`⟨f|_B |φ⟩^{⊗k} = 2^{−k/2} |f̄⟩_A`), so an
//! 11-qubit block never needs a 22-qubit vector.

use rand::Rng;

use super::{Result, TomographyError};
use crate::linalg::matrix::kron_vec;
use crate::linalg::ops::{permute_subsystems, reduced_state};
use crate::linalg::{CMatrix, DensityMatrix, PureState, C64, ZERO};
use crate::rng::{rng_from_seed, DetRng};

/// Largest group the generic measurement path will merge.
pub const MAX_GROUP_QUBITS: usize = 16;

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
pub enum Side {
    Alice,
    Bob,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Alice => Side::Bob,
            Side::Bob => Side::Alice,
        }
    }
}

type Qubit = (Side, usize);

#[derive(Clone, Debug)]
struct Group {
    qubits: Vec<Qubit>,
    amps: Vec<C64>,
    /// Still exactly `|φ⟩` on `(A_i, B_i)`.
    fresh: bool,
}

/// Complete orthonormal basis of `qubits` qubits; outcome `o` is vector `o`.
#[derive(Clone, Debug)]
pub struct MeasurementBasis {
    qubits: usize,
    vectors: Vec<Vec<C64>>,
}

impl MeasurementBasis {
    pub fn new(vectors: Vec<Vec<C64>>) -> Result<Self> {
        let dim = vectors.len();
        if dim < 2 || !dim.is_power_of_two() || vectors.iter().any(|v| v.len() != dim) {
            return Err(TomographyError::BadBasis(format!(
                "{dim} vectors do not span a qubit register"
            )));
        }
        let sparse: Vec<Vec<(usize, C64)>> = vectors
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .filter(|(_, a)| **a != ZERO)
                    .map(|(k, a)| (k, *a))
                    .collect()
            })
            .collect();
        for a in 0..dim {
            for b in a..dim {
                let mut s = ZERO;
                let (mut i, mut j) = (0, 0);
                while i < sparse[a].len() && j < sparse[b].len() {
                    match sparse[a][i].0.cmp(&sparse[b][j].0) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            s += sparse[a][i].1.conj() * sparse[b][j].1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
                let target = if a == b { 1.0 } else { 0.0 };
                if (s - target).norm() > 1e-9 {
                    return Err(TomographyError::BadBasis(format!(
                        "vectors {a} and {b} overlap {s}"
                    )));
                }
            }
        }
        Ok(MeasurementBasis {
            qubits: dim.trailing_zeros() as usize,
            vectors,
        })
    }

    /// Eigenbasis of a 2×2 reflection, `+1` eigenvector first.
    pub fn of_reflection(r: &CMatrix) -> Result<Self> {
        let e = crate::linalg::hermitian_eigen(r);
        Self::new(vec![e.vector(1), e.vector(0)])
    }

    pub fn computational(qubits: usize) -> Self {
        let dim = 1 << qubits;
        let vectors = (0..dim)
            .map(|k| {
                let mut v = vec![ZERO; dim];
                v[k] = crate::linalg::ONE;
                v
            })
            .collect();
        MeasurementBasis { qubits, vectors }
    }

    /// The basis `{U† e_o}`: rotate the register by `U`, then measure `self`.
    pub fn rotated(&self, u: &CMatrix) -> Result<Self> {
        let ud = u.adjoint();
        Self::new(self.vectors.iter().map(|v| ud.apply(v)).collect())
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, o: usize) -> &[C64] {
        &self.vectors[o]
    }
}

/// Reduced state of some qubits, kept pure when possible.
#[derive(Clone, Debug)]
pub enum BlockState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl BlockState {
    pub fn density(&self) -> DensityMatrix {
        match self {
            BlockState::Pure(p) => p.density(),
            BlockState::Mixed(d) => d.clone(),
        }
    }

    /// Trace distance to a pure target.
    pub fn distance_to(&self, target: &PureState) -> Result<f64> {
        match self {
            BlockState::Pure(p) => Ok(p.trace_distance(target)?),
            BlockState::Mixed(d) => Ok(crate::linalg::ops::trace_distance(d, &target.density())?),
        }
    }
}

pub struct Lab {
    pairs: usize,
    /// Group of each live qubit, per side; `None` once measured.
    owner: [Vec<Option<usize>>; 2],
    groups: Vec<Option<Group>>,
    rng: DetRng,
}

fn side_index(s: Side) -> usize {
    match s {
        Side::Alice => 0,
        Side::Bob => 1,
    }
}

impl Lab {
    /// `pairs` fresh EPR pairs `(A_i, B_i)`.
    pub fn new(pairs: usize, seed: u64) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)];
        let groups = (0..pairs)
            .map(|i| {
                Some(Group {
                    qubits: vec![(Side::Alice, i), (Side::Bob, i)],
                    amps: phi.clone(),
                    fresh: true,
                })
            })
            .collect();
        let owner = (0..pairs).map(Some).collect::<Vec<_>>();
        Lab {
            pairs,
            owner: [owner.clone(), owner],
            groups,
            rng: rng_from_seed(seed),
        }
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    fn group_of(&self, q: Qubit) -> Result<usize> {
        self.owner[side_index(q.0)]
            .get(q.1)
            .copied()
            .ok_or(TomographyError::QubitOutOfRange(q.1))?
            .ok_or(TomographyError::QubitConsumed(q.1))
    }

    fn set_owner(&mut self, q: Qubit, g: Option<usize>) {
        self.owner[side_index(q.0)][q.1] = g;
    }

    fn check_targets(
        &self,
        side: Side,
        qubits: &[usize],
        basis: &MeasurementBasis,
    ) -> Result<Vec<usize>> {
        if qubits.len() != basis.qubits() {
            return Err(TomographyError::BadBasis(format!(
                "{} qubits, basis for {}",
                qubits.len(),
                basis.qubits()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        let mut gs = Vec::with_capacity(qubits.len());
        for &q in qubits {
            if !seen.insert(q) {
                return Err(TomographyError::BadBasis(format!("qubit {q} repeated")));
            }
            gs.push(self.group_of((side, q))?);
        }
        Ok(gs)
    }

    /// Measure `side`'s `qubits` (in that order, most significant first) in
    /// `basis`; returns the outcome index and consumes the qubits.
    pub fn measure(
        &mut self,
        side: Side,
        qubits: &[usize],
        basis: &MeasurementBasis,
    ) -> Result<usize> {
        let gs = self.check_targets(side, qubits, basis)?;
        let all_fresh = gs
            .iter()
            .all(|&g| self.groups[g].as_ref().is_some_and(|gr| gr.fresh));
        if all_fresh {
            let o = self.rng.random_range(0..basis.len());
            let partners: Vec<Qubit> = qubits.iter().map(|&q| (side.other(), q)).collect();
            let amps = basis.vector(o).iter().map(|a| a.conj()).collect();
            for (&q, &g) in qubits.iter().zip(&gs) {
                self.groups[g] = None;
                self.set_owner((side, q), None);
            }
            self.push_group(Group {
                qubits: partners,
                amps,
                fresh: false,
            });
            return Ok(o);
        }
        self.measure_generic(side, qubits, gs, basis)
    }

    fn push_group(&mut self, g: Group) {
        let idx = self.groups.len();
        for &q in &g.qubits {
            self.set_owner(q, Some(idx));
        }
        self.groups.push(Some(g));
    }

    fn merge(&mut self, mut gs: Vec<usize>) -> Result<Group> {
        gs.sort_unstable();
        gs.dedup();
        let size: usize = gs
            .iter()
            .map(|&g| self.groups[g].as_ref().map_or(0, |gr| gr.qubits.len()))
            .sum();
        if size > MAX_GROUP_QUBITS {
            return Err(TomographyError::Capacity(format!(
                "{size}-qubit entangled group"
            )));
        }
        let mut out = Group {
            qubits: Vec::new(),
            amps: vec![crate::linalg::ONE],
            fresh: false,
        };
        for g in gs {
            let gr = self.groups[g].take().expect("live group");
            out.amps = kron_vec(&out.amps, &gr.amps);
            out.qubits.extend(gr.qubits);
        }
        Ok(out)
    }

    fn measure_generic(
        &mut self,
        side: Side,
        qubits: &[usize],
        gs: Vec<usize>,
        basis: &MeasurementBasis,
    ) -> Result<usize> {
        let group = self.merge(gs)?;
        let n = group.qubits.len();
        let pos: Vec<usize> = qubits
            .iter()
            .map(|&q| {
                group
                    .qubits
                    .iter()
                    .position(|&x| x == (side, q))
                    .expect("target in group")
            })
            .collect();
        let rest: Vec<usize> = (0..n).filter(|k| !pos.contains(k)).collect();
        let order: Vec<usize> = pos.iter().chain(&rest).copied().collect();
        let (amps, _) = permute_subsystems(&group.amps, &vec![2; n], &order)?;
        let rdim = 1usize << rest.len();
        let branch = |o: usize| -> Vec<C64> {
            let f = basis.vector(o);
            let mut w = vec![ZERO; rdim];
            for (t, ft) in f.iter().enumerate() {
                if *ft == ZERO {
                    continue;
                }
                let c = ft.conj();
                for (r, slot) in w.iter_mut().enumerate() {
                    *slot += c * amps[t * rdim + r];
                }
            }
            w
        };
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        let mut last_nonzero = None;
        for o in 0..basis.len() {
            let w = branch(o);
            let p: f64 = w.iter().map(|a| a.norm_sqr()).sum();
            if p > 0.0 {
                last_nonzero = Some((o, w.clone(), p));
            }
            acc += p;
            if u < acc && p > 0.0 {
                chosen = Some((o, w, p));
                break;
            }
        }
        let (o, w, p) = chosen
            .or(last_nonzero)
            .expect("some outcome has positive probability");
        for &q in qubits {
            self.set_owner((side, q), None);
        }
        if !rest.is_empty() {
            let s = 1.0 / p.sqrt();
            let qubits = rest.iter().map(|&k| group.qubits[k]).collect();
            self.push_group(Group {
                qubits,
                amps: w.into_iter().map(|a| a * s).collect(),
                fresh: false,
            });
        }
        Ok(o)
    }

    /// Reduced state of `side`'s `qubits` (in that order). Analysis only:
    /// no device or referee can call this.
    pub fn block_state(&self, side: Side, qubits: &[usize]) -> Result<BlockState> {
        let gs: Vec<usize> = qubits
            .iter()
            .map(|&q| self.group_of((side, q)))
            .collect::<Result<_>>()?;
        let mut uniq = gs.clone();
        uniq.sort_unstable();
        uniq.dedup();
        let whole = uniq.iter().all(|&g| {
            let gr = self.groups[g].as_ref().expect("live group");
            gr.qubits
                .iter()
                .all(|x| x.0 == side && qubits.contains(&x.1))
        });
        if whole {
            // The qubits are a union of whole groups: still pure.
            let mut amps = vec![C64::new(1.0, 0.0)];
            let mut layout: Vec<usize> = Vec::new();
            for &g in &uniq {
                let gr = self.groups[g].as_ref().expect("live group");
                amps = kron_vec(&amps, &gr.amps);
                layout.extend(gr.qubits.iter().map(|x| x.1));
            }
            let order: Vec<usize> = qubits
                .iter()
                .map(|q| layout.iter().position(|x| x == q).expect("member"))
                .collect();
            let (amps, dims) = permute_subsystems(&amps, &vec![2; qubits.len()], &order)?;
            return Ok(BlockState::Pure(PureState::new(amps, dims)?));
        }
        // Tensor the reduced states of each group, then reorder.
        let mut rho: Option<DensityMatrix> = None;
        let mut layout: Vec<usize> = Vec::new();
        for g in uniq {
            let gr = self.groups[g].as_ref().expect("live group");
            let keep: Vec<usize> = gr
                .qubits
                .iter()
                .enumerate()
                .filter(|(_, x)| x.0 == side && qubits.contains(&x.1))
                .map(|(k, _)| k)
                .collect();
            layout.extend(keep.iter().map(|&k| gr.qubits[k].1));
            let psi = PureState::new(gr.amps.clone(), vec![2; gr.qubits.len()])?;
            let part = reduced_state(&psi, &keep)?;
            rho = Some(match rho {
                None => part,
                Some(r) => r.tensor(&part)?,
            });
        }
        let rho = rho.expect("at least one qubit");
        let order: Vec<usize> = qubits
            .iter()
            .map(|q| layout.iter().position(|x| x == q).expect("member"))
            .collect();
        let p = crate::linalg::ops::permutation_matrix(&vec![2; qubits.len()], &order)?;
        Ok(BlockState::Mixed(rho.evolve(&p)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli::{bell_state, hadamard, pauli_z};

    fn bell_basis() -> MeasurementBasis {
        MeasurementBasis::new((0..4).map(|k| bell_state(k & 2 != 0, k & 1 != 0)).collect()).unwrap()
    }

    #[test]
    fn epr_halves_agree_in_z() {
        let z = MeasurementBasis::of_reflection(&pauli_z()).unwrap();
        for seed in 0..20 {
            let mut lab = Lab::new(1, seed);
            let a = lab.measure(Side::Alice, &[0], &z).unwrap();
            let b = lab.measure(Side::Bob, &[0], &z).unwrap();
            assert_eq!(a, b);
            assert!(lab.measure(Side::Bob, &[0], &z).is_err());
        }
    }

    #[test]
    fn bell_measurement_collapses_partner_halves() {
        for seed in 0..10 {
            let mut lab = Lab::new(2, seed);
            let o = lab.measure(Side::Alice, &[0, 1], &bell_basis()).unwrap();
            let st = lab.block_state(Side::Bob, &[0, 1]).unwrap();
            let expect = PureState::new(bell_state(o & 2 != 0, o & 1 != 0), vec![2, 2]).unwrap();
            assert!(st.distance_to(&expect).unwrap() < 1e-12);
        }
    }

    #[test]
    fn entanglement_swapping_through_generic_path() {
        // A_0 is measured first, so Bob's Bell measurement takes the merge path.
        // Swapping leaves (A_0, A_1) in Bell state o, whose XX sign is (−1)^z.
        let x = MeasurementBasis::of_reflection(&hadamard().matmul(&pauli_z()).matmul(&hadamard()))
            .unwrap();
        let mut counts = [0usize; 4];
        for seed in 0..400 {
            let mut lab = Lab::new(2, seed);
            let a = lab.measure(Side::Alice, &[0], &x).unwrap();
            let o = lab.measure(Side::Bob, &[0, 1], &bell_basis()).unwrap();
            let a2 = lab.measure(Side::Alice, &[1], &x).unwrap();
            assert_eq!(a ^ a2, o & 1, "seed {seed}");
            counts[o] += 1;
        }
        assert!(counts.iter().all(|&c| c > 60), "{counts:?}");
    }

    #[test]
    fn mixed_block_state_of_untouched_half() {
        let lab = Lab::new(2, 0);
        let st = lab.block_state(Side::Alice, &[1, 0]).unwrap();
        let d = st.density();
        assert!(d
            .matrix()
            .approx_eq(&CMatrix::identity(4).scale_real(0.25), 1e-12));
    }
}
