//! Stabilizer groups, Clifford bookkeeping, and the σ_y-free generator
//! certificate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Result, XzError};
use crate::linalg::matrix::vec_max_abs_diff;
use crate::linalg::ops::apply_local;
use crate::linalg::{CMatrix, Pauli, PauliWord, PureState, C64, ONE, ZERO};

/// Groups up to `2^MAX_GROUP_QUBITS` elements are enumerated outright.
pub const MAX_GROUP_QUBITS: usize = 16;

/// `±P` for a Pauli word `P`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignedPauli {
    pub negative: bool,
    pub word: PauliWord,
}

impl SignedPauli {
    pub fn new(negative: bool, word: PauliWord) -> Self {
        SignedPauli { negative, word }
    }

    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    pub fn is_xz(&self) -> bool {
        self.word.is_xz()
    }

    /// Symplectic vector `x‖z` as one mask (qubit 0 highest within each half).
    fn symplectic(&self) -> u64 {
        let n = self.word.len();
        let mut v = 0u64;
        for (k, p) in self.word.0.iter().enumerate() {
            let (x, z) = p.xz_bits();
            if x {
                v |= 1 << (2 * n - 1 - k);
            }
            if z {
                v |= 1 << (n - 1 - k);
            }
        }
        v
    }

    /// Product of two commuting signed words; anticommuting pairs have no
    /// Hermitian product and are rejected.
    pub fn mul(&self, other: &SignedPauli) -> Result<SignedPauli> {
        let (phase, word) = self.word.mul(&other.word);
        if phase.im.abs() > 0.5 {
            return Err(XzError::InconsistentGenerators(format!(
                "{self} and {other} anticommute"
            )));
        }
        Ok(SignedPauli {
            negative: self.negative ^ other.negative ^ (phase.re < 0.0),
            word,
        })
    }

    pub fn apply(&self, amps: &[C64]) -> Vec<C64> {
        let mut v = self.word.apply(amps);
        if self.negative {
            v.iter_mut().for_each(|z| *z = -*z);
        }
        v
    }

    pub fn matrix(&self) -> CMatrix {
        self.word.matrix().scale_real(self.sign())
    }

    /// Conjugate by `H` on qubit `q`: X ↔ Z, Y → −Y.
    pub fn conjugate_h(&mut self, q: usize) {
        let p = &mut self.word.0[q];
        *p = match *p {
            Pauli::X => Pauli::Z,
            Pauli::Z => Pauli::X,
            Pauli::Y => {
                self.negative ^= true;
                Pauli::Y
            }
            Pauli::I => Pauli::I,
        };
    }

    /// Conjugate by a Pauli on qubit `q`: the sign flips on anticommutation.
    pub fn conjugate_pauli(&mut self, q: usize, by: Pauli) {
        let p = self.word.0[q];
        if by != Pauli::I && p != Pauli::I && p != by {
            self.negative ^= true;
        }
    }

    /// Conjugate by CNOT with control `c` and target `t`.
    pub fn conjugate_cnot(&mut self, c: usize, t: usize) {
        let (xc, zc) = self.word.0[c].xz_bits();
        let (xt, zt) = self.word.0[t].xz_bits();
        if xc && zt && (xt == zc) {
            self.negative ^= true;
        }
        self.word.0[c] = letter(xc, zc ^ zt);
        self.word.0[t] = letter(xt ^ xc, zt);
    }
}

fn letter(x: bool, z: bool) -> Pauli {
    match (x, z) {
        (false, false) => Pauli::I,
        (true, false) => Pauli::X,
        (true, true) => Pauli::Y,
        (false, true) => Pauli::Z,
    }
}

impl fmt::Display for SignedPauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.negative { '-' } else { '+' }, self.word)
    }
}

impl FromStr for SignedPauli {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (negative, rest) = match s.chars().next() {
            Some('-') => (true, &s[1..]),
            Some('+') => (false, &s[1..]),
            _ => (false, s),
        };
        Ok(SignedPauli {
            negative,
            word: rest.parse()?,
        })
    }
}

/// Generators of a stabilizer group on `n` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizerSpec {
    pub n: usize,
    pub generators: Vec<SignedPauli>,
}

impl StabilizerSpec {
    pub fn new(n: usize, generators: Vec<SignedPauli>) -> Result<Self> {
        let s = StabilizerSpec { n, generators };
        s.validate()?;
        Ok(s)
    }

    pub fn parse(words: &[&str]) -> Result<Self> {
        let gens = words
            .iter()
            .map(|w| {
                w.parse::<SignedPauli>()
                    .map_err(XzError::InconsistentGenerators)
            })
            .collect::<Result<Vec<_>>>()?;
        let n = gens.first().map_or(0, |g| g.word.len());
        Self::new(n, gens)
    }

    /// `n` generators of matching length, pairwise commuting and
    /// independent; together these make the group have `2^n` elements and
    /// exclude `−I`.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 32 {
            return Err(XzError::Capacity(format!("{} qubits", self.n)));
        }
        if self.generators.len() != self.n {
            return Err(XzError::InconsistentGenerators(format!(
                "{} generators for {} qubits",
                self.generators.len(),
                self.n
            )));
        }
        if let Some(g) = self.generators.iter().find(|g| g.word.len() != self.n) {
            return Err(XzError::InconsistentGenerators(format!(
                "{g} has the wrong length"
            )));
        }
        for (i, a) in self.generators.iter().enumerate() {
            for b in &self.generators[i + 1..] {
                if !a.word.commutes_with(&b.word) {
                    return Err(XzError::InconsistentGenerators(format!(
                        "{a} and {b} anticommute"
                    )));
                }
            }
        }
        if gf2_rank(self.generators.iter().map(SignedPauli::symplectic)) != self.n {
            return Err(XzError::InconsistentGenerators(
                "generators are not independent".into(),
            ));
        }
        Ok(())
    }

    /// `|0ⁿ⟩`: generators `Z_k`.
    pub fn zero_state(n: usize) -> Self {
        let generators = (0..n)
            .map(|k| {
                let mut w = PauliWord::identity(n);
                w.0[k] = Pauli::Z;
                SignedPauli::new(false, w)
            })
            .collect();
        StabilizerSpec { n, generators }
    }

    pub fn tensor(&self, other: &StabilizerSpec) -> StabilizerSpec {
        let n = self.n + other.n;
        let mut generators = Vec::with_capacity(n);
        for g in &self.generators {
            let mut w = g.word.0.clone();
            w.extend(std::iter::repeat_n(Pauli::I, other.n));
            generators.push(SignedPauli::new(g.negative, PauliWord(w)));
        }
        for g in &other.generators {
            let mut w = vec![Pauli::I; self.n];
            w.extend(g.word.0.iter().copied());
            generators.push(SignedPauli::new(g.negative, PauliWord(w)));
        }
        StabilizerSpec { n, generators }
    }

    pub fn apply_h(&mut self, q: usize) {
        self.generators.iter_mut().for_each(|g| g.conjugate_h(q));
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        self.generators
            .iter_mut()
            .for_each(|g| g.conjugate_pauli(q, p));
    }

    pub fn apply_cnot(&mut self, c: usize, t: usize) {
        self.generators
            .iter_mut()
            .for_each(|g| g.conjugate_cnot(c, t));
    }

    /// All `2^n` group elements, in Gray-code order from the identity.
    pub fn group(&self) -> Result<Vec<SignedPauli>> {
        if self.n > MAX_GROUP_QUBITS {
            return Err(XzError::Capacity(format!("group of {} qubits", self.n)));
        }
        let size = 1usize << self.n;
        let mut out = Vec::with_capacity(size);
        let mut cur = SignedPauli::new(false, PauliWord::identity(self.n));
        out.push(cur.clone());
        for i in 1..size {
            let flip = i.trailing_zeros() as usize;
            cur = cur.mul(&self.generators[flip])?;
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// The stabilized state, by projecting basis vectors with `Π(I + g)/2`.
    pub fn state(&self) -> Result<PureState> {
        if self.n > 12 {
            return Err(XzError::Capacity(format!("state of {} qubits", self.n)));
        }
        let dim = 1usize << self.n;
        for seed in 0..dim {
            let mut v = vec![ZERO; dim];
            v[seed] = ONE;
            for g in &self.generators {
                let gv = g.apply(&v);
                v = v.iter().zip(&gv).map(|(a, b)| (a + b) * 0.5).collect();
            }
            if crate::linalg::norm(&v) > 1e-6 {
                return Ok(PureState::normalized(v, vec![2; self.n])?);
            }
        }
        Err(XzError::InconsistentGenerators(
            "no stabilized vector".into(),
        ))
    }
}

fn gf2_rank(vectors: impl Iterator<Item = u64>) -> usize {
    let mut basis: Vec<u64> = Vec::new();
    for mut v in vectors {
        for b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// σ_y-free generators together with the local rotations `U = ⊗U_k`; the
/// certified state `U|ψ⟩` is stabilized by every `U g U†`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct XzWitness {
    pub generators: Vec<SignedPauli>,
    pub rotations: Vec<CMatrix>,
}

impl XzWitness {
    fn rotate(&self, amps: &[C64], adjoint: bool) -> Result<Vec<C64>> {
        let n = self.rotations.len();
        let dims = vec![2; n];
        let mut v = amps.to_vec();
        for (k, u) in self.rotations.iter().enumerate() {
            let op = if adjoint { u.adjoint() } else { u.clone() };
            v = apply_local(&v, &dims, &op, &[k])?;
        }
        Ok(v)
    }

    /// Largest `‖U g U†|ψ⟩ − |ψ⟩‖_∞` over the witness generators.
    pub fn stabilizer_residual(&self, psi: &PureState) -> Result<f64> {
        let amps = psi.amplitudes();
        let back = self.rotate(amps, true)?;
        let mut worst = 0.0f64;
        for g in &self.generators {
            let v = self.rotate(&g.apply(&back), false)?;
            worst = worst.max(vec_max_abs_diff(&v, amps));
        }
        Ok(worst)
    }

    /// The rotated generators `U g U†` as dense matrices (small `n` only).
    pub fn operators(&self) -> Vec<CMatrix> {
        let u = self
            .rotations
            .iter()
            .fold(CMatrix::identity(1), |acc, r| acc.kron(r));
        self.generators
            .iter()
            .map(|g| u.matmul(&g.matrix()).matmul(&u.adjoint()))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct XzCertificate {
    pub certified: bool,
    pub group_order: usize,
    /// Group elements whose words avoid σ_y (identity excluded).
    pub xz_elements: usize,
    pub witness: Option<XzWitness>,
}

fn check_rotations(n: usize, rotations: &[CMatrix]) -> Result<Vec<CMatrix>> {
    if rotations.is_empty() {
        return Ok(vec![CMatrix::identity(2); n]);
    }
    if rotations.len() != n {
        return Err(XzError::InconsistentGenerators(format!(
            "{} rotations for {n} qubits",
            rotations.len()
        )));
    }
    for (k, u) in rotations.iter().enumerate() {
        let real = u.data().iter().all(|z| z.im.abs() <= 1e-12);
        if u.rows() != 2 || u.cols() != 2 || !real || !u.is_unitary(1e-9) {
            return Err(XzError::NotRealRotation(k));
        }
    }
    Ok(rotations.to_vec())
}

/// Search the whole stabilizer group for `n` independent σ_y-free elements.
/// They exist exactly when the σ_y-free elements span the group, in which
/// case `U|ψ⟩` is XZ-determined for real local `U` (empty `rotations` means
/// identity).
pub fn stabilizer_xz_certificate(
    spec: &StabilizerSpec,
    rotations: &[CMatrix],
) -> Result<XzCertificate> {
    spec.validate()?;
    let rotations = check_rotations(spec.n, rotations)?;
    let group = spec.group()?;
    let mut basis: Vec<u64> = Vec::new();
    let mut chosen = Vec::new();
    let mut xz_elements = 0;
    for g in group.iter().skip(1).filter(|g| g.is_xz()) {
        xz_elements += 1;
        if chosen.len() == spec.n {
            continue;
        }
        let mut v = g.symplectic();
        for b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
            chosen.push(g.clone());
        }
    }
    let certified = chosen.len() == spec.n;
    Ok(XzCertificate {
        certified,
        group_order: group.len(),
        xz_elements,
        witness: certified.then(|| XzWitness {
            generators: chosen,
            rotations,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli::{cnot, hadamard};

    #[test]
    fn bell_pair_is_certified() {
        let s = StabilizerSpec::parse(&["XX", "ZZ"]).unwrap();
        let c = stabilizer_xz_certificate(&s, &[]).unwrap();
        assert!(c.certified);
        let w = c.witness.unwrap();
        assert!(w.stabilizer_residual(&PureState::epr()).unwrap() < 1e-15);
    }

    #[test]
    fn complex_bell_state_has_no_xz_generators() {
        // (|00⟩ + i|11⟩)/√2: group {II, ZZ, XY, YX}, only ZZ avoids σ_y.
        let s = StabilizerSpec::parse(&["ZZ", "XY"]).unwrap();
        let c = stabilizer_xz_certificate(&s, &[]).unwrap();
        assert!(!c.certified && c.witness.is_none());
        assert_eq!((c.group_order, c.xz_elements), (4, 1));
        let psi = s.state().unwrap();
        assert!(super::super::conjugation_obstruction_pure(&psi) > 0.99);
    }

    #[test]
    fn yy_xx_group_is_real_and_certified() {
        // YY·XX = −ZZ, so XX and −ZZ generate the same group.
        let s = StabilizerSpec::parse(&["YY", "XX"]).unwrap();
        let c = stabilizer_xz_certificate(&s, &[]).unwrap();
        assert!(c.certified);
        let g: Vec<String> = c
            .witness
            .unwrap()
            .generators
            .iter()
            .map(|g| g.to_string())
            .collect();
        assert_eq!(g, vec!["-ZZ", "+XX"]);
    }

    #[test]
    fn rejects_bad_generators() {
        assert!(StabilizerSpec::parse(&["XI", "ZI"]).is_err());
        assert!(StabilizerSpec::parse(&["ZZ", "ZZ"]).is_err());
        assert!(StabilizerSpec::parse(&["ZZ"]).is_err());
    }

    #[test]
    fn clifford_rules_match_matrices() {
        let words = ["XI", "ZI", "YI", "IX", "IZ", "IY", "XY", "YZ", "YY", "ZX"];
        let cx = cnot();
        let h0 = hadamard().kron(&CMatrix::identity(2));
        for (neg, w) in words.iter().flat_map(|w| [(false, *w), (true, *w)]) {
            let p = SignedPauli::new(neg, w.parse().unwrap());
            let mut a = p.clone();
            a.conjugate_cnot(0, 1);
            assert!(
                a.matrix()
                    .approx_eq(&cx.matmul(&p.matrix()).matmul(&cx), 1e-14),
                "cnot {p}"
            );
            let mut b = p.clone();
            b.conjugate_h(0);
            assert!(
                b.matrix()
                    .approx_eq(&h0.matmul(&p.matrix()).matmul(&h0), 1e-14),
                "h {p}"
            );
        }
    }

    #[test]
    fn state_from_generators_is_stabilized() {
        let s = StabilizerSpec::parse(&["-XX", "ZZ"]).unwrap();
        let psi = s.state().unwrap();
        for g in &s.generators {
            assert!(vec_max_abs_diff(&g.apply(psi.amplitudes()), psi.amplitudes()) < 1e-12);
        }
    }
}
