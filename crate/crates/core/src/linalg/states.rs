use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::eigen::eigenvalues_hermitian;
use super::matrix::{inner, kron_vec, norm, r, CMatrix, C64, ONE, ZERO};

/// Largest Hilbert-space dimension any constructor accepts (12 qubits).
pub const MAX_DIM: usize = 1 << 12;

/// Validity checks above this size skip the eigenvalue (positivity) test.
const PSD_CHECK_LIMIT: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("tensor product of an empty list")]
    EmptyTensor,
    #[error("tensor factors mix states and operators")]
    MixedKinds,
    #[error("dimension {0} exceeds the {MAX_DIM}-dimensional capacity")]
    Capacity(usize),
    #[error("subsystem dimensions {dims:?} do not multiply to {len}")]
    DimsMismatch { dims: Vec<usize>, len: usize },
    #[error("subsystem dimension must be at least 2, got {0}")]
    BadSubsystem(usize),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("trace {0} differs from 1")]
    NotUnitTrace(f64),
    #[error("minimum eigenvalue {0} is negative")]
    NotPositive(f64),
    #[error("matrix does not square to the identity")]
    NotReflection,
    #[error("Kraus terms are not trace preserving (deviation {0})")]
    NotTracePreserving(f64),
    #[error("matrix shape {0}x{1} is not valid here")]
    Shape(usize, usize),
    #[error("subsystem index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("projectors do not form a complete orthogonal set")]
    IncompleteProjectors,
    #[error("outcome has zero probability")]
    ZeroProbability,
    #[error("operation requires qubit subsystems")]
    NonQubit,
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Absolute tolerances for validity checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub validity: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { validity: 1e-9 }
    }
}

fn check_dims(dims: &[usize], len: usize) -> Result<()> {
    if len > MAX_DIM {
        return Err(LinalgError::Capacity(len));
    }
    if let Some(&d) = dims.iter().find(|&&d| d < 2) {
        return Err(LinalgError::BadSubsystem(d));
    }
    let prod: usize = dims.iter().product();
    if prod != len {
        return Err(LinalgError::DimsMismatch {
            dims: dims.to_vec(),
            len,
        });
    }
    Ok(())
}

pub fn qubit_dims(n: usize) -> Vec<usize> {
    vec![2; n]
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
    dims: Vec<usize>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        Self::new_with_tol(amplitudes, dims, Tolerance::default())
    }

    pub fn new_with_tol(amplitudes: Vec<C64>, dims: Vec<usize>, tol: Tolerance) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > tol.validity {
            return Err(LinalgError::NotNormalized(n));
        }
        Ok(PureState { amplitudes, dims })
    }

    /// Normalizes the input; panics on the zero vector.
    pub fn normalized(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let n = norm(&amplitudes);
        assert!(n > 0.0, "cannot normalize the zero vector");
        Self::new(amplitudes.into_iter().map(|z| z / n).collect(), dims)
    }

    pub fn from_real(amplitudes: &[f64], dims: Vec<usize>) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| r(x)).collect(), dims)
    }

    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let len: usize = dims.iter().product();
        if index >= len {
            return Err(LinalgError::IndexOutOfRange(index));
        }
        let mut a = vec![ZERO; len];
        a[index] = ONE;
        Self::new(a, dims)
    }

    /// Computational basis state on qubits, most significant bit first.
    pub fn qubits_basis(n: usize, index: usize) -> Result<Self> {
        Self::basis(qubit_dims(n), index)
    }

    /// (|00⟩ + |11⟩)/√2
    pub fn epr() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState {
            amplitudes: vec![r(h), ZERO, ZERO, r(h)],
            dims: vec![2, 2],
        }
    }

    /// `n` EPR pairs with pair `k` on qubits `(k, n + k)`: the first `n`
    /// qubits form one party's register and the last `n` the other's.
    pub fn epr_pairs_split(n: usize) -> Result<Self> {
        let dim = 1usize << (2 * n);
        check_dims(&qubit_dims(2 * n), dim)?;
        let amp = r((0.5f64).powi(n as i32).sqrt());
        let mut a = vec![ZERO; dim];
        for x in 0..(1usize << n) {
            a[(x << n) | x] = amp;
        }
        Ok(PureState {
            amplitudes: a,
            dims: qubit_dims(2 * n),
        })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn num_qubits(&self) -> Result<usize> {
        if self.dims.iter().all(|&d| d == 2) {
            Ok(self.dims.len())
        } else {
            Err(LinalgError::NonQubit)
        }
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: CMatrix::outer(&self.amplitudes, &self.amplitudes),
            dims: self.dims.clone(),
        }
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let len = self.dim() * other.dim();
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        check_dims(&dims, len)?;
        Ok(PureState {
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
            dims,
        })
    }

    /// Apply a unitary; fails if the result leaves the unit sphere.
    pub fn evolve(&self, u: &CMatrix) -> Result<PureState> {
        if u.cols() != self.dim() || !u.is_square() {
            return Err(LinalgError::Shape(u.rows(), u.cols()));
        }
        PureState::new(u.apply(&self.amplitudes), self.dims.clone())
    }

    /// Apply an isometry into a larger space with new subsystem dims.
    pub fn map_isometry(&self, v: &CMatrix, new_dims: Vec<usize>) -> Result<PureState> {
        if v.cols() != self.dim() {
            return Err(LinalgError::Shape(v.rows(), v.cols()));
        }
        PureState::new(v.apply(&self.amplitudes), new_dims)
    }

    pub fn conj(&self) -> PureState {
        PureState {
            amplitudes: self.amplitudes.iter().map(|z| z.conj()).collect(),
            dims: self.dims.clone(),
        }
    }

    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Trace distance between the two pure states, `√(1 − |⟨a|b⟩|²)`.
    ///
    /// Computed as the norm of the part of `other` orthogonal to `self`,
    /// which stays accurate near zero where `1 − F` would cancel.
    pub fn trace_distance(&self, other: &PureState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimMismatch(self.dim(), other.dim()));
        }
        let overlap = self.inner(other);
        let perp: f64 = self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (b - overlap * a).norm_sqr()).sum();
        Ok(perp.sqrt().min(1.0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        Self::new_with_tol(matrix, dims, Tolerance::default())
    }

    pub fn new_with_tol(matrix: CMatrix, dims: Vec<usize>, tol: Tolerance) -> Result<Self> {
        if !matrix.is_square() {
            return Err(LinalgError::Shape(matrix.rows(), matrix.cols()));
        }
        check_dims(&dims, matrix.rows())?;
        if !matrix.is_hermitian(tol.validity) {
            return Err(LinalgError::NotHermitian);
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol.validity || tr.im.abs() > tol.validity {
            return Err(LinalgError::NotUnitTrace(tr.re));
        }
        if matrix.rows() <= PSD_CHECK_LIMIT {
            let min = eigenvalues_hermitian(&matrix)
                .first()
                .copied()
                .unwrap_or(0.0);
            if min < -tol.validity {
                return Err(LinalgError::NotPositive(min));
            }
        }
        Ok(DensityMatrix { matrix, dims })
    }

    /// For results of operations known to preserve validity.
    pub(crate) fn from_parts_unchecked(matrix: CMatrix, dims: Vec<usize>) -> Self {
        DensityMatrix { matrix, dims }
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        check_dims(&dims, d)?;
        Ok(DensityMatrix {
            matrix: CMatrix::identity(d).scale_real(1.0 / d as f64),
            dims,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn num_qubits(&self) -> Result<usize> {
        if self.dims.iter().all(|&d| d == 2) {
            Ok(self.dims.len())
        } else {
            Err(LinalgError::NonQubit)
        }
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        check_dims(&dims, self.dim() * other.dim())?;
        Ok(DensityMatrix {
            matrix: self.matrix.kron(&other.matrix),
            dims,
        })
    }

    /// `U ρ U†` for a unitary `U`.
    pub fn evolve(&self, u: &CMatrix) -> Result<DensityMatrix> {
        if !u.is_square() || u.cols() != self.dim() {
            return Err(LinalgError::Shape(u.rows(), u.cols()));
        }
        Ok(DensityMatrix {
            matrix: u.conjugate(&self.matrix),
            dims: self.dims.clone(),
        })
    }

    /// `V ρ V†` for an isometry `V`, with the output's subsystem dims.
    pub fn map_isometry(&self, v: &CMatrix, new_dims: Vec<usize>) -> Result<DensityMatrix> {
        if v.cols() != self.dim() {
            return Err(LinalgError::Shape(v.rows(), v.cols()));
        }
        check_dims(&new_dims, v.rows())?;
        Ok(DensityMatrix {
            matrix: v.conjugate(&self.matrix),
            dims: new_dims,
        })
    }

    pub fn conj(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: self.matrix.conj(),
            dims: self.dims.clone(),
        }
    }

    pub fn purity(&self) -> f64 {
        self.matrix.matmul(&self.matrix).trace().re
    }

    /// Mixture `Σ p_k ρ_k`; weights must sum to 1.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<DensityMatrix> {
        let first = parts.first().ok_or(LinalgError::EmptyTensor)?;
        let mut m = CMatrix::zeros(first.1.dim(), first.1.dim());
        for (p, rho) in parts {
            if rho.dim() != first.1.dim() {
                return Err(LinalgError::DimMismatch(rho.dim(), first.1.dim()));
            }
            m = &m + &rho.matrix.scale_real(*p);
        }
        DensityMatrix::new(m, first.1.dims.clone())
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        op.matmul(&self.matrix).trace()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reflection {
    matrix: CMatrix,
}

impl Reflection {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::new_with_tol(matrix, Tolerance::default())
    }

    pub fn new_with_tol(matrix: CMatrix, tol: Tolerance) -> Result<Self> {
        if !matrix.is_square() {
            return Err(LinalgError::Shape(matrix.rows(), matrix.cols()));
        }
        if matrix.rows() > MAX_DIM {
            return Err(LinalgError::Capacity(matrix.rows()));
        }
        if !matrix.is_hermitian(tol.validity) {
            return Err(LinalgError::NotHermitian);
        }
        if !matrix
            .matmul(&matrix)
            .approx_eq(&CMatrix::identity(matrix.rows()), tol.validity)
        {
            return Err(LinalgError::NotReflection);
        }
        Ok(Reflection { matrix })
    }

    pub fn identity(d: usize) -> Self {
        Reflection {
            matrix: CMatrix::identity(d),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `½(I + (−1)^x R)`
    pub fn projector(&self, x: u8) -> CMatrix {
        let sign = if x & 1 == 0 { 1.0 } else { -1.0 };
        (&CMatrix::identity(self.dim()) + &self.matrix.scale_real(sign)).scale_real(0.5)
    }

    pub fn tensor(&self, other: &Reflection) -> Reflection {
        Reflection {
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    /// `U R U†`, still a reflection when `U` is unitary.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Reflection> {
        Reflection::new(u.conjugate(&self.matrix))
    }
}

/// Trace-preserving completely positive map in Kraus form.
#[derive(Clone, Debug)]
pub struct SuperOperator {
    kraus: Vec<CMatrix>,
}

impl SuperOperator {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        Self::new_with_tol(kraus, Tolerance::default())
    }

    pub fn new_with_tol(kraus: Vec<CMatrix>, tol: Tolerance) -> Result<Self> {
        let first = kraus.first().ok_or(LinalgError::EmptyTensor)?;
        let (out, inp) = (first.rows(), first.cols());
        let mut sum = CMatrix::zeros(inp, inp);
        for k in &kraus {
            if k.rows() != out || k.cols() != inp {
                return Err(LinalgError::Shape(k.rows(), k.cols()));
            }
            sum = &sum + &k.adjoint().matmul(k);
        }
        let dev = sum.max_abs_diff(&CMatrix::identity(inp));
        if dev > tol.validity {
            return Err(LinalgError::NotTracePreserving(dev));
        }
        Ok(SuperOperator { kraus })
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus[0].rows()
    }

    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.output_dim(), self.output_dim());
        for k in &self.kraus {
            out = &out + &k.conjugate(rho);
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix, out_dims: Vec<usize>) -> Result<DensityMatrix> {
        if rho.dim() != self.input_dim() {
            return Err(LinalgError::DimMismatch(rho.dim(), self.input_dim()));
        }
        check_dims(&out_dims, self.output_dim())?;
        Ok(DensityMatrix::from_parts_unchecked(
            self.apply_matrix(rho.matrix()),
            out_dims,
        ))
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &SuperOperator) -> Result<SuperOperator> {
        if next.input_dim() != self.output_dim() {
            return Err(LinalgError::DimMismatch(
                next.input_dim(),
                self.output_dim(),
            ));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for b in &next.kraus {
            for a in &self.kraus {
                kraus.push(b.matmul(a));
            }
        }
        Ok(SuperOperator { kraus })
    }

    /// `self ⊗ other` acting on the joint space.
    pub fn tensor(&self, other: &SuperOperator) -> SuperOperator {
        let mut kraus = Vec::new();
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a.kron(b));
            }
        }
        SuperOperator { kraus }
    }

    pub fn identity(d: usize) -> SuperOperator {
        SuperOperator {
            kraus: vec![CMatrix::identity(d)],
        }
    }
}
