//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Sweeps visit pairs `(p, q)` in row-major order, so results are bit-stable
//! for a given input on a given platform.

use super::matrix::{inner, CMatrix, C64, ONE, ZERO};

const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// Rebuild `Σ f(λ_k) |v_k⟩⟨v_k|`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n, n);
        for k in 0..n {
            let fk = f(self.values[k]);
            if fk == 0.0 {
                continue;
            }
            let v = self.vector(k);
            for i in 0..n {
                let vi = v[i] * fk;
                for j in 0..n {
                    out[(i, j)] += vi * v[j].conj();
                }
            }
        }
        out
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a Hermitian matrix. Only the upper triangle's
/// Hermitian part matters; the input is symmetrized first.
pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    assert!(m.is_square(), "eigendecomposition needs a square matrix");
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    HermitianEigen { values, vectors }
}

/// One Jacobi rotation zeroing `a[p][q]`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Skip entries that are negligible against both diagonal entries.
    if mag < 1e-300
        || (app.abs() + aqq.abs() > 0.0 && mag <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()))
    {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let phase = apq / mag;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;
    // U = diag(1, conj(phase)) · [[cs, sn], [-sn, cs]]
    let upp = C64::new(cs, 0.0);
    let upq = C64::new(sn, 0.0);
    let uqp = -phase.conj() * sn;
    let uqq = phase.conj() * cs;

    let n = a.rows();
    // A ← A U (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * upp + akq * uqp;
        a[(k, q)] = akp * upq + akq * uqq;
    }
    // A ← U† A (rows p, q)
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
        a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * upp + vkq * uqp;
        v[(k, q)] = vkp * upq + vkq * uqq;
    }
}

pub fn eigenvalues_hermitian(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).values
}

/// Sum of |eigenvalues| of a Hermitian matrix (its trace norm).
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigenvalues_hermitian(m).iter().map(|x| x.abs()).sum()
}

/// Singular values of an arbitrary matrix, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let gram = if m.rows() >= m.cols() {
        m.adjoint().matmul(m)
    } else {
        m.matmul(&m.adjoint())
    };
    let mut s: Vec<f64> = eigenvalues_hermitian(&gram)
        .into_iter()
        .map(|x| x.max(0.0).sqrt())
        .collect();
    s.reverse();
    s
}

pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.is_hermitian(1e-12) {
        trace_norm_hermitian(m)
    } else {
        singular_values(m).iter().sum()
    }
}

pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_hermitian(1e-12) {
        eigenvalues_hermitian(m)
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max)
    } else {
        singular_values(m).first().copied().unwrap_or(0.0)
    }
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    hermitian_eigen(m).map(|x| x.max(0.0).sqrt())
}

/// Orthonormalize the columns of `m` (modified Gram-Schmidt); drops columns
/// whose residual norm falls under `tol`.
pub fn orthonormal_columns(m: &CMatrix, tol: f64) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for j in 0..m.cols() {
        let mut v = m.column(j);
        for _ in 0..2 {
            for b in &basis {
                let proj = super::matrix::inner(b, &v);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
        }
        let nv = super::matrix::norm(&v);
        if nv > tol {
            basis.push(v.iter().map(|z| z / nv).collect());
        }
    }
    basis
}

/// `‖Σ u u† − Σ v v†‖₁`, computed inside the span of the vectors, which is
/// cheap when blocks have few components.
pub fn trace_norm_low_rank(us: &[Vec<C64>], vs: &[Vec<C64>]) -> f64 {
    let all: Vec<&Vec<C64>> = us.iter().chain(vs.iter()).collect();
    if all.is_empty() {
        return 0.0;
    }
    let dim = all[0].len();
    let w = CMatrix::from_fn(dim, all.len(), |i, k| all[k][i]);
    let basis = orthonormal_columns(&w, 1e-13);
    let k = basis.len();
    if k == 0 {
        return 0.0;
    }
    let mut m = CMatrix::zeros(k, k);
    for (idx, v) in all.iter().enumerate() {
        let coords: Vec<C64> = basis.iter().map(|b| inner(b, v)).collect();
        let sign = if idx < us.len() { 1.0 } else { -1.0 };
        m = &m + &CMatrix::outer(&coords, &coords).scale_real(sign);
    }
    hermitian_eigen(&m.hermitian_part())
        .values
        .iter()
        .map(|x| x.abs())
        .sum()
}

/// Extend an orthonormal set to a full basis of `C^dim`.
pub fn complete_basis(vectors: &[Vec<C64>], dim: usize) -> Vec<Vec<C64>> {
    let mut cols = CMatrix::zeros(dim, vectors.len() + dim);
    for (j, v) in vectors.iter().enumerate() {
        cols.set_column(j, v);
    }
    for k in 0..dim {
        let mut e = vec![ZERO; dim];
        e[k] = ONE;
        cols.set_column(vectors.len() + k, &e);
    }
    orthonormal_columns(&cols, 1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::c;

    #[test]
    fn pauli_x_spectrum() {
        let x = CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = hermitian_eigen(&x);
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let m = CMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, -1.0), c(0.0, 0.5)],
            vec![c(1.0, 1.0), c(-1.0, 0.0), c(0.3, 0.2)],
            vec![c(0.0, -0.5), c(0.3, -0.2), c(0.5, 0.0)],
        ]);
        let e = hermitian_eigen(&m);
        assert!(e.map(|x| x).approx_eq(&m, 1e-12));
        assert!(e.vectors.is_unitary(1e-12));
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn degenerate_spectrum_is_handled() {
        let e = hermitian_eigen(&CMatrix::identity(4).scale_real(0.25));
        assert!(e.values.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn singular_values_of_rank_one() {
        let v = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let w = vec![c(3.0, 0.0), c(0.0, 0.0), c(4.0, 0.0)];
        let s = singular_values(&CMatrix::outer(&v, &w));
        assert!((s[0] - 2f64.sqrt() * 5.0).abs() < 1e-12);
        assert!(s[1].abs() < 1e-7);
    }

    #[test]
    fn basis_completion_is_orthonormal() {
        let v = vec![vec![c(0.6, 0.0), c(0.0, 0.8), ZERO]];
        let b = complete_basis(&v, 3);
        assert_eq!(b.len(), 3);
        let m = CMatrix::from_fn(3, 3, |i, j| b[j][i]);
        assert!(m.is_unitary(1e-12));
    }
}
