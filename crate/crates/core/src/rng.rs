//! Seeded randomness. Every consumer derives an independent ChaCha stream
//! from `(seed, stream)` so parallel work is reproducible regardless of
//! scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::eigen::{hermitian_eigen, operator_norm, orthonormal_columns};
use crate::linalg::{CMatrix, PureState, C64};

pub type DetRng = ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> DetRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under master `seed`.
pub fn child_rng(seed: u64, stream: u64) -> DetRng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Haar-random unitary via Gram-Schmidt on a complex Gaussian matrix.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    loop {
        let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
        let cols = orthonormal_columns(&g, 1e-10);
        if cols.len() == dim {
            return CMatrix::from_fn(dim, dim, |i, j| cols[j][i]);
        }
    }
}

/// Random isometry `C^d_in → C^d_out` (first columns of a Haar unitary).
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize) -> CMatrix {
    assert!(d_out >= d_in, "isometry must not shrink the space");
    let u = haar_unitary(rng, d_out);
    CMatrix::from_fn(d_out, d_in, |i, j| u[(i, j)])
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dims: Vec<usize>) -> PureState {
    let d: usize = dims.iter().product();
    let v: Vec<C64> = (0..d).map(|_| gaussian_complex(rng)).collect();
    PureState::normalized(v, dims).expect("valid dims")
}

/// Random density matrix `G G† / Tr(G G†)` with Gaussian `G` of the given rank.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, rank.max(1), |_, _| gaussian_complex(rng));
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    m.scale_real(1.0 / tr).hermitian_part()
}

/// Random Hermitian matrix with Gaussian entries (GUE-style, unit scale).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng)).hermitian_part()
}

/// Random reflection `U diag(±1) U†` with `plus` eigenvalues equal to +1.
pub fn random_reflection<R: Rng + ?Sized>(rng: &mut R, dim: usize, plus: usize) -> CMatrix {
    let u = haar_unitary(rng, dim);
    let d: Vec<C64> = (0..dim)
        .map(|k| C64::new(if k < plus { 1.0 } else { -1.0 }, 0.0))
        .collect();
    u.conjugate(&CMatrix::diag(&d))
}

/// `sign(R + τH)` for a random Hermitian `H` of unit operator norm: a
/// reflection within `O(τ)` of `R`.
pub fn perturb_reflection<R: Rng + ?Sized>(rng: &mut R, refl: &CMatrix, tau: f64) -> CMatrix {
    let h = random_hermitian(rng, refl.rows());
    let h = h.scale_real(1.0 / operator_norm(&h).max(1e-300));
    hermitian_eigen(&(refl + &h.scale_real(tau)))
        .map(|x| if x >= 0.0 { 1.0 } else { -1.0 })
        .hermitian_part()
}

/// `exp(iτH)` for a random Hermitian `H` of unit operator norm.
pub fn near_identity_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize, tau: f64) -> CMatrix {
    let h = random_hermitian(rng, dim);
    let h = h.scale_real(1.0 / operator_norm(&h).max(1e-300));
    let e = hermitian_eigen(&h);
    let mut u = CMatrix::zeros(dim, dim);
    for (k, &l) in e.values.iter().enumerate() {
        let v = e.vector(k);
        u = &u + &CMatrix::outer(&v, &v).scale(C64::from_polar(1.0, tau * l));
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn child_streams_differ_and_repeat() {
        let a: u64 = child_rng(7, 0).random();
        let b: u64 = child_rng(7, 1).random();
        let a2: u64 = child_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn haar_is_unitary() {
        let mut r = rng_from_seed(1);
        assert!(haar_unitary(&mut r, 6).is_unitary(1e-12));
        assert!(random_isometry(&mut r, 2, 5).is_isometry(1e-12));
    }

    #[test]
    fn random_reflection_squares_to_identity() {
        let mut r = rng_from_seed(3);
        let m = random_reflection(&mut r, 5, 2);
        assert!(m.matmul(&m).approx_eq(&CMatrix::identity(5), 1e-12));
        assert!((m.trace().re - (-1.0)).abs() < 1e-12);
    }
}
