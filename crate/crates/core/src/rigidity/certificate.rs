//! Single-game rigidity certificates and the √ε scaling probe.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extract::{extract_single_game_isometry, SingleGameExtraction};
use super::{state_components, Result};
use crate::chsh::{chsh_win_probability, epsilon_from_win, ideal_strategy, SingleGameStrategy};
use crate::linalg::eigen::{hermitian_eigen, trace_norm_low_rank};
use crate::linalg::matrix::{norm, CMatrix, C64, ZERO};
use crate::linalg::ops::{apply_local, permute_subsystems};
use crate::linalg::{PureState, QuantumState, Reflection};
use crate::rng::{child_rng, gaussian_complex, random_isometry};
use crate::sequential::Device;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityCertificate {
    pub win_probability: f64,
    /// `8(ω* − win)`, clamped at zero.
    pub epsilon: f64,
    /// Alice's mass-weighted block angle; `None` if every block is degenerate.
    pub theta: Option<f64>,
    /// Bob's.
    pub theta_prime: Option<f64>,
    /// Trace distance of the mapped state to `|φ⟩⟨φ| ⊗ σ`.
    pub state_distance: f64,
    /// `max ‖(R − X†(ideal ⊗ I)X)|ψ⟩‖` over devices and questions.
    pub operator_distance: f64,
    pub degenerate_blocks: usize,
    pub padded_blocks: usize,
    pub alice_blocks: usize,
    pub bob_blocks: usize,
}

fn epr() -> Vec<C64> {
    PureState::epr().amplitudes().to_vec()
}

/// Components of `(X_A ⊗ X_B)ρ(X_A ⊗ X_B)†` reordered to
/// `(qubit_A, qubit_B, junk_A, junk_B)`.
pub fn mapped_components(
    ex: &SingleGameExtraction,
    comps: &[Vec<C64>],
    dims: [usize; 2],
) -> Result<Vec<Vec<C64>>> {
    let (ma, mb) = (ex.alice.junk_dim, ex.bob.junk_dim);
    let xs = [ex.alice.isometry.clone(), ex.bob.isometry.clone()];
    comps
        .iter()
        .map(|u| {
            let mut v = u.clone();
            let mut cur = dims.to_vec();
            for (k, x) in xs.iter().enumerate() {
                v = apply_isometry_on(&v, &cur, x, k);
                cur[k] = x.rows();
            }
            let (w, _) = permute_subsystems(&v, &[2, ma, 2, mb], &[0, 2, 1, 3])?;
            Ok(w)
        })
        .collect()
}

/// Apply a (possibly non-square) map to subsystem `k`.
fn apply_isometry_on(u: &[C64], dims: &[usize], x: &CMatrix, k: usize) -> Vec<C64> {
    let before: usize = dims[..k].iter().product();
    let after: usize = dims[k + 1..].iter().product();
    let (rows, cols) = (x.rows(), x.cols());
    let mut out = vec![ZERO; before * rows * after];
    for b in 0..before {
        for r in 0..rows {
            let xr = x.row(r);
            for a in 0..after {
                let mut s = ZERO;
                for (c, xv) in xr.iter().enumerate() {
                    s += xv * u[(b * cols + c) * after + a];
                }
                out[(b * rows + r) * after + a] = s;
            }
        }
    }
    out
}

/// `½‖ρ − |φ⟩⟨φ| ⊗ Tr_qq ρ‖₁` for components over `(q, q, junk)`.
pub fn distance_to_epr_times_junk(comps: &[Vec<C64>]) -> f64 {
    if comps.is_empty() {
        return 0.0;
    }
    let junk = comps[0].len() / 4;
    let mut sigma = CMatrix::zeros(junk, junk);
    for u in comps {
        for q in 0..4 {
            let row = &u[q * junk..(q + 1) * junk];
            for i in 0..junk {
                if row[i] == ZERO {
                    continue;
                }
                for j in 0..junk {
                    sigma[(i, j)] += row[i] * row[j].conj();
                }
            }
        }
    }
    let e = hermitian_eigen(&sigma.hermitian_part());
    let phi = epr();
    let targets: Vec<Vec<C64>> = e
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 1e-15)
        .map(|(k, &l)| {
            let v = e.vector(k);
            let mut t = vec![ZERO; 4 * junk];
            for q in 0..4 {
                for i in 0..junk {
                    t[q * junk + i] = phi[q] * v[i] * l.sqrt();
                }
            }
            t
        })
        .collect();
    0.5 * trace_norm_low_rank(comps, &targets)
}

pub fn single_game_certificate(s: &SingleGameStrategy) -> Result<RigidityCertificate> {
    let ex = extract_single_game_isometry(s)?;
    let win = chsh_win_probability(s)?;
    let comps = state_components(&s.state)?;
    let dims = [s.alice_dim(), s.bob_dim()];
    let mapped = mapped_components(&ex, &comps, dims)?;
    let state_distance = distance_to_epr_times_junk(&mapped);

    let mut operator_distance = 0.0f64;
    for d in [Device::A, Device::B] {
        let refl: &[Reflection; 2] = match d {
            Device::A => &s.alice,
            Device::B => &s.bob,
        };
        for q in 0..2u8 {
            let diff = refl[q as usize].matrix() - &ex.device(d).ideal_pullback(q);
            let mut sq = 0.0;
            for u in &comps {
                sq += norm(&apply_local(u, &dims, &diff, &[d.index()])?).powi(2);
            }
            operator_distance = operator_distance.max(sq.sqrt());
        }
    }
    let count = |f: &dyn Fn(&super::jordan::JordanBlock) -> bool| {
        ex.alice
            .jordan
            .blocks
            .iter()
            .chain(&ex.bob.jordan.blocks)
            .filter(|b| f(b))
            .count()
    };
    Ok(RigidityCertificate {
        win_probability: win,
        epsilon: epsilon_from_win(win).max(0.0),
        theta: ex.angle_summary(Device::A),
        theta_prime: ex.angle_summary(Device::B),
        state_distance,
        operator_distance,
        degenerate_blocks: count(&|b| b.is_degenerate()),
        padded_blocks: count(&|b| b.kind == super::jordan::BlockKind::Padded),
        alice_blocks: ex.alice.jordan.blocks.len(),
        bob_blocks: ex.bob.jordan.blocks.len(),
    })
}

/// The ideal strategy pushed into larger spaces by local isometries, with
/// `+1` on the complement of each image.
pub fn embed_single_game(
    s: &SingleGameStrategy,
    xa: &CMatrix,
    xb: &CMatrix,
) -> Result<SingleGameStrategy> {
    let lift = |r: &Reflection, x: &CMatrix| -> Result<Reflection> {
        let comp = &CMatrix::identity(x.rows()) - &x.matmul(&x.adjoint());
        Ok(Reflection::new(
            (&x.matmul(r.matrix()).matmul(&x.adjoint()) + &comp).hermitian_part(),
        )?)
    };
    let full = xa.kron(xb);
    let state = match &s.state {
        QuantumState::Pure(p) => {
            QuantumState::Pure(p.map_isometry(&full, vec![xa.rows(), xb.rows()])?)
        }
        QuantumState::Mixed(m) => {
            QuantumState::Mixed(m.map_isometry(&full, vec![xa.rows(), xb.rows()])?)
        }
    };
    Ok(SingleGameStrategy::new(
        state,
        [lift(&s.alice[0], xa)?, lift(&s.alice[1], xa)?],
        [lift(&s.bob[0], xb)?, lift(&s.bob[1], xb)?],
    )?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub instance: u64,
    pub amplitude: f64,
    pub epsilon: f64,
    pub state_distance: f64,
    pub operator_distance: f64,
}

/// Ideal strategy embedded by random isometries into `dim`-dimensional
/// devices, with the shared state tilted by `amplitude` toward a random
/// orthogonal direction.
pub fn perturbed_instance(
    seed: u64,
    instance: u64,
    dim: usize,
    amplitude: f64,
) -> Result<SingleGameStrategy> {
    let mut rng = child_rng(seed, instance);
    let xa = random_isometry(&mut rng, 2, dim);
    let xb = random_isometry(&mut rng, 2, dim);
    let base = embed_single_game(&ideal_strategy(), &xa, &xb)?;
    let QuantumState::Pure(p) = &base.state else {
        unreachable!("ideal state is pure")
    };
    let psi = p.amplitudes();
    let mut chi: Vec<C64> = (0..psi.len()).map(|_| gaussian_complex(&mut rng)).collect();
    let overlap: C64 = psi.iter().zip(&chi).map(|(a, b)| a.conj() * b).sum();
    for (c, a) in chi.iter_mut().zip(psi) {
        *c -= overlap * a;
    }
    let nc = norm(&chi);
    let (sa, ca) = amplitude.sin_cos();
    let amps: Vec<C64> = psi
        .iter()
        .zip(&chi)
        .map(|(a, b)| a * ca + b * (sa / nc))
        .collect();
    let state = QuantumState::Pure(PureState::normalized(amps, vec![dim, dim])?);
    Ok(SingleGameStrategy { state, ..base })
}

/// Certificates over a grid of tilt amplitudes; instances run in parallel.
pub fn scaling_sweep(
    seed: u64,
    instances: u64,
    dim: usize,
    amplitudes: &[f64],
) -> Result<Vec<ScalingPoint>> {
    let jobs: Vec<(u64, f64)> = (0..instances)
        .flat_map(|i| amplitudes.iter().map(move |&a| (i, a)))
        .collect();
    jobs.par_iter()
        .map(|&(i, a)| {
            let s = perturbed_instance(seed, i, dim, a)?;
            let c = single_game_certificate(&s)?;
            Ok(ScalingPoint {
                instance: i,
                amplitude: a,
                epsilon: c.epsilon,
                state_distance: c.state_distance,
                operator_distance: c.operator_distance,
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x` over points with both
/// coordinates positive.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    crate::stats::loglog_fit(points).map(|(slope, _)| slope)
}
