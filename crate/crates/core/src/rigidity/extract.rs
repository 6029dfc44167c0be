//! Local isometries that carry each device's reflections to the ideal pair.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::jordan::{jordan_decompose, jordan_decompose_compact, BlockKind, JordanDecomposition};
use super::Result;
use crate::chsh::SingleGameStrategy;
use crate::linalg::matrix::{CMatrix, C64, ZERO};
use crate::linalg::pauli::{pauli_x, pauli_z, real_reflection};
use crate::sequential::Device;

/// Ideal reflection for `question`: Alice `(σ_z ± σ_x)/√2`, Bob `σ_z`, `σ_x`.
pub fn ideal_reflection(d: Device, question: u8) -> CMatrix {
    match (d, question) {
        (Device::A, 0) => real_reflection(PI / 8.0),
        (Device::A, _) => real_reflection(-PI / 8.0),
        (Device::B, 0) => pauli_z(),
        (Device::B, _) => pauli_x(),
    }
}

/// Post-measurement qubit of the ideal measurement: the `(−1)^answer`
/// eigenvector of `ideal_reflection(d, question)`.
pub fn ideal_eigenvector(d: Device, question: u8, answer: u8) -> [C64; 2] {
    let theta = match (d, question) {
        (Device::A, 0) => PI / 8.0,
        (Device::A, _) => -PI / 8.0,
        (Device::B, 0) => 0.0,
        (Device::B, _) => PI / 4.0,
    };
    let (s, c) = theta.sin_cos();
    if answer == 0 {
        [C64::new(c, 0.0), C64::new(s, 0.0)]
    } else {
        [C64::new(-s, 0.0), C64::new(c, 0.0)]
    }
}

fn rotation(beta: f64) -> CMatrix {
    let (s, c) = beta.sin_cos();
    CMatrix::from_real(2, 2, &[c, -s, s, c])
}

/// 2×2 unitary taking a block `(σ_z, refl(θ))` to the ideal pair. Rotating
/// by `(π/4 − θ)/2` centres the two axes on π/8; Alice then reflects about
/// π/16 to land on `±π/8`.
pub fn block_alignment(d: Device, theta: f64, kind: BlockKind, r1: &CMatrix) -> CMatrix {
    let scalar = kind == BlockKind::Paired && (r1[(0, 0)] - r1[(1, 1)]).norm() < 1e-12;
    let beta = if scalar {
        0.0
    } else {
        (PI / 4.0 - theta) / 2.0
    };
    let rot = rotation(beta);
    match d {
        Device::A => real_reflection(PI / 16.0).matmul(&rot),
        Device::B => rot,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviceExtraction {
    pub device: Device,
    pub jordan: JordanDecomposition,
    /// `2m × d`; row `s·m + i` is qubit `s` of block `i`.
    pub isometry: CMatrix,
    pub junk_dim: usize,
    pub angles: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl DeviceExtraction {
    /// `X† (ideal_q ⊗ I) X` on the device space.
    pub fn ideal_pullback(&self, question: u8) -> CMatrix {
        let lifted =
            ideal_reflection(self.device, question).kron(&CMatrix::identity(self.junk_dim));
        self.isometry
            .adjoint()
            .matmul(&lifted)
            .matmul(&self.isometry)
            .hermitian_part()
    }

    pub fn any_degenerate(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }

    pub fn is_unitary(&self) -> bool {
        self.isometry.rows() == self.isometry.cols()
    }

    /// Largest entry of `R_q − X†(ideal_q ⊗ I)X` over both questions.
    pub fn ideal_residual(&self, r: [&CMatrix; 2]) -> f64 {
        (0..2u8)
            .map(|q| self.ideal_pullback(q).max_abs_diff(r[q as usize]))
            .fold(0.0, f64::max)
    }
}

/// Jordan-decompose `(r0, r1)` and align every block with the ideal pair.
/// `compact` groups 1×1 blocks so balanced inputs give a square unitary.
pub fn extract_device(
    d: Device,
    r0: &CMatrix,
    r1: &CMatrix,
    compact: bool,
) -> Result<DeviceExtraction> {
    let jordan = if compact {
        jordan_decompose_compact(r0, r1)?
    } else {
        jordan_decompose(r0, r1)?
    };
    let m = jordan.blocks.len();
    let dim = jordan.dim();
    let mut iso = CMatrix::zeros(2 * m, dim);
    let mut angles = Vec::with_capacity(m);
    let mut degenerate = Vec::with_capacity(m);
    for (i, b) in jordan.blocks.iter().enumerate() {
        let theta = b.angle();
        let c = block_alignment(d, theta, b.kind, &b.r1);
        for (t, slot) in b.slots.iter().enumerate() {
            let Some(k) = slot else { continue };
            let v = jordan.basis.column(*k);
            for s in 0..2 {
                let coef = c[(s, t)];
                if coef == ZERO {
                    continue;
                }
                for (col, z) in v.iter().enumerate() {
                    iso[(s * m + i, col)] += coef * z.conj();
                }
            }
        }
        angles.push(theta);
        degenerate.push(b.is_degenerate());
    }
    Ok(DeviceExtraction {
        device: d,
        jordan,
        isometry: iso,
        junk_dim: m,
        angles,
        degenerate,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingleGameExtraction {
    pub alice: DeviceExtraction,
    pub bob: DeviceExtraction,
    /// Probability of each Jordan block index on the shared state.
    pub alice_masses: Vec<f64>,
    pub bob_masses: Vec<f64>,
}

impl SingleGameExtraction {
    pub fn device(&self, d: Device) -> &DeviceExtraction {
        match d {
            Device::A => &self.alice,
            Device::B => &self.bob,
        }
    }

    /// Mass-weighted angle over non-degenerate blocks; `None` when no such
    /// block carries weight.
    pub fn angle_summary(&self, d: Device) -> Option<f64> {
        let (ex, masses) = match d {
            Device::A => (&self.alice, &self.alice_masses),
            Device::B => (&self.bob, &self.bob_masses),
        };
        let mut w = 0.0;
        let mut acc = 0.0;
        for ((theta, deg), p) in ex.angles.iter().zip(&ex.degenerate).zip(masses) {
            if !deg {
                w += p;
                acc += p * theta;
            }
        }
        (w > 1e-12).then(|| acc / w)
    }
}

/// Per-block probabilities of measuring the block index on one side.
pub fn block_masses(
    jordan: &JordanDecomposition,
    components: &[Vec<C64>],
    dims: [usize; 2],
    side: usize,
) -> Vec<f64> {
    let basis_adj = jordan.basis.adjoint();
    let (da, db) = (dims[0], dims[1]);
    let mut per_column = vec![0.0; jordan.dim()];
    for u in components {
        let v = if side == 0 {
            crate::linalg::ops::apply_local(u, &dims, &basis_adj, &[0])
        } else {
            crate::linalg::ops::apply_local(u, &dims, &basis_adj, &[1])
        }
        .expect("basis matches device");
        for a in 0..da {
            for b in 0..db {
                let k = if side == 0 { a } else { b };
                per_column[k] += v[a * db + b].norm_sqr();
            }
        }
    }
    jordan
        .blocks
        .iter()
        .map(|b| b.slots.iter().flatten().map(|&k| per_column[k]).sum())
        .collect()
}

pub fn extract_single_game_isometry(s: &SingleGameStrategy) -> Result<SingleGameExtraction> {
    s.check_dims()?;
    let alice = extract_device(Device::A, s.alice[0].matrix(), s.alice[1].matrix(), false)?;
    let bob = extract_device(Device::B, s.bob[0].matrix(), s.bob[1].matrix(), false)?;
    let comps = super::state_components(&s.state)?;
    let dims = [s.alice_dim(), s.bob_dim()];
    let alice_masses = block_masses(&alice.jordan, &comps, dims, 0);
    let bob_masses = block_masses(&bob.jordan, &comps, dims, 1);
    Ok(SingleGameExtraction {
        alice,
        bob,
        alice_masses,
        bob_masses,
    })
}
