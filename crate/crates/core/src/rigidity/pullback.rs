//! Moving one device's measurements onto the other device's half of the
//! EPR pairs, and the guess-and-correct replacement of a measurement.
//!
//! Super-operators here act on the whole register `H_A ⊗ H_B (⊗ H_C)` and
//! prepend a classical register holding `(q_A, x_A, q_B, x_B)` per game as
//! index `8q_A + 4x_A + 2q_B + x_B`.

use std::ops::RangeInclusive;

use super::extract::{ideal_eigenvector, ideal_reflection};
use super::stages::context_frame;
use super::{Result, RigidityError};
use crate::linalg::matrix::{CMatrix, C64, ONE, ZERO};
use crate::linalg::ops::kron_all;
use crate::linalg::SuperOperator;
use crate::sequential::{Device, LocalTranscript, SequentialStrategy, Transcript};

fn projector(m: &CMatrix, answer: u8) -> CMatrix {
    let id = CMatrix::identity(m.rows());
    let sign = if answer == 0 { 1.0 } else { -1.0 };
    (&id + &m.scale_real(sign)).scale_real(0.5)
}

fn is_scalar(m: &CMatrix) -> Option<f64> {
    let c = m[(0, 0)].re;
    m.approx_eq(&CMatrix::identity(m.rows()).scale_real(c), 1e-9)
        .then_some(c)
}

/// Device `d`'s two observables in game `j` as 2×2 matrices on its qubit:
/// `±I` for trivial measurements, otherwise the ideal pair (requiring an
/// ideal-form context).
fn qubit_observables(
    s: &SequentialStrategy,
    d: Device,
    j: usize,
    h: &LocalTranscript,
) -> Result<[CMatrix; 2]> {
    let r0 = s.reflection(d, j, h, 0)?;
    let r1 = s.reflection(d, j, h, 1)?;
    if let (Some(a), Some(b)) = (is_scalar(r0.matrix()), is_scalar(r1.matrix())) {
        return Ok([
            CMatrix::identity(2).scale_real(a),
            CMatrix::identity(2).scale_real(b),
        ]);
    }
    let f = context_frame(s, d, j, h)?;
    if f.unitary.is_none() || f.residual > 1e-9 {
        return Err(RigidityError::NotIdealForm(format!(
            "game {j} of device {d} is not ideal play on a qubit"
        )));
    }
    Ok([ideal_reflection(d, 0), ideal_reflection(d, 1)])
}

/// `U†(M ⊗ I)U` for the frame of device `d` in game `j`; scalar `M` needs
/// no frame.
fn through_frame(
    s: &SequentialStrategy,
    d: Device,
    j: usize,
    h: &LocalTranscript,
    m: &CMatrix,
) -> Result<CMatrix> {
    let dim = s.device_dim(d);
    if let Some(c) = is_scalar(m) {
        return Ok(CMatrix::identity(dim).scale_real(c));
    }
    let f = context_frame(s, d, j, h)?;
    match f.unitary {
        Some(u) if f.residual <= 1e-9 => Ok(u
            .adjoint()
            .matmul(&m.kron(&CMatrix::identity(dim / 2)))
            .matmul(&u)),
        _ => Err(RigidityError::NotIdealForm(format!(
            "no EPR qubit identified for device {d} in game {j}"
        ))),
    }
}

fn local_op(s: &SequentialStrategy, d: Device, op: &CMatrix) -> CMatrix {
    let ia = CMatrix::identity(s.device_dim(Device::A));
    let ib = CMatrix::identity(s.device_dim(Device::B));
    let ic = CMatrix::identity(s.env_dim());
    match d {
        Device::A => kron_all(&[op.clone(), ib, ic]),
        Device::B => kron_all(&[ia, op.clone(), ic]),
    }
}

fn register_ket(index: usize, dim: usize) -> CMatrix {
    let mut v = vec![ZERO; dim];
    v[index] = ONE;
    CMatrix::from_vec(dim, 1, v)
}

/// One game's operator for outcome `(qa, xa, qb, xb)` given both local
/// histories.
type GameOp<'a> = dyn Fn(usize, &Transcript, [u8; 4]) -> Result<CMatrix> + 'a;

fn build(
    s: &SequentialStrategy,
    games: RangeInclusive<usize>,
    prefix: &Transcript,
    op: &GameOp<'_>,
) -> Result<SuperOperator> {
    let (j0, j1) = (*games.start(), *games.end());
    if j0 == 0 || j1 > s.n() || j0 > j1 {
        return Err(RigidityError::Seq(
            crate::sequential::SeqError::InvalidSpec(format!("games {j0}..={j1} out of range")),
        ));
    }
    if prefix.alice.len() + 1 != j0 || prefix.bob.len() + 1 != j0 {
        return Err(RigidityError::Seq(
            crate::sequential::SeqError::InvalidSpec("prefix must cover the earlier games".into()),
        ));
    }
    let len = j1 - j0 + 1;
    let outcomes = 16usize.pow(len as u32);
    let dim = s.total_dim();
    let mut kraus = Vec::with_capacity(outcomes);
    for seq in 0..outcomes {
        let mut h = prefix.clone();
        let mut k = CMatrix::identity(dim);
        for g in 0..len {
            let code = (seq >> (4 * (len - 1 - g))) & 15;
            let bits = [
                (code >> 3) as u8 & 1,
                (code >> 2) as u8 & 1,
                (code >> 1) as u8 & 1,
                code as u8 & 1,
            ];
            k = op(j0 + g, &h, bits)?.matmul(&k);
            h = Transcript {
                alice: h.alice.extended(bits[0], bits[1]),
                bob: h.bob.extended(bits[2], bits[3]),
            };
        }
        if k.max_abs() > 0.0 {
            kraus.push(register_ket(seq, outcomes).kron(&k));
        }
    }
    Ok(SuperOperator::new(kraus)?)
}

/// `E^{AB}` for games `j..=k` after `prefix`, as one super-operator.
pub fn two_sided_superoperator(
    s: &SequentialStrategy,
    games: RangeInclusive<usize>,
    prefix: &Transcript,
) -> Result<SuperOperator> {
    build(s, games, prefix, &|j, h, [qa, xa, qb, xb]| {
        let pa = s.reflection(Device::A, j, &h.alice, qa)?.projector(xa);
        let pb = s.reflection(Device::B, j, &h.bob, qb)?.projector(xb);
        Ok(local_op(s, Device::A, &pa)
            .matmul(&local_op(s, Device::B, &pb))
            .scale_real(0.5))
    })
}

/// `F^{AB}`: device `d`'s ideal measurement in each game is replaced by its
/// transpose on the other device's paired qubit (`(M ⊗ I)|φ⟩ = (I ⊗ Mᵀ)|φ⟩`),
/// located by the other device's own transcript; the other device then
/// measures as usual.
pub fn pull_to_other_side(
    s: &SequentialStrategy,
    d: Device,
    games: RangeInclusive<usize>,
    prefix: &Transcript,
) -> Result<SuperOperator> {
    let o = d.other();
    build(s, games, prefix, &|j, h, bits| {
        let (q, x, qo, xo) = match d {
            Device::A => (bits[0], bits[1], bits[2], bits[3]),
            Device::B => (bits[2], bits[3], bits[0], bits[1]),
        };
        let m = qubit_observables(s, d, j, h.local(d))?;
        let pulled = through_frame(
            s,
            o,
            j,
            h.local(o),
            &projector(&m[q as usize], x).transpose(),
        )?;
        let own = s.reflection(o, j, h.local(o), qo)?.projector(xo);
        Ok(local_op(s, o, &own.matmul(&pulled)).scale_real(0.5))
    })
}

/// Alice's game `j` alone: `|q x⟩ ⊗ P/√2` on the joint register.
pub fn alice_superoperator(
    s: &SequentialStrategy,
    j: usize,
    h: &LocalTranscript,
) -> Result<SuperOperator> {
    let mut kraus = Vec::with_capacity(4);
    for q in 0..2u8 {
        let r = s.reflection(Device::A, j, h, q)?;
        for x in 0..2u8 {
            let op =
                local_op(s, Device::A, &r.projector(x)).scale_real(std::f64::consts::FRAC_1_SQRT_2);
            kraus.push(register_ket((2 * q + x) as usize, 4).kron(&op));
        }
    }
    Ok(SuperOperator::new(kraus)?)
}

/// Bob's guess-and-correct map for game `j`: reading Alice's `(q_A, x_A)`,
/// he samples `y` from the ideal conditional distribution and rotates his
/// EPR half from Alice's collapsed state to his post-measurement state,
/// without measuring. Maps `C⁴ ⊗ H` to `C¹⁶ ⊗ H`.
pub fn guess_and_correct(
    s: &SequentialStrategy,
    j: usize,
    h_bob: &LocalTranscript,
) -> Result<SuperOperator> {
    let dim = s.total_dim();
    let mut kraus = Vec::with_capacity(16);
    for qb in 0..2u8 {
        for y in 0..2u8 {
            let mut k = CMatrix::zeros(16 * dim, 4 * dim);
            for qa in 0..2u8 {
                for xa in 0..2u8 {
                    let ea = ideal_eigenvector(Device::A, qa, xa).map(|z| z.conj());
                    let ea_perp = ideal_eigenvector(Device::A, qa, 1 - xa).map(|z| z.conj());
                    let eb = ideal_eigenvector(Device::B, qb, y);
                    let eb_perp = ideal_eigenvector(Device::B, qb, 1 - y);
                    let overlap: C64 = eb[0].conj() * ea[0] + eb[1].conj() * ea[1];
                    let p = overlap.norm_sqr();
                    let corr = &CMatrix::outer(&eb, &ea) + &CMatrix::outer(&eb_perp, &ea_perp);
                    let op = local_op(s, Device::B, &through_frame(s, Device::B, j, h_bob, &corr)?)
                        .scale_real((0.5 * p).sqrt());
                    let row = ((2 * qa + xa) * 4 + 2 * qb + y) as usize;
                    let col = (2 * qa + xa) as usize;
                    for r in 0..dim {
                        for c in 0..dim {
                            k[(row * dim + r, col * dim + c)] = op[(r, c)];
                        }
                    }
                }
            }
            kraus.push(k);
        }
    }
    Ok(SuperOperator::new(kraus)?)
}
