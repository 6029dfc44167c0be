//! Simultaneous block diagonalization of two reflections.
//!
//! The `+1` eigenspace `V₊` of `R0` is diagonalized under the compression of
//! `R1`. Each eigenvector `v` with `R1 v = c v + s w` (`w ∈ V₋`, `s > 0`)
//! spans a 2×2 block `{v, w}`; the rest of `V₋` splits into 1×1 blocks.

use serde::{Deserialize, Serialize};

use super::{Result, RigidityError};
use crate::linalg::eigen::hermitian_eigen;
use crate::linalg::matrix::{inner, norm, CMatrix, C64, ZERO};
use crate::linalg::Reflection;

/// Coupling `s` below which an eigenvector of the compressed `R1` is taken
/// to be a common eigenvector (1×1 block).
pub const COUPLING_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// Two-dimensional invariant subspace.
    Genuine,
    /// A 1×1 block inflated with a placeholder dimension.
    Padded,
    /// Two 1×1 blocks with opposite `R0` eigenvalues grouped together.
    Paired,
}

/// One block in the basis where `r0 = σ_z`. For padded blocks the missing
/// slot carries the placeholder entries `r0 = ∓1`, `r1 = −(other entry)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JordanBlock {
    /// Basis columns spanned by the block; `None` marks a placeholder.
    pub slots: [Option<usize>; 2],
    pub r0: CMatrix,
    pub r1: CMatrix,
    pub kind: BlockKind,
}

impl JordanBlock {
    pub fn is_degenerate(&self) -> bool {
        self.kind != BlockKind::Genuine
    }

    /// `θ` with `r1 = cos2θ σ_z + sin2θ σ_x`. Degenerate blocks get 0 or π/2.
    pub fn angle(&self) -> f64 {
        0.5 * self.r1[(0, 1)].re.atan2(self.r1[(0, 0)].re)
    }

    pub fn width(&self) -> usize {
        self.slots.iter().flatten().count()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JordanDecomposition {
    /// Unitary; column `k` is the `k`th basis vector.
    pub basis: CMatrix,
    pub blocks: Vec<JordanBlock>,
    pub padding_flags: Vec<bool>,
}

impl JordanDecomposition {
    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn block_vectors(&self, i: usize) -> Vec<Vec<C64>> {
        self.blocks[i]
            .slots
            .iter()
            .flatten()
            .map(|&k| self.basis.column(k))
            .collect()
    }

    /// Projector onto block `i`'s span.
    pub fn block_projector(&self, i: usize) -> CMatrix {
        let d = self.dim();
        let mut p = CMatrix::zeros(d, d);
        for v in self.block_vectors(i) {
            p = &p + &CMatrix::outer(&v, &v);
        }
        p
    }

    /// `(R0, R1)` rebuilt from the blocks.
    pub fn reconstruct(&self) -> (CMatrix, CMatrix) {
        let d = self.dim();
        let mut m0 = CMatrix::zeros(d, d);
        let mut m1 = CMatrix::zeros(d, d);
        for b in &self.blocks {
            for (s, ks) in b.slots.iter().enumerate() {
                for (t, kt) in b.slots.iter().enumerate() {
                    if let (Some(ks), Some(kt)) = (ks, kt) {
                        m0[(*ks, *kt)] = b.r0[(s, t)];
                        m1[(*ks, *kt)] = b.r1[(s, t)];
                    }
                }
            }
        }
        (self.basis.conjugate(&m0), self.basis.conjugate(&m1))
    }

    pub fn residual(&self, r0: &CMatrix, r1: &CMatrix) -> f64 {
        let (m0, m1) = self.reconstruct();
        m0.max_abs_diff(r0).max(m1.max_abs_diff(r1))
    }

    /// True when no placeholder slots were needed.
    pub fn is_square(&self) -> bool {
        self.blocks.iter().all(|b| b.width() == 2)
    }
}

/// Every 1×1 block padded to 2×2 on its own.
pub fn jordan_decompose(r0: &CMatrix, r1: &CMatrix) -> Result<JordanDecomposition> {
    decompose(r0, r1, false)
}

/// As `jordan_decompose`, but 1×1 blocks with opposite `R0` eigenvalues are
/// grouped pairwise, so a balanced `R0` needs no placeholders.
pub fn jordan_decompose_compact(r0: &CMatrix, r1: &CMatrix) -> Result<JordanDecomposition> {
    decompose(r0, r1, true)
}

fn diag2(a: f64, b: f64) -> CMatrix {
    CMatrix::from_real(2, 2, &[a, 0.0, 0.0, b])
}

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn decompose(r0: &CMatrix, r1: &CMatrix, compact: bool) -> Result<JordanDecomposition> {
    let r0 = Reflection::new(r0.clone())?;
    let r1 = Reflection::new(r1.clone())?;
    let d = r0.dim();
    if r1.dim() != d {
        return Err(RigidityError::Numerical(format!(
            "reflections of dimensions {d} and {}",
            r1.dim()
        )));
    }
    let (r0, r1) = (r0.matrix(), r1.matrix());
    let e0 = hermitian_eigen(r0);
    let plus: Vec<Vec<C64>> = (0..d)
        .filter(|&k| e0.values[k] > 0.0)
        .map(|k| e0.vector(k))
        .collect();
    let minus: Vec<Vec<C64>> = (0..d)
        .filter(|&k| e0.values[k] <= 0.0)
        .map(|k| e0.vector(k))
        .collect();

    let p = plus.len();
    let pm = CMatrix::from_fn(d, p, |i, k| plus[k][i]);
    let compressed = pm.adjoint().matmul(r1).matmul(&pm).hermitian_part();
    let ek = hermitian_eigen(&compressed);

    let mut genuine: Vec<(Vec<C64>, Vec<C64>, f64, f64)> = Vec::new();
    let mut plus_single: Vec<(Vec<C64>, f64)> = Vec::new();
    let mut ws: Vec<Vec<C64>> = Vec::new();
    for k in 0..p {
        let c = ek.values[k];
        let v = pm.apply(&ek.vector(k));
        let rv = r1.apply(&v);
        let mut w = vec![ZERO; d];
        for m in &minus {
            let coef = inner(m, &rv);
            for (x, y) in w.iter_mut().zip(m) {
                *x += coef * y;
            }
        }
        let s = norm(&w);
        if s > COUPLING_TOL {
            for _ in 0..2 {
                for prev in &ws {
                    let coef = inner(prev, &w);
                    for (x, y) in w.iter_mut().zip(prev) {
                        *x -= coef * y;
                    }
                }
            }
            let nw = norm(&w);
            let w: Vec<C64> = w.iter().map(|z| z / nw).collect();
            ws.push(w.clone());
            genuine.push((v, w, c.clamp(-1.0, 1.0), s.min(1.0)));
        } else {
            plus_single.push((v, sign(c)));
        }
    }

    // Complement of the paired vectors inside V₋, diagonalized under R1.
    let mut minus_single: Vec<(Vec<C64>, f64)> = Vec::new();
    if minus.len() > ws.len() {
        let mut q = CMatrix::zeros(d, d);
        for m in &minus {
            q = &q + &CMatrix::outer(m, m);
        }
        for w in &ws {
            q = &q - &CMatrix::outer(w, w);
        }
        let eq = hermitian_eigen(&q.hermitian_part());
        let rest: Vec<Vec<C64>> = (0..d)
            .filter(|&k| eq.values[k] > 0.5)
            .map(|k| eq.vector(k))
            .collect();
        let zm = CMatrix::from_fn(d, rest.len(), |i, k| rest[k][i]);
        let el = hermitian_eigen(&zm.adjoint().matmul(r1).matmul(&zm).hermitian_part());
        for k in 0..rest.len() {
            minus_single.push((zm.apply(&el.vector(k)), sign(el.values[k])));
        }
    }

    let total = 2 * genuine.len() + plus_single.len() + minus_single.len();
    if total != d {
        return Err(RigidityError::Numerical(format!(
            "Jordan basis has {total} vectors for dimension {d}"
        )));
    }

    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(d);
    let mut blocks = Vec::new();
    let push = |columns: &mut Vec<Vec<C64>>, v: Vec<C64>| {
        columns.push(v);
        Some(columns.len() - 1)
    };
    let sz = diag2(1.0, -1.0);
    for (v, w, c, s) in genuine {
        let a = push(&mut columns, v);
        let b = push(&mut columns, w);
        blocks.push(JordanBlock {
            slots: [a, b],
            r0: sz.clone(),
            r1: CMatrix::from_real(2, 2, &[c, s, s, -c]),
            kind: BlockKind::Genuine,
        });
    }
    let mut plus_iter = plus_single.into_iter();
    let mut minus_iter = minus_single.into_iter();
    loop {
        let pv = plus_iter.next();
        let mv = if compact || pv.is_none() {
            minus_iter.next()
        } else {
            None
        };
        match (pv, mv) {
            (None, None) => break,
            (Some((v, a)), Some((z, b))) => {
                let sa = push(&mut columns, v);
                let sb = push(&mut columns, z);
                blocks.push(JordanBlock {
                    slots: [sa, sb],
                    r0: sz.clone(),
                    r1: diag2(a, b),
                    kind: BlockKind::Paired,
                });
            }
            (Some((v, a)), None) => {
                let sa = push(&mut columns, v);
                blocks.push(JordanBlock {
                    slots: [sa, None],
                    r0: sz.clone(),
                    r1: diag2(a, -a),
                    kind: BlockKind::Padded,
                });
            }
            (None, Some((z, b))) => {
                let sb = push(&mut columns, z);
                blocks.push(JordanBlock {
                    slots: [None, sb],
                    r0: sz.clone(),
                    r1: diag2(-b, b),
                    kind: BlockKind::Padded,
                });
            }
        }
    }
    let basis = CMatrix::from_fn(d, d, |i, k| columns[k][i]);
    let padding_flags = blocks.iter().map(|b| b.kind == BlockKind::Padded).collect();
    Ok(JordanDecomposition {
        basis,
        blocks,
        padding_flags,
    })
}
