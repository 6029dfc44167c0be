use super::eigen::trace_norm_hermitian;
use super::matrix::{CMatrix, C64, ONE, ZERO};
use super::states::{DensityMatrix, LinalgError, PureState, Result, Tolerance, MAX_DIM};

/// Anything that can be tensored together.
#[derive(Clone, Debug, PartialEq)]
pub enum QObject {
    Pure(PureState),
    Density(DensityMatrix),
    Operator(CMatrix),
}

/// Kronecker product of the factors in the listed order.
pub fn tensor(factors: &[QObject]) -> Result<QObject> {
    let (first, rest) = factors.split_first().ok_or(LinalgError::EmptyTensor)?;
    let mut acc = first.clone();
    for f in rest {
        acc = match (acc, f) {
            (QObject::Pure(a), QObject::Pure(b)) => QObject::Pure(a.tensor(b)?),
            (QObject::Density(a), QObject::Density(b)) => QObject::Density(a.tensor(b)?),
            (QObject::Operator(a), QObject::Operator(b)) => {
                let d = a.rows() * b.rows();
                if d > MAX_DIM || a.cols() * b.cols() > MAX_DIM {
                    return Err(LinalgError::Capacity(d.max(a.cols() * b.cols())));
                }
                QObject::Operator(a.kron(b))
            }
            _ => return Err(LinalgError::MixedKinds),
        };
    }
    Ok(acc)
}

pub fn kron_all(ops: &[CMatrix]) -> CMatrix {
    let mut acc = CMatrix::identity(1);
    for o in ops {
        acc = acc.kron(o);
    }
    acc
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Flat-index offsets for every assignment of the listed subsystems, in
/// row-major order of those subsystems.
fn offsets(dims: &[usize], subsystems: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = vec![0usize];
    for &s in subsystems {
        let mut next = Vec::with_capacity(out.len() * dims[s]);
        for &o in &out {
            for v in 0..dims[s] {
                next.push(o + v * st[s]);
            }
        }
        out = next;
    }
    out
}

fn split_keep(dims: &[usize], keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut kept: Vec<usize> = Vec::new();
    for &k in keep {
        if k >= dims.len() {
            return Err(LinalgError::IndexOutOfRange(k));
        }
        if !kept.contains(&k) {
            kept.push(k);
        }
    }
    kept.sort_unstable();
    let traced = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    Ok((kept, traced))
}

/// Reduced state on `keep` (kept subsystems stay in ascending order). Keeping
/// nothing yields the 1×1 matrix holding the trace.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let out = partial_trace_matrix(rho.matrix(), rho.dims(), keep)?;
    let (kept, _) = split_keep(rho.dims(), keep)?;
    let dims: Vec<usize> = kept.iter().map(|&k| rho.dims()[k]).collect();
    Ok(DensityMatrix::from_parts_unchecked(out, dims))
}

/// Partial trace of an arbitrary square operator with the given subsystem dims.
pub fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if m.rows() != total || !m.is_square() {
        return Err(LinalgError::DimsMismatch {
            dims: dims.to_vec(),
            len: m.rows(),
        });
    }
    let (kept, traced) = split_keep(dims, keep)?;
    let ko = offsets(dims, &kept);
    let to = offsets(dims, &traced);
    let mut out = CMatrix::zeros(ko.len(), ko.len());
    for (a, &ia) in ko.iter().enumerate() {
        for (b, &ib) in ko.iter().enumerate() {
            let mut s = ZERO;
            for &t in &to {
                s += m[(ia + t, ib + t)];
            }
            out[(a, b)] = s;
        }
    }
    Ok(out)
}

/// Reduced density matrix of a pure state without forming `|ψ⟩⟨ψ|`.
pub fn reduced_state(psi: &PureState, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = psi.dims();
    let (kept, traced) = split_keep(dims, keep)?;
    let ko = offsets(dims, &kept);
    let to = offsets(dims, &traced);
    let a = psi.amplitudes();
    let mut out = CMatrix::zeros(ko.len(), ko.len());
    for (x, &ix) in ko.iter().enumerate() {
        for (y, &iy) in ko.iter().enumerate().skip(x) {
            let s: C64 = to.iter().map(|&t| a[ix + t] * a[iy + t].conj()).sum();
            out[(x, y)] = s;
            out[(y, x)] = s.conj();
        }
    }
    let new_dims = kept.iter().map(|&k| dims[k]).collect();
    Ok(DensityMatrix::from_parts_unchecked(out, new_dims))
}

/// ½ · (sum of singular values of a − b).
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(LinalgError::DimMismatch(a.dim(), b.dim()));
    }
    Ok(trace_distance_matrix(a.matrix(), b.matrix()))
}

/// ½‖a − b‖₁ for Hermitian matrices of equal size.
pub fn trace_distance_matrix(a: &CMatrix, b: &CMatrix) -> f64 {
    (0.5 * trace_norm_hermitian(&(a - b))).max(0.0)
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub probability: f64,
    /// `None` when the outcome has zero probability.
    pub post_state: Option<DensityMatrix>,
}

pub fn check_projective_measurement(projectors: &[CMatrix], dim: usize, tol: f64) -> Result<()> {
    if projectors.is_empty() {
        return Err(LinalgError::IncompleteProjectors);
    }
    let mut sum = CMatrix::zeros(dim, dim);
    for p in projectors {
        if p.rows() != dim || p.cols() != dim {
            return Err(LinalgError::DimMismatch(p.rows(), dim));
        }
        if !p.is_hermitian(tol) || !p.matmul(p).approx_eq(p, tol) {
            return Err(LinalgError::IncompleteProjectors);
        }
        sum = &sum + p;
    }
    if !sum.approx_eq(&CMatrix::identity(dim), tol) {
        return Err(LinalgError::IncompleteProjectors);
    }
    Ok(())
}

/// Outcome probabilities `Tr(Pρ)` and post-states `PρP / Tr(Pρ)`.
pub fn measure_projective(rho: &DensityMatrix, projectors: &[CMatrix]) -> Result<Vec<Outcome>> {
    measure_projective_with_tol(rho, projectors, Tolerance::default())
}

pub fn measure_projective_with_tol(
    rho: &DensityMatrix,
    projectors: &[CMatrix],
    tol: Tolerance,
) -> Result<Vec<Outcome>> {
    check_projective_measurement(projectors, rho.dim(), tol.validity)?;
    let mut out = Vec::with_capacity(projectors.len());
    for p in projectors {
        let unnorm = p.matmul(rho.matrix()).matmul(p);
        let prob = unnorm.trace().re.max(0.0);
        let post_state = if prob > tol.validity {
            Some(DensityMatrix::from_parts_unchecked(
                unnorm.scale_real(1.0 / prob),
                rho.dims().to_vec(),
            ))
        } else {
            None
        };
        out.push(Outcome {
            probability: prob,
            post_state,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GentleBound {
    pub probability: f64,
    pub bound: f64,
    /// Measured `trace_distance(ρ, XρX/p)`.
    pub distance: f64,
}

/// `p = Tr(Xρ)`, `bound = 2√(1 − p)`, plus the measured disturbance.
pub fn gentle_measurement_bound(rho: &DensityMatrix, x: &CMatrix) -> Result<GentleBound> {
    let tol = Tolerance::default().validity;
    if x.rows() != rho.dim() || !x.is_square() {
        return Err(LinalgError::DimMismatch(x.rows(), rho.dim()));
    }
    if !x.is_hermitian(tol) || !x.matmul(x).approx_eq(x, tol) {
        return Err(LinalgError::IncompleteProjectors);
    }
    let p = x.matmul(rho.matrix()).trace().re;
    if p <= tol {
        return Err(LinalgError::ZeroProbability);
    }
    let post = x.matmul(rho.matrix()).matmul(x).scale_real(1.0 / p);
    let distance = trace_distance_matrix(rho.matrix(), &post);
    let bound = 2.0 * (1.0 - p).max(0.0).sqrt();
    assert!(
        distance <= bound + 1e-9,
        "gentle measurement bound violated: {distance} > {bound}"
    );
    Ok(GentleBound {
        probability: p,
        bound,
        distance,
    })
}

/// Dense embedding of `op` acting on `targets` (in the order given) of a
/// register with subsystem `dims`.
pub fn embed_operator(op: &CMatrix, dims: &[usize], targets: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if total > MAX_DIM {
        return Err(LinalgError::Capacity(total));
    }
    for &t in targets {
        if t >= dims.len() {
            return Err(LinalgError::IndexOutOfRange(t));
        }
    }
    let tdim: usize = targets.iter().map(|&t| dims[t]).product();
    if op.rows() != tdim || op.cols() != tdim {
        return Err(LinalgError::DimMismatch(op.rows(), tdim));
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !targets.contains(k)).collect();
    let to = offsets(dims, targets);
    let ro = offsets(dims, &rest);
    let mut out = CMatrix::zeros(total, total);
    for &r in &ro {
        for (a, &ia) in to.iter().enumerate() {
            for (b, &ib) in to.iter().enumerate() {
                let v = op[(a, b)];
                if v != ZERO {
                    out[(r + ia, r + ib)] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Apply `op` to `targets` of a state vector without forming the full matrix.
pub fn apply_local(
    amps: &[C64],
    dims: &[usize],
    op: &CMatrix,
    targets: &[usize],
) -> Result<Vec<C64>> {
    for &t in targets {
        if t >= dims.len() {
            return Err(LinalgError::IndexOutOfRange(t));
        }
    }
    let tdim: usize = targets.iter().map(|&t| dims[t]).product();
    if op.rows() != tdim || op.cols() != tdim {
        return Err(LinalgError::DimMismatch(op.rows(), tdim));
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !targets.contains(k)).collect();
    let to = offsets(dims, targets);
    let ro = offsets(dims, &rest);
    let mut out = vec![ZERO; amps.len()];
    let mut local = vec![ZERO; tdim];
    for &r in &ro {
        for (a, &ia) in to.iter().enumerate() {
            local[a] = amps[r + ia];
        }
        for (a, &ia) in to.iter().enumerate() {
            let mut s = ZERO;
            for (b, l) in local.iter().enumerate() {
                s += op[(a, b)] * l;
            }
            out[r + ia] = s;
        }
    }
    Ok(out)
}

/// Reorder subsystems: output subsystem `k` is input subsystem `order[k]`.
pub fn permute_subsystems(
    amps: &[C64],
    dims: &[usize],
    order: &[usize],
) -> Result<(Vec<C64>, Vec<usize>)> {
    let mut seen = vec![false; dims.len()];
    if order.len() != dims.len() {
        return Err(LinalgError::DimMismatch(order.len(), dims.len()));
    }
    for &o in order {
        if o >= dims.len() || seen[o] {
            return Err(LinalgError::IndexOutOfRange(o));
        }
        seen[o] = true;
    }
    let new_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    let src = offsets(dims, order);
    let out = src.iter().map(|&i| amps[i]).collect();
    Ok((out, new_dims))
}

/// Permutation matrix implementing `permute_subsystems` on vectors.
pub fn permutation_matrix(dims: &[usize], order: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    let src = {
        let probe: Vec<C64> = (0..total).map(|i| C64::new(i as f64, 0.0)).collect();
        permute_subsystems(&probe, dims, order)?.0
    };
    let mut p = CMatrix::zeros(total, total);
    for (row, v) in src.iter().enumerate() {
        p[(row, v.re as usize)] = ONE;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ket0() -> PureState {
        PureState::from_real(&[1.0, 0.0], vec![2]).unwrap()
    }

    fn ket_plus() -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_real(&[h, h], vec![2]).unwrap()
    }

    #[test]
    fn tensor_of_kets() {
        let t = tensor(&[QObject::Pure(ket0()), QObject::Pure(ket0())]).unwrap();
        match t {
            QObject::Pure(p) => assert_eq!(p.amplitudes(), &[ONE, ZERO, ZERO, ZERO]),
            _ => panic!(),
        }
    }

    #[test]
    fn tensor_errors() {
        assert_eq!(tensor(&[]), Err(LinalgError::EmptyTensor));
        let mixed = [
            QObject::Pure(ket0()),
            QObject::Operator(CMatrix::identity(2)),
        ];
        assert_eq!(tensor(&mixed), Err(LinalgError::MixedKinds));
    }

    #[test]
    fn double_epr_dims() {
        let t = tensor(&[
            QObject::Pure(PureState::epr()),
            QObject::Pure(PureState::epr()),
        ])
        .unwrap();
        if let QObject::Pure(p) = t {
            assert_eq!(p.dims(), &[2, 2, 2, 2]);
        }
    }

    #[test]
    fn epr_marginal_is_maximally_mixed() {
        let rho = PureState::epr().density();
        let red = partial_trace(&rho, &[0]).unwrap();
        assert!(red
            .matrix()
            .approx_eq(&CMatrix::identity(2).scale_real(0.5), 1e-15));
        let red2 = reduced_state(&PureState::epr(), &[1]).unwrap();
        assert!(red2.matrix().approx_eq(red.matrix(), 1e-15));
    }

    #[test]
    fn partial_trace_edge_cases() {
        let rho = ket_plus().density();
        let sigma = ket0().density();
        let joint = rho.tensor(&sigma).unwrap();
        assert!(partial_trace(&joint, &[0])
            .unwrap()
            .matrix()
            .approx_eq(rho.matrix(), 1e-15));
        let scalar = partial_trace(&joint, &[]).unwrap();
        assert!((scalar.matrix()[(0, 0)] - ONE).norm() < 1e-15);
        assert_eq!(
            partial_trace(&joint, &[2]).unwrap_err(),
            LinalgError::IndexOutOfRange(2)
        );
    }

    #[test]
    fn trace_distance_values() {
        let d01 = trace_distance(
            &ket0().density(),
            &PureState::from_real(&[0.0, 1.0], vec![2])
                .unwrap()
                .density(),
        );
        assert!((d01.unwrap() - 1.0).abs() < 1e-14);
        let d = trace_distance(&ket0().density(), &ket_plus().density()).unwrap();
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(trace_distance(&ket0().density(), &PureState::epr().density()).is_err());
    }

    #[test]
    fn z_measurement_of_plus() {
        let p0 = CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let p1 = CMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let out = measure_projective(&ket_plus().density(), &[p0.clone(), p1]).unwrap();
        assert!((out[0].probability - 0.5).abs() < 1e-14);
        assert!(out[0]
            .post_state
            .as_ref()
            .unwrap()
            .matrix()
            .approx_eq(&p0, 1e-14));
        assert!(measure_projective(&ket_plus().density(), &[p0]).is_err());
    }

    #[test]
    fn gentle_bound_example() {
        let p0 = CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let g = gentle_measurement_bound(&ket_plus().density(), &p0).unwrap();
        assert!((g.probability - 0.5).abs() < 1e-14);
        assert!((g.bound - 2f64.sqrt()).abs() < 1e-12);
        assert!((g.distance - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let p1 = CMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(
            gentle_measurement_bound(&ket0().density(), &p1).unwrap_err(),
            LinalgError::ZeroProbability
        );
    }

    #[test]
    fn embed_matches_kron() {
        let z = CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let e = embed_operator(&z, &[2, 2, 2], &[1]).unwrap();
        let k = kron_all(&[CMatrix::identity(2), z.clone(), CMatrix::identity(2)]);
        assert!(e.approx_eq(&k, 0.0));
    }

    #[test]
    fn apply_local_matches_embedding() {
        let psi = PureState::normalized(
            (0..8).map(|i| C64::new(i as f64, 1.0)).collect(),
            vec![2, 2, 2],
        )
        .unwrap();
        let cnot = CMatrix::from_real(
            4,
            4,
            &[
                1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.,
            ],
        );
        let via_local = apply_local(psi.amplitudes(), psi.dims(), &cnot, &[2, 0]).unwrap();
        let via_embed = embed_operator(&cnot, psi.dims(), &[2, 0])
            .unwrap()
            .apply(psi.amplitudes());
        for (a, b) in via_local.iter().zip(&via_embed) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn permutation_swaps_qubits() {
        let v = vec![ZERO, ONE, ZERO, ZERO]; // |01⟩
        let (out, _) = permute_subsystems(&v, &[2, 2], &[1, 0]).unwrap();
        assert_eq!(out, vec![ZERO, ZERO, ONE, ZERO]);
        let p = permutation_matrix(&[2, 2], &[1, 0]).unwrap();
        assert_eq!(p.apply(&v), out);
    }
}
