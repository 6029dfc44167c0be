use proptest::prelude::*;
use qverify_core::linalg::{
    apply_local, partial_trace, partial_trace_matrix, trace_distance_matrix, CMatrix,
    DensityMatrix, PureState, SuperOperator, C64,
};
use qverify_core::rng::{child_rng, haar_unitary, random_density_matrix};

fn random_rho(seed: u64, stream: u64, dim: usize) -> CMatrix {
    let mut r = child_rng(seed, stream);
    random_density_matrix(&mut r, dim, 1 + (stream as usize % dim))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_distance_triangle(seed in any::<u64>(), dim in 2usize..6) {
        let a = random_rho(seed, 0, dim);
        let b = random_rho(seed, 1, dim);
        let c = random_rho(seed, 2, dim);
        let ab = trace_distance_matrix(&a, &b);
        let bc = trace_distance_matrix(&b, &c);
        let ac = trace_distance_matrix(&a, &c);
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!((ab - trace_distance_matrix(&b, &a)).abs() < 1e-9);
    }

    #[test]
    fn trace_distance_unitary_invariance(seed in any::<u64>(), dim in 2usize..6) {
        let a = random_rho(seed, 0, dim);
        let b = random_rho(seed, 1, dim);
        let u = haar_unitary(&mut child_rng(seed, 9), dim);
        let before = trace_distance_matrix(&a, &b);
        let after = trace_distance_matrix(&u.conjugate(&a), &u.conjugate(&b));
        prop_assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn transpose_trick_on_epr(re in proptest::collection::vec(-3.0f64..3.0, 8)) {
        let m = CMatrix::from_vec(2, 2, (0..4).map(|k| C64::new(re[2 * k], re[2 * k + 1])).collect());
        let phi: Vec<C64> = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let left = apply_local(&phi, &[2, 2], &m, &[0]).unwrap();
        let right = apply_local(&phi, &[2, 2], &m.transpose(), &[1]).unwrap();
        for (a, b) in left.iter().zip(&right) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn partial_trace_commutes_with_local_channel(seed in any::<u64>()) {
        // Channel on subsystem 0 of a (2 ⊗ 3) system; trace out subsystem 1.
        let mut r = child_rng(seed, 5);
        let u = haar_unitary(&mut r, 4);
        // Kraus terms from a 2-dim environment: K_e[i][j] = ⟨i, e| U |j, 0⟩.
        let kraus: Vec<CMatrix> = (0..2).map(|e| CMatrix::from_fn(2, 2, |i, j| u[(2 * i + e, 2 * j)])).collect();
        let chan = SuperOperator::new(kraus).unwrap();
        let ext = chan.tensor(&SuperOperator::identity(3));
        let rho = random_rho(seed, 6, 6);
        let lhs = partial_trace_matrix(&ext.apply_matrix(&rho), &[2, 3], &[0]).unwrap();
        let rhs = chan.apply_matrix(&partial_trace_matrix(&rho, &[2, 3], &[0]).unwrap());
        prop_assert!(lhs.approx_eq(&rhs, 1e-9));
    }

    #[test]
    fn measurement_probabilities_sum_to_one(seed in any::<u64>()) {
        let rho = DensityMatrix::new(random_rho(seed, 1, 4), vec![2, 2]).unwrap();
        let projs = qverify_core::linalg::pauli::bell_projectors();
        let out = qverify_core::linalg::measure_projective(&rho, &projs).unwrap();
        let total: f64 = out.iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for o in out.iter().filter_map(|o| o.post_state.as_ref()) {
            prop_assert!(DensityMatrix::new(o.matrix().clone(), vec![2, 2]).is_ok());
        }
    }
}

#[test]
fn bell_measurement_on_epr_is_certain() {
    let projs = qverify_core::linalg::pauli::bell_projectors();
    let out =
        qverify_core::linalg::measure_projective(&PureState::epr().density(), &projs).unwrap();
    assert!((out[0].probability - 1.0).abs() < 1e-12);
}

#[test]
fn maximally_mixed_has_no_pauli_weight() {
    let rho = DensityMatrix::maximally_mixed(vec![2, 2, 2]).unwrap();
    for k in 1..27 {
        let w = qverify_core::linalg::PauliWord::xz_word(3, k);
        assert!(
            qverify_core::linalg::pauli_coefficient(&rho, &w)
                .unwrap()
                .abs()
                < 1e-15
        );
    }
    let full = partial_trace(&rho, &[0, 1, 2]).unwrap();
    assert_eq!(full.dims(), &[2, 2, 2]);
}
