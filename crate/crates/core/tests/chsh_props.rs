use std::f64::consts::{PI, SQRT_2};

use proptest::prelude::*;
use qverify_core::chsh::*;
use qverify_core::linalg::eigen::operator_norm;
use qverify_core::linalg::{DensityMatrix, QuantumState, Reflection};
use qverify_core::rng::{child_rng, random_density_matrix, random_reflection};

fn fuzzed_strategy(seed: u64, da: usize, db: usize) -> SingleGameStrategy {
    let mut r = child_rng(seed, 0);
    let refl = |r: &mut _, d: usize, k: u64| {
        let plus = (seed.wrapping_add(k) as usize) % (d + 1);
        Reflection::new(random_reflection(r, d, plus)).unwrap()
    };
    let alice = [refl(&mut r, da, 1), refl(&mut r, da, 2)];
    let bob = [refl(&mut r, db, 3), refl(&mut r, db, 4)];
    let rho = random_density_matrix(&mut r, da * db, 1 + seed as usize % 3);
    let state = QuantumState::Mixed(DensityMatrix::new(rho, vec![da, db]).unwrap());
    SingleGameStrategy::new(state, alice, bob).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bell_value_tracks_win_probability(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let s = fuzzed_strategy(seed, da, db);
        let w = chsh_win_probability(&s).unwrap();
        prop_assert!((8.0 * w - 4.0 - bell_value(&s)).abs() < 1e-9);
    }

    #[test]
    fn tsirelson_bound_holds(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let s = fuzzed_strategy(seed, da, db);
        let cert = tsirelson_certificate(&XorGameSpec::chsh()).unwrap();
        prop_assert!(chsh_win_probability(&s).unwrap() <= cert.omega + 1e-9);
        prop_assert!(operator_norm(&bell_operator(&s)) <= 2.0 * SQRT_2 + 1e-9);
    }

    #[test]
    fn bias_identity_is_exact(seed in any::<u64>()) {
        let s = fuzzed_strategy(seed, 2, 2);
        let m = bias_operators(&s).unwrap();
        prop_assert!(bias_identity_residual(&s, &m) <= 1e-10);
    }

    #[test]
    fn xor_game_certificates_bound_classical(p in proptest::collection::vec(0.01f64..1.0, 4), v in 0u8..16) {
        let total: f64 = p.iter().sum();
        let g = XorGameSpec {
            question_dist: [[p[0] / total, p[1] / total], [p[2] / total, p[3] / total]],
            predicate: [[v & 1, (v >> 1) & 1], [(v >> 2) & 1, (v >> 3) & 1]],
        };
        let cert = tsirelson_certificate(&g).unwrap();
        prop_assert!(cert.min_slack_eigenvalue >= -1e-9);
        prop_assert!(classical_value(&g) <= cert.omega + 1e-9);
        // The ideal-style strategy family never beats the certificate either.
        for k in 0..8 {
            let s = alice_angle_strategy(k as f64 * PI / 8.0);
            prop_assert!(win_probability(&s, &g).unwrap() <= cert.omega + 1e-9);
        }
    }
}

#[test]
fn classical_value_matches_brute_force_oracle() {
    // Negated-AND predicate: accept iff x ⊕ y = ¬(a ∧ b).
    let g = XorGameSpec {
        question_dist: [[0.25; 2]; 2],
        predicate: [[1, 1], [1, 0]],
    };
    let mut best = 0.0f64;
    for x0 in 0..2u8 {
        for x1 in 0..2u8 {
            for y0 in 0..2u8 {
                for y1 in 0..2u8 {
                    let xs = [x0, x1];
                    let ys = [y0, y1];
                    let mut w = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            let target = 1 - (a & b) as u8;
                            if xs[a] ^ ys[b] == target {
                                w += 0.25;
                            }
                        }
                    }
                    best = best.max(w);
                }
            }
        }
    }
    assert_eq!(classical_value(&g), best);
    assert_eq!(best, 0.75);
}

#[test]
fn strict_bell_violation() {
    assert!(
        classical_value(&XorGameSpec::chsh()) < chsh_win_probability(&ideal_strategy()).unwrap()
    );
}

#[test]
fn win_probability_falls_away_from_optimal_angle() {
    let grid: Vec<f64> = (0..50)
        .map(|k| PI / 4.0 + k as f64 * (PI / 4.0) / 49.0)
        .collect();
    let wins: Vec<f64> = grid
        .iter()
        .map(|&t| chsh_win_probability(&alice_angle_strategy(t)).unwrap())
        .collect();
    assert!(wins.windows(2).all(|w| w[1] < w[0]));
    let below: Vec<f64> = (0..50)
        .map(|k| PI / 4.0 - k as f64 * (PI / 4.0) / 49.0)
        .collect();
    let wins_below: Vec<f64> = below
        .iter()
        .map(|&t| chsh_win_probability(&alice_angle_strategy(t)).unwrap())
        .collect();
    assert!(wins_below.windows(2).all(|w| w[1] < w[0]));
}
