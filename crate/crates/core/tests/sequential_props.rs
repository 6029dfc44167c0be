use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use qverify_core::chsh::{
    alice_angle_strategy, always_zero_strategy, chsh_quantum_value, ideal_strategy,
};
use qverify_core::linalg::eigen::trace_norm_hermitian;
use qverify_core::linalg::ops::measure_projective;
use qverify_core::linalg::{CMatrix, DensityMatrix, QuantumState, Reflection, SuperOperator};
use qverify_core::rng::{
    child_rng, perturb_reflection, random_density_matrix, random_isometry, random_reflection,
    DetRng,
};
use qverify_core::sequential::exact::{check_structure_preservation, evolve, game_superoperator};
use qverify_core::sequential::play::transcript_probability;
use qverify_core::sequential::strategy::ReflectionSource;
use qverify_core::sequential::*;

fn local_transcripts(len: usize) -> Vec<LocalTranscript> {
    let mut out = vec![LocalTranscript::empty()];
    for _ in 0..len {
        out = out
            .iter()
            .flat_map(|h| (0..4u8).map(move |k| h.extended(k >> 1, k & 1)))
            .collect();
    }
    out
}

fn key(d: Device, j: usize, h: &LocalTranscript, q: u8) -> String {
    format!("{d}/{j}/{}/{q}", h.bits())
}

/// Fully transcript-dependent random strategy.
fn random_table_strategy(seed: u64, n: usize, dims: [usize; 3]) -> SequentialStrategy {
    let mut r = child_rng(seed, 0);
    let mut table = BTreeMap::new();
    for d in [Device::A, Device::B] {
        let dim = dims[d.index()];
        for j in 1..=n {
            for h in local_transcripts(j - 1) {
                for q in 0..2u8 {
                    let plus = 1 + (seed as usize + j + q as usize) % (dim - 1).max(1);
                    let m = random_reflection(&mut r, dim, plus.min(dim));
                    table.insert(key(d, j, &h, q), Reflection::new(m).unwrap());
                }
            }
        }
    }
    let total = dims.iter().product();
    let rho = random_density_matrix(&mut r, total, 1 + (seed % 3) as usize);
    let reg: Vec<usize> = if dims[2] > 1 {
        dims.to_vec()
    } else {
        dims[..2].to_vec()
    };
    let init = QuantumState::Mixed(DensityMatrix::new(rho, reg).unwrap());
    SequentialStrategy::new(
        n,
        dims[0],
        dims[1],
        dims[2],
        init,
        ReflectionSource::Table(table),
    )
    .unwrap()
}

/// Every reflection of `s` nudged by `tau`, and the state mixed with noise of weight `tau`.
fn perturbed(s: &SequentialStrategy, seed: u64, tau: f64) -> SequentialStrategy {
    let mut r = child_rng(seed, 1);
    let mut table = BTreeMap::new();
    for d in [Device::A, Device::B] {
        for j in 1..=s.n() {
            for h in local_transcripts(j - 1) {
                for q in 0..2u8 {
                    let base = s.reflection(d, j, &h, q).unwrap();
                    let m = perturb_reflection(&mut r, base.matrix(), tau);
                    table.insert(key(d, j, &h, q), Reflection::new(m).unwrap());
                }
            }
        }
    }
    let rho = s.initial().density();
    let noise = random_density_matrix(&mut r, s.total_dim(), 2);
    let mixed = &rho.matrix().scale_real(1.0 - tau) + &noise.scale_real(tau);
    let init =
        QuantumState::Mixed(DensityMatrix::new(mixed.hermitian_part(), s.register_dims()).unwrap());
    SequentialStrategy::new(
        s.n(),
        s.device_dim(Device::A),
        s.device_dim(Device::B),
        s.env_dim(),
        init,
        ReflectionSource::Table(table),
    )
    .unwrap()
}

fn angle_product(angles: &[f64]) -> SequentialStrategy {
    ProductStrategy {
        games: angles.iter().map(|&t| alice_angle_strategy(t)).collect(),
    }
    .materialize()
    .unwrap()
}

#[test]
fn alice_and_bob_super_operators_commute() {
    for seed in 0..10u64 {
        let s = random_table_strategy(seed, 1, [2, 3, 1]);
        let ea = game_superoperator(&s, Device::A, 1, &LocalTranscript::empty()).unwrap();
        let eb = game_superoperator(&s, Device::B, 1, &LocalTranscript::empty()).unwrap();
        let rho = s.initial().density().matrix().clone();
        // Output register order (regA, A, regB, B) either way round.
        let a_first = SuperOperator::identity(8)
            .tensor(&eb)
            .apply_matrix(&ea.tensor(&SuperOperator::identity(3)).apply_matrix(&rho));
        let b_first = ea
            .tensor(&SuperOperator::identity(12))
            .apply_matrix(&SuperOperator::identity(2).tensor(&eb).apply_matrix(&rho));
        assert!(a_first.max_abs_diff(&b_first) < 1e-12, "seed {seed}");
    }
}

#[test]
fn game_superoperators_preserve_trace() {
    for seed in 0..10u64 {
        let s = random_table_strategy(seed, 2, [2, 2, 2]);
        let h = LocalTranscript::empty().extended(1, 0);
        for d in [Device::A, Device::B] {
            let e = game_superoperator(&s, d, 2, &h).unwrap();
            let k = e.kraus();
            let mut sum = CMatrix::zeros(2, 2);
            for m in k {
                sum = &sum + &m.adjoint().matmul(m);
            }
            assert!(sum.max_abs_diff(&CMatrix::identity(2)) < 1e-12);
        }
    }
}

#[test]
fn ideal_second_game_matches_projective_oracle() {
    let s = ProductStrategy::repeated(ideal_strategy(), 2)
        .materialize()
        .unwrap();
    let ts = transcript_state(&s, 2).unwrap();
    let g = ideal_strategy();
    let rho = g.state.density();
    for h in ts.transcripts() {
        let (a, x) = h.alice.0[0];
        let (b, y) = h.bob.0[0];
        let proj: Vec<CMatrix> = (0..4u8)
            .map(|k| {
                g.alice[a as usize]
                    .projector(k >> 1)
                    .kron(&g.bob[b as usize].projector(k & 1))
            })
            .collect();
        let out = measure_projective(&rho, &proj).unwrap();
        let want = out[(2 * x + y) as usize].probability / 4.0;
        assert!((ts.probability(h) - want).abs() < 1e-12);
    }
}

#[test]
fn transcript_states_are_normalized() {
    for seed in 0..8u64 {
        let s = random_table_strategy(seed, 3, [2, 2, 2]);
        for j in 1..=4 {
            let ts = transcript_state(&s, j).unwrap();
            assert!((ts.total_probability() - 1.0).abs() < 1e-9);
        }
        assert!(transcript_state(&s, 5).is_err());
    }
}

#[test]
fn capacity_guard_on_game_index() {
    let s = ProductStrategy::repeated(always_zero_strategy(), 7).materialize();
    // 7 EPR pairs already exceed the register limit.
    assert!(s.is_err());
    let s = random_table_strategy(1, 1, [2, 2, 1])
        .with_games(8)
        .unwrap();
    assert!(transcript_state(&s, 8).is_err());
}

#[test]
fn monte_carlo_win_rates() {
    let w = chsh_quantum_value();
    let sigma = (w * (1.0 - w) / 100.0).sqrt();
    let out = play_games(&builtin("ideal", 100).unwrap(), 100, 1000, 2024).unwrap();
    assert!((out.mean_win_fraction() - w).abs() < 3.0 * sigma);
    let sigma_c = (0.75f64 * 0.25 / 100.0).sqrt();
    let out = play_games(&builtin("classical_00", 100).unwrap(), 100, 1000, 2024).unwrap();
    assert!((out.mean_win_fraction() - 0.75).abs() < 3.0 * sigma_c);
}

#[test]
fn honest_devices_pass_eve_test() {
    let out = play_games(&builtin("ideal", 1000).unwrap(), 1000, 1000, 5).unwrap();
    assert!(out.acceptance_rate(0.05) >= 0.99);
}

/// χ² consistency of sampled transcripts against exact probabilities.
fn chi_square(s: &SequentialStrategy, trials: u64, seed: u64) -> (f64, usize) {
    let any = AnyStrategy::General(s.clone());
    let out = play_games(&any, s.n(), trials, seed).unwrap();
    let mut counts: HashMap<Transcript, u64> = HashMap::new();
    for t in &out.trials {
        *counts.entry(t.transcript.clone()).or_default() += 1;
    }
    let exact = evolve(s, s.n(), s.n()).unwrap();
    let mut chi = 0.0;
    let mut cells = 0;
    for h in exact.transcripts() {
        let p = exact.probability(h);
        let expected = p * trials as f64;
        if expected < 5.0 {
            continue;
        }
        let o = *counts.get(h).unwrap_or(&0) as f64;
        chi += (o - expected).powi(2) / expected;
        cells += 1;
    }
    (chi, cells)
}

#[test]
fn sampled_transcripts_match_exact_distribution() {
    for (seed, n) in [(3u64, 1usize), (4, 2)] {
        let s = random_table_strategy(seed, n, [2, 2, 1]);
        let (chi, cells) = chi_square(&s, 100_000, seed);
        let df = (cells - 1) as f64;
        // Far tail of χ²(df); a wrong sampler lands orders of magnitude higher.
        assert!(
            chi < df + 6.0 * (2.0 * df).sqrt(),
            "n={n}: χ²={chi} over {cells} cells"
        );
    }
    let s = angle_product(&[PI / 4.0, PI / 5.0, 0.0]);
    let (chi, cells) = chi_square(&s, 100_000, 9);
    let df = (cells - 1) as f64;
    assert!(
        chi < df + 6.0 * (2.0 * df).sqrt(),
        "χ²={chi} over {cells} cells"
    );
}

#[test]
fn transcript_probability_agrees_with_enumeration() {
    let s = random_table_strategy(11, 2, [2, 2, 2]);
    let exact = evolve(&s, 2, 2).unwrap();
    for h in exact.transcripts().take(40) {
        assert!((transcript_probability(&s, h).unwrap() - exact.probability(h)).abs() < 1e-12);
    }
}

#[test]
fn structure_is_preserved_under_weak_simulation() {
    for seed in 0..20u64 {
        let mut r: DetRng = child_rng(seed, 9);
        let angles: Vec<f64> = (0..2)
            .map(|_| PI / 4.0 + 0.2 * (rand::Rng::random::<f64>(&mut r) - 0.5))
            .collect();
        let s = angle_product(&angles);
        let tau = [1e-3, 1e-2, 5e-2, 0.2][seed as usize % 4];
        let t = perturbed(&s, seed, tau);
        for eps in [0.02, 0.1, 0.4] {
            let out = check_structure_preservation(&s, &t, eps).unwrap();
            assert!(out.holds, "seed {seed} ε={eps}: {out:?}");
        }
    }
}

#[test]
fn weak_distance_never_exceeds_strong() {
    for seed in 0..20u64 {
        let (s, t) = if seed % 2 == 0 {
            let s = random_table_strategy(seed, 2, [2, 2, 1]);
            let t = perturbed(&s, seed, 0.3);
            (s, t)
        } else {
            (
                random_table_strategy(seed, 2, [2, 2, 1]),
                random_table_strategy(seed + 100, 2, [2, 2, 1]),
            )
        };
        let d = simulation_distance(&s, &t).unwrap();
        assert!(d.weak <= d.strong + 1e-9, "seed {seed}: {d:?}");
    }
}

#[test]
fn isometric_extension_is_indistinguishable() {
    for seed in 0..5u64 {
        let s = random_table_strategy(seed, 2, [2, 2, 1]);
        let mut r = child_rng(seed, 3);
        let xa = random_isometry(&mut r, 2, 3);
        let xb = random_isometry(&mut r, 2, 4);
        let t = s.isometric_extension(&xa, &xb).unwrap();
        let d = simulation_distance_embedded(&s, &t, &xa, &xb).unwrap();
        assert!(d.strong < 1e-9 && d.weak < 1e-9, "seed {seed}: {d:?}");
    }
}

#[test]
fn single_game_distance_matches_dense_oracle() {
    let s = ProductStrategy::repeated(ideal_strategy(), 1)
        .materialize()
        .unwrap();
    let t = ProductStrategy::repeated(always_zero_strategy(), 1)
        .materialize()
        .unwrap();
    let d = simulation_distance(&s, &t).unwrap();

    // Dense block matrices over (register, A, B) for each device alone.
    let dense = |x: &SequentialStrategy, dev: Device| -> CMatrix {
        let e = game_superoperator(x, dev, 1, &LocalTranscript::empty()).unwrap();
        let rho = x.initial().density().matrix().clone();
        match dev {
            Device::A => e.tensor(&SuperOperator::identity(2)).apply_matrix(&rho),
            Device::B => SuperOperator::identity(2).tensor(&e).apply_matrix(&rho),
        }
    };
    let da = trace_norm_hermitian(&(&dense(&s, Device::A) - &dense(&t, Device::A)));
    let db = trace_norm_hermitian(&(&dense(&s, Device::B) - &dense(&t, Device::B)));
    assert!(d.strong > 0.1);
    assert!(
        (d.strong - da.max(db)).abs() < 1e-9,
        "{} vs {da} {db}",
        d.strong
    );
}

#[test]
fn structure_report_examples() {
    let s = ProductStrategy::repeated(ideal_strategy(), 3)
        .materialize()
        .unwrap();
    for eps in [0.0, 1e-3, 0.5] {
        let rep = structure_report(&s, eps).unwrap();
        assert!(rep.epsilon_structured && rep.delta < 1e-12);
    }
    let cl = ProductStrategy::repeated(always_zero_strategy(), 2)
        .materialize()
        .unwrap();
    let gap = 8.0 * (chsh_quantum_value() - 0.75);
    assert!((gap - 0.828_427_124_746_190).abs() < 1e-12);
    let rep = structure_report(&cl, 0.8).unwrap();
    assert!(!rep.epsilon_structured);
    assert_eq!(rep.flagged_games(), vec![1, 2]);
}
