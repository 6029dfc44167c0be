use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qverify_core::linalg::ops::{embed_operator, kron_all, reduced_state};
use qverify_core::linalg::pauli::{bell_projectors, cnot, g_gate, hadamard, pauli_x, pauli_z};
use qverify_core::linalg::{CMatrix, DensityMatrix, PureState};
use qverify_core::rng::random_pure_state;
use qverify_core::stats::{frequencies, total_variation};
use qverify_core::teleport::{
    adaptive_equivalence_check, bell_basis_vectors, bell_measure, bell_probabilities, exact_frame_check, frame_update,
    gadget_state, run_teleported, teleported_counts, AliceScript, Circuit, GadgetKind, Gate, PauliFrame, Register,
    ResourcePool, TeleportError, WireFrame,
};
use qverify_core::xz::resource_factors;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pauli(x: bool, z: bool) -> CMatrix {
    let mut m = CMatrix::identity(2);
    if z {
        m = pauli_z();
    }
    if x {
        m = pauli_x().matmul(&m);
    }
    m
}

#[test]
fn g_algebra() {
    let g = g_gate();
    let gd = g.adjoint();
    let (h, x, z) = (hadamard(), pauli_x(), pauli_z());
    assert!(g.matmul(&x).approx_eq(&x.matmul(&gd), 1e-12));
    assert!(g.matmul(&z).approx_eq(&z.matmul(&gd), 1e-12));
    let y = x.matmul(&z);
    assert!(g.matmul(&y).approx_eq(&y.matmul(&g), 1e-12));
    assert!(h.matmul(&g).matmul(&h).approx_eq(&gd, 1e-12));
    assert!(g.matmul(&g).approx_eq(&h.matmul(&z), 1e-12));
    let mut g8 = CMatrix::identity(2);
    for _ in 0..8 {
        g8 = g8.matmul(&g);
    }
    assert!(g8.approx_eq(&CMatrix::identity(2).scale_real(-1.0), 1e-12));
}

#[test]
fn bell_measurement_basics() {
    let mut r = rng(1);
    for _ in 0..20 {
        let (o, rest) = bell_measure(&PureState::epr(), 0, 1, &mut r).unwrap();
        assert_eq!(o, 0);
        assert_eq!(rest.amplitudes().len(), 1);
    }
    let mixed = DensityMatrix::maximally_mixed(vec![2, 2]).unwrap();
    for p in bell_probabilities(&mixed, 0, 1).unwrap() {
        assert!((p - 0.25).abs() < 1e-12);
    }
    assert!(matches!(bell_measure(&PureState::epr(), 1, 1, &mut r), Err(TeleportError::SameQubit)));
}

#[test]
fn teleport_through_epr_matches_dense_projection() {
    let mut r = rng(2);
    let chi = random_pure_state(&mut r, vec![2]);
    let psi = chi.tensor(&PureState::epr()).unwrap();
    for (o, p) in bell_projectors().iter().enumerate() {
        let big = embed_operator(p, &[2, 2, 2], &[0, 1]).unwrap();
        let projected = big.apply(psi.amplitudes());
        let prob: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
        assert!((prob - 0.25).abs() < 1e-12);
        let post = PureState::normalized(projected, vec![2, 2, 2]).unwrap();
        let far = reduced_state(&post, &[2]).unwrap();
        let expected = chi.evolve(&pauli(o & 2 != 0, o & 1 != 0)).unwrap().density();
        assert!(far.matrix().approx_eq(expected.matrix(), 1e-9), "outcome {o}");
    }
}

/// Teleport `inputs` (with Pauli frames already on them) through one gadget
/// in every branch, and check the output against the frame's prediction.
fn check_rule(kind: GadgetKind, frames: &[WireFrame], seed: u64) {
    let mut r = rng(seed);
    let n = frames.len();
    let logical = random_pure_state(&mut r, vec![2; n]);
    // Physical = X^x Z^z H^h applied to the logical state, per wire.
    let physical_op = kron_all(&frames.iter().map(|f| pauli(f.x, f.z).matmul(&h_if(f.pending_h))).collect::<Vec<_>>());
    let mut reg = Register::from_state(&logical.evolve(&physical_op).unwrap()).unwrap();
    let g = reg.add(&gadget_state(kind)).unwrap();
    let (ins, outs): (Vec<[usize; 2]>, Vec<usize>) = match kind {
        GadgetKind::Cnot => (vec![[0, g[0]], [1, g[2]]], vec![g[1], g[3]]),
        _ => (vec![[0, g[0]]], vec![g[1]]),
    };
    let gate = match kind {
        GadgetKind::H => hadamard(),
        GadgetKind::G => g_gate(),
        GadgetKind::Cnot => cnot(),
        _ => CMatrix::identity(2),
    };
    let frame = PauliFrame { wires: frames.to_vec() };
    let wires: Vec<usize> = (0..n).collect();
    let mut stack = vec![(reg, Vec::<u8>::new())];
    while let Some((reg, codes)) = stack.pop() {
        if codes.len() == ins.len() {
            let next = frame_update(&frame, kind, &wires, &codes).unwrap();
            // Predicted physical output: Paulis, then any pending H, then the
            // logical gate unless this teleport paid off a pending H.
            let paid = kind == GadgetKind::H && frames[0].pending_h;
            let op = if paid { CMatrix::identity(2) } else { gate.clone() };
            let hs = kron_all(&next.wires.iter().map(|f| h_if(f.pending_h)).collect::<Vec<_>>());
            let ps = kron_all(&next.wires.iter().map(|f| pauli(f.x, f.z)).collect::<Vec<_>>());
            let expected = logical.evolve(&ps.matmul(&hs).matmul(&op)).unwrap();
            let got = reg.state(&outs).unwrap();
            assert!(got.fidelity(&expected) > 1.0 - 1e-9, "{kind:?} {frames:?} codes {codes:?} -> {next:?}");
            continue;
        }
        for b in reg.branches(&ins[codes.len()], &bell_basis_vectors()).unwrap() {
            if let Some(next) = b.register {
                let mut c = codes.clone();
                c.push(b.outcome as u8);
                stack.push((next, c));
            }
        }
    }
}

fn h_if(pending: bool) -> CMatrix {
    if pending {
        hadamard()
    } else {
        CMatrix::identity(2)
    }
}

fn frame_of(bits: u8) -> WireFrame {
    WireFrame { x: bits & 2 != 0, z: bits & 1 != 0, pending_h: false }
}

#[test]
fn identity_rule_is_xor() {
    let f = PauliFrame { wires: vec![frame_of(2)] };
    let next = frame_update(&f, GadgetKind::Identity, &[0], &[3]).unwrap();
    assert_eq!(next.wires[0], frame_of(1));
    for bits in 0..4 {
        check_rule(GadgetKind::Identity, &[frame_of(bits)], bits as u64);
        check_rule(GadgetKind::Identity, &[WireFrame { pending_h: true, ..frame_of(bits) }], 5 + bits as u64);
    }
}

#[test]
fn h_rule_swaps_bits() {
    let f = PauliFrame { wires: vec![frame_of(2)] };
    // incoming (1,0) xor outcome (0,1) = (1,1), swapped stays (1,1)
    assert_eq!(frame_update(&f, GadgetKind::H, &[0], &[1]).unwrap().wires[0], frame_of(3));
    assert_eq!(frame_update(&f, GadgetKind::H, &[0], &[0]).unwrap().wires[0], frame_of(1));
    for bits in 0..4 {
        check_rule(GadgetKind::H, &[frame_of(bits)], 10 + bits as u64);
    }
    // Paying off a pending H.
    for bits in 0..4 {
        let f = WireFrame { pending_h: true, ..frame_of(bits) };
        check_rule(GadgetKind::H, &[f], 20 + bits as u64);
    }
}

#[test]
fn g_rule_sets_pending_on_single_pauli() {
    let cases = [(0u8, false), (1, true), (2, true), (3, false)];
    for (incoming, pending) in cases {
        let f = PauliFrame { wires: vec![frame_of(incoming)] };
        let next = frame_update(&f, GadgetKind::G, &[0], &[0]).unwrap();
        assert_eq!(next.wires[0].pending_h, pending, "incoming {incoming}");
        check_rule(GadgetKind::G, &[frame_of(incoming)], 30 + incoming as u64);
    }
    let pending = PauliFrame { wires: vec![WireFrame { pending_h: true, ..Default::default() }] };
    assert!(matches!(frame_update(&pending, GadgetKind::G, &[0], &[0]), Err(TeleportError::PendingH)));
}

#[test]
fn cnot_rule_propagates_paulis() {
    for a in 0..4 {
        for b in 0..4 {
            check_rule(GadgetKind::Cnot, &[frame_of(a), frame_of(b)], 40 + (4 * a + b) as u64);
        }
    }
}

#[test]
fn gadgets_match_definitions() {
    let f = resource_factors(0);
    let close = |a: &[C64], b: &[C64]| a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-12);
    assert!(close(&gadget_state(GadgetKind::Zero), &f[0]));
    assert!(close(&gadget_state(GadgetKind::H), &f[1]));
    assert!(close(&gadget_state(GadgetKind::G), &f[2]));
    assert!(close(&gadget_state(GadgetKind::Cnot), &f[3]));
    assert!(close(&gadget_state(GadgetKind::Identity), &f[4]));
    let epr = PureState::epr();
    for (kind, u) in [(GadgetKind::H, hadamard()), (GadgetKind::G, g_gate())] {
        let direct = epr.evolve(&CMatrix::identity(2).kron(&u)).unwrap();
        assert!(close(&gadget_state(kind), direct.amplitudes()));
    }
    let two = epr.tensor(&epr).unwrap();
    let direct = two.evolve(&embed_operator(&cnot(), &[2; 4], &[1, 3]).unwrap()).unwrap();
    assert!(close(&gadget_state(GadgetKind::Cnot), direct.amplitudes()));
}

fn circuit(wires: usize, gates: Vec<Gate>) -> Circuit {
    Circuit::new(wires, gates).unwrap()
}

#[test]
fn hadamard_circuit_is_fair() {
    let c = circuit(1, vec![Gate::Prepare { wire: 0 }, Gate::H { wire: 0 }, Gate::Measure { wire: 0 }]);
    let counts = teleported_counts(&c, 10_000, 3).unwrap();
    let ones = counts.get("1").copied().unwrap_or(0) as f64;
    assert!((ones - 5000.0).abs() < 3.0 * 50.0, "{counts:?}");
}

#[test]
fn eight_g_gates_return_zero() {
    let mut gates = vec![Gate::Prepare { wire: 0 }];
    gates.extend((0..8).map(|_| Gate::G { wire: 0 }));
    gates.push(Gate::Measure { wire: 0 });
    let c = circuit(1, gates);
    assert_eq!(c.direct_distribution().unwrap(), BTreeMap::from([("0".to_string(), 1.0)]));
    let counts = teleported_counts(&c, 2000, 4).unwrap();
    assert_eq!(counts, BTreeMap::from([("0".to_string(), 2000)]));
}

#[test]
fn bell_pair_circuit() {
    let c = circuit(
        2,
        vec![
            Gate::Prepare { wire: 0 },
            Gate::Prepare { wire: 1 },
            Gate::H { wire: 0 },
            Gate::Cnot { control: 0, target: 1 },
            Gate::Measure { wire: 0 },
            Gate::Measure { wire: 1 },
        ],
    );
    let counts = teleported_counts(&c, 4000, 5).unwrap();
    assert!(counts.keys().all(|k| k == "00" || k == "11"), "{counts:?}");
    assert!((counts["00"] as f64 - 2000.0).abs() < 3.0 * 32.0);
}

#[test]
fn random_circuits_agree_with_direct_simulation() {
    const SHOTS: usize = 10_000;
    let mut r = rng(6);
    for i in 0..30 {
        let wires = 1 + (i % 5);
        let c = Circuit::random(&mut r, wires, 1 + (i * 7) % 8);
        let direct = c.direct_distribution().unwrap();
        let counts = teleported_counts(&c, SHOTS, 100 + i as u64).unwrap();
        let tv = total_variation(&frequencies(&counts), &direct);
        let k = 1usize << wires;
        assert!(tv <= 4.0 * (k as f64 / SHOTS as f64).sqrt(), "circuit {i}: tv {tv}");
    }
}

#[test]
fn frame_corrected_outputs_are_exact() {
    let mut r = rng(7);
    let mut frame_mattered = false;
    for i in 0..30 {
        let c = Circuit::random(&mut r, 1 + (i % 5), 8);
        for seed in 0..3 {
            let check = exact_frame_check(&c, seed).unwrap();
            assert!(check.corrected <= 1e-9, "circuit {i} seed {seed}: {}", check.corrected);
            frame_mattered |= check.uncorrected > 0.1;
        }
    }
    assert!(frame_mattered);
}

#[test]
fn gadget_use_is_outcome_independent() {
    let mut r = rng(8);
    for i in 0..10 {
        let c = Circuit::random(&mut r, 3, 8);
        let n = |p: fn(&Gate) -> bool| c.count(p);
        let (gs, hs) = (n(|g| matches!(g, Gate::G { .. })), n(|g| matches!(g, Gate::H { .. })));
        let total = n(|g| matches!(g, Gate::Prepare { .. })) + hs + 2 * gs + n(|g| matches!(g, Gate::Cnot { .. }));
        for s in 0..20 {
            let mut pool = ResourcePool::for_circuit(&c);
            let shot = run_teleported(&c, &mut pool, &mut rng(1000 * i + s)).unwrap();
            assert_eq!(shot.consumed.values().sum::<usize>(), total);
            let hi = shot.consumed.get(&GadgetKind::H).copied().unwrap_or(0)
                + shot.consumed.get(&GadgetKind::Identity).copied().unwrap_or(0);
            assert_eq!(hi, hs + gs);
        }
    }
}

#[test]
fn empty_pool_is_reported() {
    let c = circuit(1, vec![Gate::Prepare { wire: 0 }, Gate::H { wire: 0 }, Gate::Measure { wire: 0 }]);
    let mut pool = ResourcePool::for_circuit(&c);
    pool.available.insert(GadgetKind::H, 0);
    assert!(matches!(run_teleported(&c, &mut pool, &mut rng(0)), Err(TeleportError::PoolExhausted(GadgetKind::H))));
}

#[test]
fn circuit_json_and_validation() {
    let text = r#"{"wires":2,"gates":[{"op":"prepare","wire":0},{"op":"prepare","wire":1},
        {"op":"h","wire":0},{"op":"cnot","control":0,"target":1},{"op":"measure","wire":0},{"op":"measure","wire":1}]}"#;
    let c = Circuit::from_json(text).unwrap();
    assert_eq!(c.gates.len(), 6);
    assert_eq!(Circuit::from_json(&serde_json::to_string(&c).unwrap()).unwrap(), c);
    let after_measure = vec![Gate::Prepare { wire: 0 }, Gate::Measure { wire: 0 }, Gate::H { wire: 0 }];
    assert!(Circuit::new(1, after_measure).is_err());
    assert!(Circuit::new(1, vec![Gate::H { wire: 0 }]).is_err());
    assert!(Circuit::new(2, vec![Gate::Prepare { wire: 0 }, Gate::Cnot { control: 0, target: 0 }]).is_err());
}

fn single(gate: Gate) -> Circuit {
    circuit(1, vec![Gate::Prepare { wire: 0 }, gate, Gate::Measure { wire: 0 }])
}

#[test]
fn orderings_agree_exactly() {
    let scripts =
        [AliceScript::Honest, AliceScript::TiltBeforeBell { angle: 0.3 }, AliceScript::FixedReport { code: 0 }];
    for c in [single(Gate::H { wire: 0 }), single(Gate::G { wire: 0 })] {
        for s in &scripts {
            let report = adaptive_equivalence_check(&c, s).unwrap();
            assert!(report.tv < 1e-12, "{s:?}: tv {}", report.tv);
        }
    }
}

#[test]
fn honest_orderings_compute_the_gate() {
    let c = single(Gate::G { wire: 0 });
    let report = adaptive_equivalence_check(&c, &AliceScript::Honest).unwrap();
    let p0 = (std::f64::consts::PI / 8.0).cos().powi(2);
    assert!((report.logical[&0] - p0).abs() < 1e-12);
    let tilted = adaptive_equivalence_check(&c, &AliceScript::TiltBeforeBell { angle: 0.3 }).unwrap();
    assert!((tilted.logical[&0] - p0).abs() > 1e-3);
}

#[test]
fn adaptive_capacity() {
    let two_g = circuit(1, vec![Gate::Prepare { wire: 0 }, Gate::G { wire: 0 }, Gate::G { wire: 0 }, Gate::Measure { wire: 0 }]);
    assert!(matches!(adaptive_equivalence_check(&two_g, &AliceScript::Honest), Err(TeleportError::Capacity(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn single_wire_rules_hold(kind in prop_oneof![Just(GadgetKind::H), Just(GadgetKind::G), Just(GadgetKind::Identity)],
                              bits in 0u8..4, seed in any::<u64>()) {
        check_rule(kind, &[frame_of(bits)], seed);
    }
}
