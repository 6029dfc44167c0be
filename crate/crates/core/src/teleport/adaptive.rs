//! Adaptive versus non-adaptive question orderings, compared exactly.
//!
//! Alice and Bob share one EPR pair per gadget qubit. Bob prepares a
//! gadget by measuring his halves in the twirled gadget basis; Alice wires
//! gadgets with Bell measurements. After each G the referee owes a
//! correction teleport whose gadget kind depends on earlier outcomes, so one
//! side's questions must be adaptive:
//!
//! - Bob first: Bob prepares both an H and an identity slot up front; Alice
//!   is told which slot to Bell-measure into.
//! - Alice first: Alice always uses the first correction slot; Bob is told
//!   afterwards which kind to prepare there.
//!
//! Both runs emit the same canonical transcript, and the distributions are
//! enumerated exactly over every branch.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::circuit::{Circuit, Gate};
use super::compute::{gadget_state, teleport_plan, PlanStep};
use super::frame::{frame_update, GadgetKind, PauliFrame, WireFrame};
use super::register::{bell_basis_vectors, computational_basis, Register};
use super::{Result, TeleportError};
use crate::linalg::ops::apply_local;
use crate::linalg::{CMatrix, C64};
use crate::stats::total_variation;

/// Largest number of shared pairs the enumeration will simulate.
pub const MAX_ADAPTIVE_PAIRS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AliceScript {
    Honest,
    /// Apply `exp(−i·angle·σ_x)` to the first qubit before each Bell
    /// measurement.
    TiltBeforeBell { angle: f64 },
    /// Measure honestly but always report `code`.
    FixedReport { code: u8 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ordering {
    /// Bob's questions fixed in advance, Alice's adaptive.
    BobFirst,
    /// Alice's questions fixed in advance, Bob's adaptive.
    AliceFirst,
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Zero { pair: usize },
    Gate { kind: GadgetKind, pairs: [usize; 2] },
    /// First pair set is used by Alice-first runs; Bob-first runs prepare it
    /// as H and the second as identity.
    Correction { first: [usize; 2], second: [usize; 2] },
    Measure,
}

struct Layout {
    slots: Vec<Slot>,
    pairs: usize,
}

fn layout(circuit: &Circuit) -> Result<Layout> {
    circuit.validate()?;
    if circuit.wires != 1 {
        return Err(TeleportError::Capacity("adaptive check handles one wire".into()));
    }
    if circuit.gates.iter().any(|g| matches!(g, Gate::Cnot { .. })) {
        return Err(TeleportError::Capacity("adaptive check handles H and G only".into()));
    }
    let mut next = 0usize;
    let mut take = |n: usize| {
        let r: Vec<usize> = (next..next + n).collect();
        next += n;
        r
    };
    let mut slots = Vec::new();
    for step in teleport_plan(circuit) {
        slots.push(match step {
            PlanStep::Prepare { .. } => Slot::Zero { pair: take(1)[0] },
            PlanStep::Teleport { kind, .. } => {
                let p = take(2);
                Slot::Gate { kind, pairs: [p[0], p[1]] }
            }
            PlanStep::Correction { .. } => {
                let p = take(4);
                Slot::Correction { first: [p[0], p[1]], second: [p[2], p[3]] }
            }
            PlanStep::Measure { .. } => Slot::Measure,
            PlanStep::Cnot { .. } => unreachable!("rejected above"),
        });
    }
    if next > MAX_ADAPTIVE_PAIRS {
        return Err(TeleportError::Capacity(format!("{next} pairs exceed {MAX_ADAPTIVE_PAIRS}")));
    }
    Ok(Layout { slots, pairs: next })
}

/// Bob's basis for preparing `kind` on Alice's side: outcome `o` leaves
/// Alice with `(P_o ⊗ U)|φ⟩`, so Bob measures its conjugate.
fn preparation_basis(kind: GadgetKind) -> Vec<Vec<C64>> {
    if kind == GadgetKind::Zero {
        return computational_basis(1);
    }
    let g = gadget_state(kind);
    let dims = vec![2; kind.qubits()];
    (0..4u8)
        .map(|o| {
            let p = WireFrame { x: o & 2 != 0, z: o & 1 != 0, pending_h: false }.pauli();
            apply_local(&g, &dims, &p, &[0]).expect("gadget register").iter().map(|a| a.conj()).collect()
        })
        .collect()
}

struct Action {
    pre: Option<(CMatrix, usize)>,
    qubits: Vec<usize>,
    basis: Vec<Vec<C64>>,
    report: Option<u8>,
}

enum Next {
    Ask(Action),
    Done(Vec<u8>),
}

struct Players<'a> {
    pairs: usize,
    alice: &'a AliceScript,
}

impl Players<'_> {
    fn bob(&self, kind: GadgetKind, alice_pairs: &[usize]) -> Next {
        Next::Ask(Action {
            pre: None,
            qubits: alice_pairs.iter().map(|p| self.pairs + p).collect(),
            basis: preparation_basis(kind),
            report: None,
        })
    }

    fn alice_bell(&self, a: usize, b: usize) -> Next {
        let (pre, report) = match *self.alice {
            AliceScript::Honest => (None, None),
            AliceScript::TiltBeforeBell { angle } => {
                let (s, c) = angle.sin_cos();
                let u = CMatrix::from_rows(&[vec![C64::new(c, 0.0), C64::new(0.0, -s)], vec![C64::new(0.0, -s), C64::new(c, 0.0)]]);
                (Some((u, a)), None)
            }
            AliceScript::FixedReport { code } => (None, Some(code & 3)),
        };
        Next::Ask(Action { pre, qubits: vec![a, b], basis: bell_basis_vectors(), report })
    }

    fn alice_z(&self, q: usize) -> Next {
        Next::Ask(Action { pre: None, qubits: vec![q], basis: computational_basis(1), report: None })
    }
}

fn teleport(frame: &PauliFrame, kind: GadgetKind, code: u8) -> Result<PauliFrame> {
    frame_update(frame, kind, &[0], &[code])
}

fn replay_bob_first(l: &Layout, p: &Players, h: &[u8]) -> Result<Next> {
    let mut it = h.iter().copied();
    let mut bob: Vec<Vec<u8>> = Vec::new();
    for slot in &l.slots {
        let mut got = Vec::new();
        let asks: Vec<(GadgetKind, Vec<usize>)> = match *slot {
            Slot::Zero { pair } => vec![(GadgetKind::Zero, vec![pair])],
            Slot::Gate { kind, pairs } => vec![(kind, pairs.to_vec())],
            Slot::Correction { first, second } => {
                vec![(GadgetKind::H, first.to_vec()), (GadgetKind::Identity, second.to_vec())]
            }
            Slot::Measure => vec![],
        };
        for (kind, pairs) in asks {
            match it.next() {
                Some(v) => got.push(v),
                None => return Ok(p.bob(kind, &pairs)),
            }
        }
        bob.push(got);
    }
    let mut frame = PauliFrame::new(1);
    let mut wire = 0usize;
    let mut record = Vec::new();
    for (slot, codes) in l.slots.iter().zip(&bob) {
        match *slot {
            Slot::Zero { pair } => {
                frame = frame_update(&frame, GadgetKind::Zero, &[0], &[codes[0]])?;
                wire = pair;
                record.push(codes[0]);
            }
            Slot::Gate { kind, pairs } => {
                let Some(a) = it.next() else { return Ok(p.alice_bell(wire, pairs[0])) };
                frame = teleport(&frame, kind, a ^ codes[0])?;
                wire = pairs[1];
                record.extend([a, codes[0]]);
            }
            Slot::Correction { first, second } => {
                let pending = frame.wires[0].pending_h;
                let (pairs, kind, used, unused) = if pending {
                    (first, GadgetKind::H, codes[0], codes[1])
                } else {
                    (second, GadgetKind::Identity, codes[1], codes[0])
                };
                let Some(a) = it.next() else { return Ok(p.alice_bell(wire, pairs[0])) };
                frame = teleport(&frame, kind, a ^ used)?;
                wire = pairs[1];
                record.extend([pending as u8, a, used, unused]);
            }
            Slot::Measure => {
                let Some(bit) = it.next() else { return Ok(p.alice_z(wire)) };
                record.extend([bit, frame.wires[0].decode(bit)?]);
            }
        }
    }
    Ok(Next::Done(record))
}

fn replay_alice_first(l: &Layout, p: &Players, h: &[u8]) -> Result<Next> {
    let mut it = h.iter().copied();
    let mut alice: Vec<u8> = Vec::new();
    let mut wire = 0usize;
    for slot in &l.slots {
        let (ask, out) = match *slot {
            Slot::Zero { pair } => {
                wire = pair;
                continue;
            }
            Slot::Gate { pairs, .. } | Slot::Correction { first: pairs, .. } => (p.alice_bell(wire, pairs[0]), pairs[1]),
            Slot::Measure => (p.alice_z(wire), wire),
        };
        match it.next() {
            Some(v) => alice.push(v),
            None => return Ok(ask),
        }
        wire = out;
    }
    let mut answers = alice.into_iter();
    let mut frame = PauliFrame::new(1);
    let mut record = Vec::new();
    for slot in &l.slots {
        match *slot {
            Slot::Zero { pair } => {
                let Some(b) = it.next() else { return Ok(p.bob(GadgetKind::Zero, &[pair])) };
                frame = frame_update(&frame, GadgetKind::Zero, &[0], &[b])?;
                record.push(b);
            }
            Slot::Gate { kind, pairs } => {
                let a = answers.next().expect("Alice answered every slot");
                let Some(b) = it.next() else { return Ok(p.bob(kind, &pairs)) };
                frame = teleport(&frame, kind, a ^ b)?;
                record.extend([a, b]);
            }
            Slot::Correction { first, second } => {
                let a = answers.next().expect("Alice answered every slot");
                let pending = frame.wires[0].pending_h;
                let (used_kind, other_kind) =
                    if pending { (GadgetKind::H, GadgetKind::Identity) } else { (GadgetKind::Identity, GadgetKind::H) };
                let Some(used) = it.next() else { return Ok(p.bob(used_kind, &first)) };
                let Some(unused) = it.next() else { return Ok(p.bob(other_kind, &second)) };
                frame = teleport(&frame, used_kind, a ^ used)?;
                record.extend([pending as u8, a, used, unused]);
            }
            Slot::Measure => {
                let bit = answers.next().expect("Alice answered every slot");
                record.extend([bit, frame.wires[0].decode(bit)?]);
            }
        }
    }
    Ok(Next::Done(record))
}

fn explore(
    reg: &Register,
    history: &mut Vec<u8>,
    prob: f64,
    replay: &dyn Fn(&[u8]) -> Result<Next>,
    out: &mut BTreeMap<Vec<u8>, f64>,
) -> Result<()> {
    match replay(history)? {
        Next::Done(record) => {
            *out.entry(record).or_insert(0.0) += prob;
            Ok(())
        }
        Next::Ask(action) => {
            let mut reg = reg.clone();
            if let Some((u, q)) = &action.pre {
                reg.apply(u, &[*q])?;
            }
            for branch in reg.branches(&action.qubits, &action.basis)? {
                if let Some(next) = &branch.register {
                    history.push(action.report.unwrap_or(branch.outcome as u8));
                    explore(next, history, prob * branch.probability, replay, out)?;
                    history.pop();
                }
            }
            Ok(())
        }
    }
}

/// Exact distribution of canonical transcripts. Per slot: zero `[bit]`;
/// gate `[alice, bob]`; correction `[pending, alice, bob used, bob unused]`;
/// measurement `[raw bit, logical bit]`.
pub fn transcript_distribution(
    circuit: &Circuit,
    ordering: Ordering,
    alice: &AliceScript,
) -> Result<BTreeMap<Vec<u8>, f64>> {
    let l = layout(circuit)?;
    let players = Players { pairs: l.pairs, alice };
    let d = 1usize << l.pairs;
    let mut phi = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        phi[(i << l.pairs) | i] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    let mut reg = Register::new();
    reg.add(&phi)?;
    let replay = |h: &[u8]| match ordering {
        Ordering::BobFirst => replay_bob_first(&l, &players, h),
        Ordering::AliceFirst => replay_alice_first(&l, &players, h),
    };
    let mut out = BTreeMap::new();
    explore(&reg, &mut Vec::new(), 1.0, &replay, &mut out)?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdaptiveReport {
    pub tv: f64,
    pub transcripts: usize,
    /// Distribution of the decoded output bit (Bob-first run).
    pub logical: BTreeMap<u8, f64>,
}

/// TV distance between the two orderings' transcript distributions.
pub fn adaptive_equivalence_check(circuit: &Circuit, alice: &AliceScript) -> Result<AdaptiveReport> {
    let a = transcript_distribution(circuit, Ordering::BobFirst, alice)?;
    let b = transcript_distribution(circuit, Ordering::AliceFirst, alice)?;
    let mut logical = BTreeMap::new();
    for (rec, p) in &a {
        if let Some(&bit) = rec.last() {
            *logical.entry(bit).or_insert(0.0) += p;
        }
    }
    Ok(AdaptiveReport { tv: total_variation(&a, &b), transcripts: a.len().max(b.len()), logical })
}
