//! Running a circuit purely by Bell measurements on gadget states.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::circuit::{basis_amp, Circuit, Gate};
use super::frame::{frame_update, GadgetKind, PauliFrame, WireFrame};
use super::register::{bell_basis_vectors, computational_basis, Register};
use super::{Result, TeleportError};
use crate::linalg::matrix::kron_vec;
use crate::linalg::ops::apply_local;
use crate::linalg::pauli::{cnot, g_gate, hadamard};
use crate::linalg::{CMatrix, PureState, C64};
use crate::rng::child_rng;

/// The untwirled gadget state, qubits ordered input then output (control
/// pair then target pair for CNOT).
pub fn gadget_state(kind: GadgetKind) -> Vec<C64> {
    let epr = PureState::epr().amplitudes().to_vec();
    let pair = |u: &CMatrix| apply_local(&epr, &[2, 2], u, &[1]).expect("two qubits");
    match kind {
        GadgetKind::Zero => basis_amp(false),
        GadgetKind::H => pair(&hadamard()),
        GadgetKind::G => pair(&g_gate()),
        GadgetKind::Identity => epr.clone(),
        GadgetKind::Cnot => apply_local(&kron_vec(&epr, &epr), &[2; 4], &cnot(), &[1, 3]).expect("four qubits"),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourcePool {
    pub available: BTreeMap<GadgetKind, usize>,
}

impl ResourcePool {
    /// Enough for `circuit` whatever the outcomes: one gadget per gate and,
    /// per G, one H and one identity gadget for the correction teleport.
    pub fn for_circuit(circuit: &Circuit) -> Self {
        let n = |p: fn(&Gate) -> bool| circuit.count(p);
        let gs = n(|g| matches!(g, Gate::G { .. }));
        let mut available = BTreeMap::new();
        available.insert(GadgetKind::Zero, n(|g| matches!(g, Gate::Prepare { .. })));
        available.insert(GadgetKind::H, n(|g| matches!(g, Gate::H { .. })) + gs);
        available.insert(GadgetKind::G, gs);
        available.insert(GadgetKind::Cnot, n(|g| matches!(g, Gate::Cnot { .. })));
        available.insert(GadgetKind::Identity, gs);
        ResourcePool { available }
    }

    pub fn remaining(&self, kind: GadgetKind) -> usize {
        self.available.get(&kind).copied().unwrap_or(0)
    }

    pub fn take(&mut self, kind: GadgetKind) -> Result<Vec<C64>> {
        match self.available.get_mut(&kind) {
            Some(n) if *n > 0 => {
                *n -= 1;
                Ok(gadget_state(kind))
            }
            _ => Err(TeleportError::PoolExhausted(kind)),
        }
    }
}

/// One teleport as the referee sees it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanStep {
    Prepare { wire: usize },
    Teleport { kind: GadgetKind, wire: usize },
    Cnot { control: usize, target: usize },
    /// Through an H gadget if an H is pending on `wire`, else an identity
    /// gadget.
    Correction { wire: usize },
    Measure { wire: usize },
}

impl PlanStep {
    /// Gadget consumed by this step given the current frame.
    pub fn gadget(&self, frame: &PauliFrame) -> Option<GadgetKind> {
        match *self {
            PlanStep::Prepare { .. } => Some(GadgetKind::Zero),
            PlanStep::Teleport { kind, .. } => Some(kind),
            PlanStep::Cnot { .. } => Some(GadgetKind::Cnot),
            PlanStep::Correction { wire } => {
                Some(if frame.wires[wire].pending_h { GadgetKind::H } else { GadgetKind::Identity })
            }
            PlanStep::Measure { .. } => None,
        }
    }
}

/// Every G is followed by a correction teleport, so the number of gadgets
/// used never depends on the outcomes.
pub fn teleport_plan(circuit: &Circuit) -> Vec<PlanStep> {
    let mut plan = Vec::new();
    for g in &circuit.gates {
        match *g {
            Gate::Prepare { wire } => plan.push(PlanStep::Prepare { wire }),
            Gate::H { wire } => plan.push(PlanStep::Teleport { kind: GadgetKind::H, wire }),
            Gate::G { wire } => {
                plan.push(PlanStep::Teleport { kind: GadgetKind::G, wire });
                plan.push(PlanStep::Correction { wire });
            }
            Gate::Cnot { control, target } => plan.push(PlanStep::Cnot { control, target }),
            Gate::Measure { wire } => plan.push(PlanStep::Measure { wire }),
        }
    }
    plan
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameEvent {
    pub kind: GadgetKind,
    pub wires: Vec<usize>,
    pub outcomes: Vec<u8>,
    /// Frames of `wires` after the update.
    pub after: Vec<WireFrame>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    /// Logical bits in measurement order.
    pub bits: String,
    pub log: Vec<FrameEvent>,
    pub consumed: BTreeMap<GadgetKind, usize>,
}

struct Engine {
    reg: Register,
    frame: PauliFrame,
    /// Live physical qubit carrying each wire.
    at: Vec<Option<usize>>,
    log: Vec<FrameEvent>,
    consumed: BTreeMap<GadgetKind, usize>,
    bits: String,
}

impl Engine {
    fn new(wires: usize) -> Self {
        Engine {
            reg: Register::new(),
            frame: PauliFrame::new(wires),
            at: vec![None; wires],
            log: Vec::new(),
            consumed: BTreeMap::new(),
            bits: String::new(),
        }
    }

    fn wire(&self, w: usize) -> Result<usize> {
        self.at[w].ok_or_else(|| TeleportError::Circuit(format!("wire {w} is not live")))
    }

    fn record(&mut self, kind: GadgetKind, wires: Vec<usize>, outcomes: Vec<u8>) -> Result<()> {
        self.frame = frame_update(&self.frame, kind, &wires, &outcomes)?;
        let after = wires.iter().map(|&w| self.frame.wires[w]).collect();
        *self.consumed.entry(kind).or_insert(0) += 1;
        self.log.push(FrameEvent { kind, wires, outcomes, after });
        Ok(())
    }

    fn step<R: Rng + ?Sized>(&mut self, step: PlanStep, pool: &mut ResourcePool, rng: &mut R) -> Result<()> {
        let bell = bell_basis_vectors();
        let kind = step.gadget(&self.frame);
        match step {
            PlanStep::Prepare { wire } => {
                let ids = self.reg.add(&pool.take(GadgetKind::Zero)?)?;
                self.at[wire] = Some(ids[0]);
                self.record(GadgetKind::Zero, vec![wire], vec![0])
            }
            PlanStep::Teleport { wire, .. } | PlanStep::Correction { wire } => {
                let kind = kind.expect("teleport step");
                let input = self.wire(wire)?;
                let ids = self.reg.add(&pool.take(kind)?)?;
                let o = self.reg.measure(&[input, ids[0]], &bell, rng)? as u8;
                self.at[wire] = Some(ids[1]);
                self.record(kind, vec![wire], vec![o])
            }
            PlanStep::Cnot { control, target } => {
                let (c, t) = (self.wire(control)?, self.wire(target)?);
                let ids = self.reg.add(&pool.take(GadgetKind::Cnot)?)?;
                let oc = self.reg.measure(&[c, ids[0]], &bell, rng)? as u8;
                let ot = self.reg.measure(&[t, ids[2]], &bell, rng)? as u8;
                self.at[control] = Some(ids[1]);
                self.at[target] = Some(ids[3]);
                self.record(GadgetKind::Cnot, vec![control, target], vec![oc, ot])
            }
            PlanStep::Measure { wire } => {
                let q = self.wire(wire)?;
                let bit = self.reg.measure(&[q], &computational_basis(1), rng)? as u8;
                self.at[wire] = None;
                let logical = self.frame.wires[wire].decode(bit)?;
                self.bits.push(if logical == 1 { '1' } else { '0' });
                Ok(())
            }
        }
    }
}

/// One shot of `circuit` using gadgets from `pool`.
pub fn run_teleported<R: Rng + ?Sized>(circuit: &Circuit, pool: &mut ResourcePool, rng: &mut R) -> Result<Shot> {
    circuit.validate()?;
    let mut e = Engine::new(circuit.wires);
    for step in teleport_plan(circuit) {
        e.step(step, pool, rng)?;
    }
    Ok(Shot { bits: e.bits, log: e.log, consumed: e.consumed })
}

/// Histogram of logical outcomes over `shots` independent shots.
pub fn teleported_counts(circuit: &Circuit, shots: usize, seed: u64) -> Result<BTreeMap<String, usize>> {
    let shots: Vec<Shot> = (0..shots)
        .into_par_iter()
        .map(|s| {
            let mut rng = child_rng(seed, s as u64);
            run_teleported(circuit, &mut ResourcePool::for_circuit(circuit), &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for s in shots {
        *out.entry(s.bits).or_insert(0) += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameCheck {
    /// Trace distance between the frame-corrected output and the direct
    /// state.
    pub corrected: f64,
    /// The same before undoing the frame.
    pub uncorrected: f64,
    pub log: Vec<FrameEvent>,
}

/// Teleport every unitary gate of `circuit` with outcomes drawn from `seed`,
/// undo the final frame and compare with direct simulation.
pub fn exact_frame_check(circuit: &Circuit, seed: u64) -> Result<FrameCheck> {
    circuit.validate()?;
    let mut rng = child_rng(seed, 0);
    let mut pool = ResourcePool::for_circuit(circuit);
    let mut e = Engine::new(circuit.wires);
    for step in teleport_plan(circuit) {
        if !matches!(step, PlanStep::Measure { .. }) {
            e.step(step, &mut pool, &mut rng)?;
        }
    }
    for w in 0..circuit.wires {
        if e.at[w].is_none() {
            e.at[w] = Some(e.reg.add(&basis_amp(false))?[0]);
        }
    }
    let ids: Vec<usize> = e.at.iter().map(|q| q.expect("every wire live")).collect();
    let direct = circuit.direct_state()?;
    let uncorrected = e.reg.state(&ids)?.trace_distance(&direct)?;
    for (w, f) in e.frame.wires.iter().enumerate() {
        if f.pending_h {
            return Err(TeleportError::PendingH);
        }
        e.reg.apply(&f.pauli().adjoint(), &[ids[w]])?;
    }
    let corrected = e.reg.state(&ids)?.trace_distance(&direct)?;
    Ok(FrameCheck { corrected, uncorrected, log: e.log })
}
