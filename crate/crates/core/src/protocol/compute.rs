//! The computation round. Bob measures the round's qubits in 11-qubit
//! resource blocks; Eve then asks Alice for Bell measurements that wire the
//! circuit through the collapsed gadgets, tracking the Pauli frame from both
//! devices' reports. Unused qubits are paired off at the end so Alice always
//! receives one request per pair of qubits.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{ProtocolError, Result};
use crate::rng::DetRng;
use crate::teleport::{frame_update, teleport_plan, Circuit, GadgetKind, PauliFrame, PlanStep};
use crate::tomography::{Payload, Side, Wire};
use crate::xz::resource::resource_paulis;
use crate::xz::RESOURCE_QUBITS;

const KINDS: [GadgetKind; 5] =
    [GadgetKind::Zero, GadgetKind::H, GadgetKind::G, GadgetKind::Cnot, GadgetKind::Identity];

/// Positions of a gadget's qubits inside a resource block.
fn offsets(kind: GadgetKind) -> &'static [usize] {
    match kind {
        GadgetKind::Zero => &[0],
        GadgetKind::H => &[1, 2],
        GadgetKind::G => &[3, 4],
        GadgetKind::Cnot => &[5, 6, 7, 8],
        GadgetKind::Identity => &[9, 10],
    }
}

fn slot(kind: GadgetKind) -> usize {
    KINDS.iter().position(|k| *k == kind).expect("known kind")
}

/// Gadgets of each kind one run of `circuit` may use, whatever the outcomes.
fn demand(circuit: &Circuit) -> [usize; 5] {
    let mut d = [0; 5];
    for g in &circuit.gates {
        use crate::teleport::Gate::*;
        match g {
            Prepare { .. } | Measure { .. } => d[slot(GadgetKind::Zero)] += 1,
            H { .. } => d[slot(GadgetKind::H)] += 1,
            G { .. } => {
                d[slot(GadgetKind::G)] += 1;
                d[slot(GadgetKind::H)] += 1;
                d[slot(GadgetKind::Identity)] += 1;
            }
            Cnot { .. } => d[slot(GadgetKind::Cnot)] += 1,
        }
    }
    d
}

/// Runs of `circuit` that fit in one round of `blocks` resource blocks.
pub fn copies_per_round(circuit: &Circuit, blocks: usize) -> usize {
    demand(circuit).iter().filter(|&&d| d > 0).map(|&d| blocks / d).min().unwrap_or(0)
}

/// Hands out gadgets block by block, one kind at a time.
struct GadgetPool<'a> {
    permutation: &'a [usize],
    reports: &'a [u16],
    next: [usize; 5],
}

impl GadgetPool<'_> {
    /// Unused qubits paired within their own gadget (the spare `|b⟩`
    /// qubits with each other), so padding never entangles gadgets. Alice
    /// cannot see the pattern: she only sees labels through Bob's hidden
    /// permutation.
    fn leftover_pairs(&self) -> Vec<(usize, usize)> {
        let label = |b: usize, o: usize| self.permutation[b * RESOURCE_QUBITS + o];
        let mut pairs = Vec::new();
        let mut zeros = Vec::new();
        for b in 0..self.reports.len() {
            for kind in KINDS {
                if b < self.next[slot(kind)] {
                    continue;
                }
                match offsets(kind) {
                    [o] => zeros.push(label(b, *o)),
                    os => pairs.extend(os.chunks(2).map(|c| (label(b, c[0]), label(b, c[1])))),
                }
            }
        }
        pairs.extend(zeros.chunks_exact(2).map(|c| (c[0], c[1])));
        pairs
    }
}

struct Gadget {
    qubits: Vec<usize>,
    /// Twirl codes of the gadget's inputs (the prepared bit for `Zero`).
    twirl: Vec<u8>,
}

impl GadgetPool<'_> {
    fn take(&mut self, kind: GadgetKind) -> Result<Gadget> {
        let s = slot(kind);
        let b = self.next[s];
        if b >= self.reports.len() {
            return Err(ProtocolError::Config(format!("out of {kind:?} gadgets")));
        }
        self.next[s] += 1;
        let qubits: Vec<usize> =
            offsets(kind).iter().map(|o| self.permutation[b * RESOURCE_QUBITS + o]).collect();
        let p = resource_paulis(self.reports[b] as usize);
        let twirl = match kind {
            // stored as the code of X^b, so 0 or 2
            GadgetKind::Zero => vec![p[0] >> 1],
            GadgetKind::Identity => vec![p[1]],
            GadgetKind::H => vec![p[2]],
            GadgetKind::G => vec![p[3]],
            GadgetKind::Cnot => vec![p[4], p[5]],
        };
        Ok(Gadget { qubits, twirl })
    }
}

struct Requests<'a> {
    wire: &'a mut Wire,
    round: usize,
}

impl Requests<'_> {
    fn bell(&mut self, a: usize, b: usize) -> Result<u8> {
        let r = self.round;
        self.round += 1;
        match self.wire.ask(Side::Alice, r, Payload::BellRequest(a, b))? {
            Payload::BellOutcome(c) if c < 4 => Ok(c),
            other => Err(ProtocolError::Malformed(format!("expected a Bell outcome, got {other:?}"))),
        }
    }
}

fn run_copy(circuit: &Circuit, pool: &mut GadgetPool, req: &mut Requests) -> Result<String> {
    let mut frame = PauliFrame::new(circuit.wires);
    let mut at = vec![usize::MAX; circuit.wires];
    let mut bits = String::new();
    for step in teleport_plan(circuit) {
        match step {
            PlanStep::Prepare { wire } => {
                let g = pool.take(GadgetKind::Zero)?;
                at[wire] = g.qubits[0];
                frame = frame_update(&frame, GadgetKind::Zero, &[wire], &g.twirl)?;
            }
            PlanStep::Teleport { wire, .. } | PlanStep::Correction { wire } => {
                let kind = step.gadget(&frame).expect("teleport step");
                let g = pool.take(kind)?;
                let code = req.bell(at[wire], g.qubits[0])? ^ g.twirl[0];
                frame = frame_update(&frame, kind, &[wire], &[code])?;
                at[wire] = g.qubits[1];
            }
            PlanStep::Cnot { control, target } => {
                let g = pool.take(GadgetKind::Cnot)?;
                let oc = req.bell(at[control], g.qubits[0])? ^ g.twirl[0];
                let ot = req.bell(at[target], g.qubits[2])? ^ g.twirl[1];
                frame = frame_update(&frame, GadgetKind::Cnot, &[control, target], &[oc, ot])?;
                at[control] = g.qubits[1];
                at[target] = g.qubits[3];
            }
            PlanStep::Measure { wire } => {
                // A Bell measurement against a prepared |b⟩ reads the wire's Z
                // value as the outcome's X bit xor b.
                let g = pool.take(GadgetKind::Zero)?;
                let code = req.bell(at[wire], g.qubits[0])?;
                let bit = (code >> 1) ^ g.twirl[0];
                bits.push(if frame.wires[wire].decode(bit)? == 1 { '1' } else { '0' });
            }
        }
    }
    Ok(bits)
}

/// Bell requests for the computation round, after Bob has reported. Returns
/// the logical outcome of each circuit copy.
pub(crate) fn computation_round(
    wire: &mut Wire,
    rng: &mut DetRng,
    circuit: Option<&Circuit>,
    permutation: &[usize],
    reports: &[u16],
    first_round: usize,
) -> Result<Vec<String>> {
    let mut pool = GadgetPool { permutation, reports, next: [0; 5] };
    let mut req = Requests { wire, round: first_round };
    let mut outputs = Vec::new();
    if let Some(c) = circuit {
        for _ in 0..copies_per_round(c, reports.len()) {
            outputs.push(run_copy(c, &mut pool, &mut req)?);
        }
    }
    let mut pairs = pool.leftover_pairs();
    pairs.shuffle(rng);
    for (a, b) in pairs {
        if rng.random::<bool>() {
            req.bell(a, b)?;
        } else {
            req.bell(b, a)?;
        }
    }
    Ok(outputs)
}
