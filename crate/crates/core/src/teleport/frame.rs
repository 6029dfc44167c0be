//! Pauli-frame bookkeeping for teleported gates.
//!
//! Per wire the frame says the physical qubit is `X^x Z^z H^h` applied to the
//! logical state, up to phase, where `h` is the pending-H flag. Teleporting
//! `X^x Z^z|χ⟩` through a gadget `(I⊗U)|φ⟩` with Bell outcome `2a + b`
//! leaves `U X^{x⊕a} Z^{z⊕b}|χ⟩` on the gadget's output, and each rule below
//! pushes that Pauli back through `U`:
//!
//! - identity: bits xor with the outcome;
//! - H: `H X^x Z^z = X^z Z^x H`, so the bits swap. If an H was pending, this
//!   teleport cancels it instead of applying a logical H;
//! - CNOT: `X_c → X_c X_t`, `Z_t → Z_c Z_t`;
//! - G: `XZ ∝ σ_y` commutes with `G = exp(−iπ/8 σ_y)` while `X` and `Z`
//!   alone anticommute with `σ_y` and turn `G` into `G†`. Since `G² = HZ`,
//!   `G† = Z H G`, so when `x ⊕ z = 1` the output is `X^x Z^{z⊕1} H G|χ⟩`
//!   and an H becomes pending.

use serde::{Deserialize, Serialize};

use super::{Result, TeleportError};
use crate::linalg::pauli::{pauli_x, pauli_z};
use crate::linalg::CMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GadgetKind {
    /// `|0⟩`, possibly flipped: the outcome is the prepared bit.
    Zero,
    H,
    G,
    Cnot,
    Identity,
}

impl GadgetKind {
    pub fn qubits(self) -> usize {
        match self {
            GadgetKind::Zero => 1,
            GadgetKind::H | GadgetKind::G | GadgetKind::Identity => 2,
            GadgetKind::Cnot => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WireFrame {
    pub x: bool,
    pub z: bool,
    pub pending_h: bool,
}

impl WireFrame {
    /// `X^x Z^z`.
    pub fn pauli(&self) -> CMatrix {
        let mut m = CMatrix::identity(2);
        if self.z {
            m = pauli_z();
        }
        if self.x {
            m = pauli_x().matmul(&m);
        }
        m
    }

    /// Logical value of a Z measurement that returned `bit`.
    pub fn decode(&self, bit: u8) -> Result<u8> {
        if self.pending_h {
            return Err(TeleportError::PendingH);
        }
        Ok(bit ^ self.x as u8)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliFrame {
    pub wires: Vec<WireFrame>,
}

impl PauliFrame {
    pub fn new(wires: usize) -> Self {
        PauliFrame { wires: vec![WireFrame::default(); wires] }
    }
}

fn split(code: u8) -> (bool, bool) {
    (code & 2 != 0, code & 1 != 0)
}

/// Frame after teleporting `wires` through a gadget of `kind` with the
/// given outcome codes (`2x + z`, one per input; for `Zero` the prepared bit).
pub fn frame_update(frame: &PauliFrame, kind: GadgetKind, wires: &[usize], outcomes: &[u8]) -> Result<PauliFrame> {
    let arity = if kind == GadgetKind::Cnot { 2 } else { 1 };
    if wires.len() != arity || outcomes.len() != arity {
        return Err(TeleportError::Circuit(format!("{kind:?} takes {arity} wire(s)")));
    }
    if let Some(&w) = wires.iter().find(|&&w| w >= frame.wires.len()) {
        return Err(TeleportError::Circuit(format!("wire {w} not in frame")));
    }
    let mut out = frame.clone();
    let incoming = |i: usize| {
        let f = frame.wires[wires[i]];
        let (a, b) = split(outcomes[i]);
        (f.x ^ a, f.z ^ b, f.pending_h)
    };
    match kind {
        GadgetKind::Zero => {
            out.wires[wires[0]] = WireFrame { x: outcomes[0] & 1 == 1, z: false, pending_h: false };
        }
        GadgetKind::Identity => {
            let (x, z, pending_h) = incoming(0);
            out.wires[wires[0]] = WireFrame { x, z, pending_h };
        }
        GadgetKind::H => {
            let (x, z, _) = incoming(0);
            out.wires[wires[0]] = WireFrame { x: z, z: x, pending_h: false };
        }
        GadgetKind::G => {
            let (x, z, pending) = incoming(0);
            if pending {
                return Err(TeleportError::PendingH);
            }
            let flip = x ^ z;
            out.wires[wires[0]] = WireFrame { x, z: z ^ flip, pending_h: flip };
        }
        GadgetKind::Cnot => {
            let (xc, zc, pc) = incoming(0);
            let (xt, zt, pt) = incoming(1);
            if pc || pt {
                return Err(TeleportError::PendingH);
            }
            out.wires[wires[0]] = WireFrame { x: xc, z: zc ^ zt, pending_h: false };
            out.wires[wires[1]] = WireFrame { x: xt ^ xc, z: zt, pending_h: false };
        }
    }
    Ok(out)
}
