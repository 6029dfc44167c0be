//! Computation by teleportation over `{H, G, CNOT}`.
//!
//! Gates are applied by Bell-measuring a wire into a gadget state; the
//! referee tracks the resulting Paulis in a frame instead of correcting them.
//! After each G an H may be owed, and it is paid by teleporting through
//! either an H gadget or an identity gadget, so the gadget count never
//! depends on the outcomes. CNOT inputs are teleported control first.

pub mod adaptive;
pub mod circuit;
pub mod compute;
pub mod frame;
pub mod register;

use thiserror::Error;

use crate::linalg::LinalgError;

pub use adaptive::{adaptive_equivalence_check, transcript_distribution, AdaptiveReport, AliceScript, Ordering};
pub use circuit::{bit_string, Circuit, Gate};
pub use compute::{
    exact_frame_check, gadget_state, run_teleported, teleport_plan, teleported_counts, FrameCheck, FrameEvent,
    PlanStep, ResourcePool, Shot,
};
pub use frame::{frame_update, GadgetKind, PauliFrame, WireFrame};
pub use register::{bell_basis_vectors, bell_measure, bell_probabilities, Branch, Register};

#[derive(Debug, Error)]
pub enum TeleportError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("bad circuit: {0}")]
    Circuit(String),
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("no {0:?} gadget left")]
    PoolExhausted(GadgetKind),
    #[error("an H correction is still pending")]
    PendingH,
    #[error("a Bell measurement needs two distinct qubits")]
    SameQubit,
    #[error("qubit {0} is not live")]
    UnknownQubit(usize),
}

pub type Result<T> = std::result::Result<T, TeleportError>;
