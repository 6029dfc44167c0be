//! The two tomography sub-protocols, run as a referee exchanging classical
//! messages with two device threads that share a row of EPR pairs.
//!
//! In state tomography Alice is held to the ideal CHSH strategy and Bob's
//! block reports are checked against her statistics. In process tomography
//! Bob is held honest and Alice's Bell outcomes are checked against
//! deterministic parities of his answers.

pub mod channel;
pub mod devices;
pub mod lab;
pub mod process;
pub mod state;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::xz::XzError;

pub use channel::{with_devices, Device, Direction, Hands, LogEntry, Payload, SessionLog, Wire};
pub use devices::{bell_basis, chsh_bases, DeviceModel, HonestDevice, Instruction, ScriptedDevice};
pub use lab::{BlockState, Lab, MeasurementBasis, Side};
pub use process::{
    parity_table, process_soundness_chain, run_process_tomography, ChainReport, ParityTable,
    ProcessTomographyConfig, ProcessTomographyOutcome, ProcessTomographySession, ProcessVerdict,
    Violation,
};
pub use state::{
    acceptance_rate, chsh_floor, completeness_exponent, run_chsh_protocol, run_state_tomography,
    soundness_estimate_state, BlockMode, ChshProtocolOutcome, CoefficientRule, ReportEstimate,
    SoundnessEstimate, StateTomographyConfig, StateTomographyOutcome, StateTomographySession,
    StateVerdict, Thresholds,
};

#[derive(Debug, Error)]
pub enum TomographyError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Xz(#[from] XzError),
    #[error("bad measurement basis: {0}")]
    BadBasis(String),
    #[error("qubit {0} is not in the lab")]
    QubitOutOfRange(usize),
    #[error("qubit {0} was already measured")]
    QubitConsumed(usize),
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("{0:?} hung up")]
    Disconnected(Side),
    #[error("{0:?} failed: {1}")]
    Device(Side, String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("bad configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, TomographyError>;
