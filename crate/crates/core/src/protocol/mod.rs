//! Eve's top-level protocol. Each session picks one of four sub-protocols
//! at random and runs it against two isolated devices over classical links.
//!
//! A session uses `n` EPR pairs in rounds of `m`. One uniformly chosen round
//! is special; all others are CHSH games with both devices. In the special
//! round:
//!
//! | sub-protocol | Alice | Bob |
//! |---|---|---|
//! | CHSH | games | games |
//! | state tomography | single CHSH questions | permutation, block reports |
//! | process tomography | Bell requests | single CHSH questions |
//! | computation | Bell requests | permutation, block reports |
//!
//! So Alice cannot tell process tomography from computation, or state
//! tomography from CHSH, and Bob cannot tell state tomography from
//! computation, or process tomography from CHSH.

pub mod compute;
pub mod config;
pub mod run;
pub mod session;
pub mod views;

use thiserror::Error;

use crate::teleport::TeleportError;
use crate::tomography::TomographyError;

pub use compute::copies_per_round;
pub use config::{ProtocolConfig, ProtocolWeights, SubProtocol};
pub use run::{full_verified_run, run_sessions, session_seed, ProtocolStats, RunReport};
pub use session::{run_session, SessionRecord, Verdict};
pub use views::{view_feature, view_indistinguishability, ViewReport};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Tomography(#[from] TomographyError),
    #[error(transparent)]
    Teleport(#[from] TeleportError),
    #[error("bad configuration: {0}")]
    Config(String),
    #[error("malformed message: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;
