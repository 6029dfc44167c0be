//! Sequences of CHSH games played by devices with memory.

pub mod exact;
pub mod play;
pub mod strategy;
pub mod transcript;

use thiserror::Error;

use crate::chsh::ChshError;
use crate::linalg::LinalgError;

pub use exact::{
    check_structure_preservation, conditional_win_probability, game_superoperator, initial_branch,
    paired_distance, play_game, replacement_distance, simulation_distance,
    simulation_distance_embedded, structure_report, transcript_state, walk_transcripts, Branch,
    SimulationDistance, StructureReport, TranscriptState,
};
pub use play::{eve_accept, play_games, PlayOutcome, TrialRecord};
pub use strategy::{
    builtin, local_transcripts, AnyStrategy, ProductStrategy, SequentialStrategy, StrategyFile,
};
pub use transcript::{Device, LocalTranscript, Transcript};

#[derive(Debug, Error)]
pub enum SeqError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Chsh(#[from] ChshError),
    #[error("no reflection for {0}")]
    MissingReflection(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("invalid strategy: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, SeqError>;
