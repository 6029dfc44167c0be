//! Jordan decompositions, single-game certificates and the chain of
//! strategy transformations from a general sequential strategy to an
//! ideal one, each with its measured simulation error.

pub mod certificate;
pub mod extract;
pub mod jordan;
pub mod pipeline;
pub mod pullback;
pub mod stages;

use thiserror::Error;

use crate::chsh::ChshError;
use crate::linalg::eigen::hermitian_eigen;
use crate::linalg::{LinalgError, QuantumState, C64};
use crate::sequential::SeqError;

pub use certificate::{
    embed_single_game, loglog_slope, perturbed_instance, scaling_sweep, single_game_certificate,
    RigidityCertificate, ScalingPoint,
};
pub use extract::{
    extract_device, extract_single_game_isometry, ideal_reflection, DeviceExtraction,
    SingleGameExtraction,
};
pub use jordan::{
    jordan_decompose, jordan_decompose_compact, BlockKind, JordanBlock, JordanDecomposition,
};
pub use pipeline::{perturbed_ideal, run_pipeline, PipelineConfig, PipelineReport};
pub use pullback::{guess_and_correct, pull_to_other_side, two_sided_superoperator};
pub use stages::{
    construct_ideal, construct_multi_qubit_ideal, construct_single_qubit_ideal, AncillaTransform,
    IdealConfig, IdealStrategy, MultiQubitIdeal, SingleQubitIdeal,
};

#[derive(Debug, Error)]
pub enum RigidityError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Chsh(#[from] ChshError),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("not in ideal form: {0}")]
    NotIdealForm(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, RigidityError>;

/// `{√λ_k v_k}` with `ρ = Σ λ_k v_k v_k†`.
pub fn state_components(state: &QuantumState) -> Result<Vec<Vec<C64>>> {
    match state {
        QuantumState::Pure(p) => Ok(vec![p.amplitudes().to_vec()]),
        QuantumState::Mixed(m) => {
            if m.dim() > 1024 {
                return Err(RigidityError::Capacity(
                    "mixed states above 1024 dimensions".into(),
                ));
            }
            let e = hermitian_eigen(m.matrix());
            Ok(e.values
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 1e-14)
                .map(|(k, &w)| e.vector(k).into_iter().map(|z| z * w.sqrt()).collect())
                .collect())
        }
    }
}
