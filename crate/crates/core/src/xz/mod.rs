//! States pinned down by `{I, σ_x, σ_z}` statistics alone.
//!
//! CHSH rigidity only certifies σ_x and σ_z measurements, so tomography has
//! to work without σ_y. A state is XZ-determined when its `{I,X,Z}^{⊗n}`
//! coefficients single it out among all states. Flipping the sign of σ_y
//! (entry-wise conjugation) never changes those coefficients, which gives a
//! cheap obstruction; stabilizer states with a σ_y-free generating set, up
//! to real local rotations, give the constructive certificate.

pub mod coefficients;
pub mod probe;
pub mod resource;
pub mod stabilizer;

use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum XzError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("inconsistent stabilizer generators: {0}")]
    InconsistentGenerators(String),
    #[error("local rotation {0} is not a real 2x2 unitary")]
    NotRealRotation(usize),
    #[error("state is not XZ-determined: {0}")]
    NotDetermined(String),
}

pub type Result<T> = std::result::Result<T, XzError>;

pub use coefficients::{
    conjugation_obstruction, conjugation_obstruction_pure, rotated_family, xz_coefficients,
    xz_coefficients_pure, xz_from_rotated, XZCoefficientVector, MAX_XZ_QUBITS,
};
pub use probe::{determination_exponent_probe, ExponentProbe, ProbePoint};
pub use resource::{
    plain_resource_state, resource_basis, resource_element, resource_factors,
    resource_gram_deviation, resource_stabilizer, ResourceBasisElement, RESOURCE_BASIS_SIZE,
    RESOURCE_QUBITS,
};
pub use stabilizer::{
    stabilizer_xz_certificate, SignedPauli, StabilizerSpec, XzCertificate, XzWitness,
};
