//! Dense complex linear algebra and quantum-information primitives for
//! registers of at most 12 qubits.

pub mod eigen;
pub mod matrix;
pub mod ops;
pub mod pauli;
pub mod serial;
pub mod states;

pub use eigen::{hermitian_eigen, singular_values, trace_norm, HermitianEigen};
pub use matrix::{c, inner, kron_vec, norm, r, CMatrix, C64, I_UNIT, ONE, ZERO};
pub use ops::{
    apply_local, embed_operator, gentle_measurement_bound, kron_all, measure_projective,
    partial_trace, partial_trace_matrix, reduced_state, tensor, trace_distance,
    trace_distance_matrix, GentleBound, Outcome, QObject,
};
pub use pauli::{pauli_coefficient, pauli_expectation, Pauli, PauliWord};
pub use serial::QuantumState;
pub use states::{
    DensityMatrix, LinalgError, PureState, Reflection, SuperOperator, Tolerance, MAX_DIM,
};
