//! Simulation toolkit for verifying quantum computation with two untrusted,
//! non-communicating devices: CHSH games and their rigidity, sequential
//! strategies, XZ-determined states, tomography sub-protocols, computation by
//! teleportation, and the verifier's top-level protocol.

pub mod chsh;
pub mod linalg;
pub mod protocol;
pub mod rigidity;
pub mod rng;
pub mod sequential;
pub mod stats;
pub mod teleport;
pub mod tomography;
pub mod xz;
