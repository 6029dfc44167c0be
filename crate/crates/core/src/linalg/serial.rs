//! JSON encoding: complex numbers as `[re, im]`, matrices as row-major
//! lists of rows, states carrying a `dims` field.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::matrix::{CMatrix, C64};
use super::states::{DensityMatrix, PureState, Reflection};

fn encode_vec(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn decode_vec(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|p| C64::new(p[0], p[1])).collect()
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows()).map(|i| encode_vec(self.row(i))).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(CMatrix::from_rows(
            &rows.iter().map(|r| decode_vec(r)).collect::<Vec<_>>(),
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct PureJson {
    amplitudes: Vec<[f64; 2]>,
    dims: Vec<usize>,
}

impl Serialize for PureState {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PureJson {
            amplitudes: encode_vec(self.amplitudes()),
            dims: self.dims().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = PureJson::deserialize(d)?;
        PureState::new(decode_vec(&j.amplitudes), j.dims).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DensityJson {
            matrix: self.matrix().clone(),
            dims: self.dims().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = DensityJson::deserialize(d)?;
        DensityMatrix::new(j.matrix, j.dims).map_err(D::Error::custom)
    }
}

impl Serialize for Reflection {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.matrix().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Reflection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Reflection::new(CMatrix::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// Either a pure state or a density matrix; serialized untagged.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuantumState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn density(&self) -> DensityMatrix {
        match self {
            QuantumState::Pure(p) => p.density(),
            QuantumState::Mixed(m) => m.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(p) => p.dim(),
            QuantumState::Mixed(m) => m.dim(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        match self {
            QuantumState::Pure(p) => p.dims(),
            QuantumState::Mixed(m) => m.dims(),
        }
    }

    /// `Tr(ρ·op)`.
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        match self {
            QuantumState::Pure(p) => {
                super::matrix::inner(p.amplitudes(), &op.apply(p.amplitudes()))
            }
            QuantumState::Mixed(m) => m.expectation(op),
        }
    }
}
