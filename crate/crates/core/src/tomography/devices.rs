//! Honest devices and small deterministic adversary scripts.
//!
//! A device never learns which sub-protocol it is in: the honest device
//! answers every message type the same way whichever protocol sent it.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::channel::{Device, Hands, Payload};
use super::lab::{MeasurementBasis, Side};
use super::state::{BlockFactor, BlockMode};
use super::{Result, TomographyError};
use crate::chsh::ideal_strategy;
use crate::linalg::ops::embed_operator;
use crate::linalg::pauli::bell_state;
use crate::linalg::{CMatrix, Pauli};
use crate::rng::{child_rng, DetRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Instruction {
    /// Apply `pauli` to qubit `qubit` of every block before the honest
    /// block measurement.
    RotateMeasurement { qubit: usize, pauli: Pauli },
    /// On a random `fraction` of blocks report `target`, or `target + 1`
    /// when the true outcome is `target`; the report is always orthogonal
    /// to the prepared state.
    SubstituteReport { fraction: f64, target: u16 },
    /// Replace every block report with a uniformly random index.
    RandomReport,
    /// From Bell request number `first_request` on, report `code`;
    /// measure honestly first only if `measure`.
    FixedBellReport {
        code: u8,
        measure: bool,
        first_request: usize,
    },
    /// Answer CHSH questions with two bits instead of one.
    OversizedAnswer,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum DeviceModel {
    #[default]
    Honest,
    Scripted(Vec<Instruction>),
}

impl DeviceModel {
    pub fn instructions(&self) -> &[Instruction] {
        match self {
            DeviceModel::Honest => &[],
            DeviceModel::Scripted(v) => v,
        }
    }

    /// The device for `side`. Script randomness comes from `seed`.
    pub fn build(&self, side: Side, mode: BlockMode, seed: u64) -> Result<Box<dyn Device>> {
        let honest = HonestDevice::new(side, mode)?;
        Ok(match self {
            DeviceModel::Honest => Box::new(honest),
            DeviceModel::Scripted(script) => {
                Box::new(ScriptedDevice::new(honest, script.clone(), seed)?)
            }
        })
    }

    /// Kraus operators, per reported code, of this model's answer to Bell
    /// request number `request` (4×4, acting on the requested pair).
    pub fn alice_bell_kraus(&self, request: usize) -> [Vec<CMatrix>; 4] {
        let projectors = crate::linalg::pauli::bell_projectors();
        for ins in self.instructions() {
            if let Instruction::FixedBellReport {
                code,
                measure,
                first_request,
            } = ins
            {
                if request >= *first_request {
                    let mut out: [Vec<CMatrix>; 4] = Default::default();
                    out[*code as usize & 3] = if *measure {
                        projectors
                    } else {
                        vec![CMatrix::identity(4)]
                    };
                    return out;
                }
            }
        }
        projectors
            .into_iter()
            .map(|p| vec![p])
            .collect::<Vec<_>>()
            .try_into()
            .expect("four outcomes")
    }
}

pub fn bell_basis() -> MeasurementBasis {
    MeasurementBasis::new((0..4).map(|k| bell_state(k & 2 != 0, k & 1 != 0)).collect())
        .expect("Bell basis")
}

/// Ideal CHSH observables of `side`, as measurement bases.
pub fn chsh_bases(side: Side) -> Result<[MeasurementBasis; 2]> {
    let s = ideal_strategy();
    let r = match side {
        Side::Alice => &s.alice,
        Side::Bob => &s.bob,
    };
    Ok([
        MeasurementBasis::of_reflection(r[0].matrix())?,
        MeasurementBasis::of_reflection(r[1].matrix())?,
    ])
}

pub struct HonestDevice {
    chsh: [MeasurementBasis; 2],
    bell: MeasurementBasis,
    mode: BlockMode,
    factors: Arc<Vec<BlockFactor>>,
}

impl HonestDevice {
    pub fn new(side: Side, mode: BlockMode) -> Result<Self> {
        Ok(HonestDevice {
            chsh: chsh_bases(side)?,
            bell: bell_basis(),
            mode,
            factors: mode.factors()?,
        })
    }

    /// One report per block: through `basis` when given, otherwise factor
    /// by factor.
    fn measure_blocks(
        &self,
        perm: &[usize],
        basis: Option<&MeasurementBasis>,
        hands: &Hands,
    ) -> Result<Vec<u16>> {
        let k = self.mode.block_qubits();
        if perm.len() % k != 0 {
            return Err(TomographyError::Protocol(format!(
                "{} qubits do not split into blocks of {k}",
                perm.len()
            )));
        }
        perm.chunks(k)
            .map(|b| match basis {
                Some(basis) => hands.measure(b, basis).map(|o| o as u16),
                None => self.factors.iter().try_fold(0u16, |acc, f| {
                    let qs: Vec<usize> = f.qubits.iter().map(|&i| b[i]).collect();
                    Ok(acc | ((hands.measure(&qs, &f.basis)? as u16) << f.shift))
                }),
            })
            .collect()
    }
}

impl Device for HonestDevice {
    fn respond(&mut self, round: usize, payload: &Payload, hands: &Hands) -> Result<Payload> {
        match payload {
            Payload::Question(x) => {
                let o = hands.measure(&[round], &self.chsh[(*x & 1) as usize])?;
                Ok(Payload::Answer(o as u8))
            }
            Payload::Permutation(perm) => {
                Ok(Payload::Reports(self.measure_blocks(perm, None, hands)?))
            }
            Payload::BellRequest(a, b) => Ok(Payload::BellOutcome(
                hands.measure(&[*a, *b], &self.bell)? as u8,
            )),
            other => Err(TomographyError::Protocol(format!(
                "device cannot answer {other:?}"
            ))),
        }
    }
}

pub struct ScriptedDevice {
    honest: HonestDevice,
    script: Vec<Instruction>,
    /// Full block basis after any `RotateMeasurement`; `None` keeps the
    /// honest factorized measurement.
    block: Option<Arc<MeasurementBasis>>,
    bell_requests: usize,
    rng: DetRng,
}

impl ScriptedDevice {
    pub fn new(honest: HonestDevice, script: Vec<Instruction>, seed: u64) -> Result<Self> {
        let k = honest.mode.block_qubits();
        let mut block: Option<Arc<MeasurementBasis>> = None;
        for ins in &script {
            if let Instruction::RotateMeasurement { qubit, pauli } = ins {
                if *qubit >= k {
                    return Err(TomographyError::Config(format!(
                        "block qubit {qubit} out of range"
                    )));
                }
                let u = embed_operator(&pauli.matrix(), &vec![2; k], &[*qubit])?;
                let current = match block {
                    Some(b) => b,
                    None => honest.mode.basis()?,
                };
                block = Some(Arc::new(current.rotated(&u)?));
            }
        }
        Ok(ScriptedDevice {
            honest,
            script,
            block,
            bell_requests: 0,
            rng: child_rng(seed, 0xad),
        })
    }
}

impl Device for ScriptedDevice {
    fn respond(&mut self, round: usize, payload: &Payload, hands: &Hands) -> Result<Payload> {
        match payload {
            Payload::Permutation(perm) => {
                let mut reports = self
                    .honest
                    .measure_blocks(perm, self.block.as_deref(), hands)?;
                let size = self.honest.mode.basis_size() as u16;
                for ins in &self.script {
                    match ins {
                        Instruction::SubstituteReport { fraction, target } => {
                            for r in reports.iter_mut() {
                                if self.rng.random::<f64>() < *fraction {
                                    *r = if *r == *target {
                                        (target + 1) % size
                                    } else {
                                        *target
                                    };
                                }
                            }
                        }
                        Instruction::RandomReport => {
                            for r in reports.iter_mut() {
                                *r = self.rng.random_range(0..size);
                            }
                        }
                        _ => {}
                    }
                }
                Ok(Payload::Reports(reports))
            }
            Payload::BellRequest(a, b) => {
                let request = self.bell_requests;
                self.bell_requests += 1;
                for ins in &self.script {
                    if let Instruction::FixedBellReport {
                        code,
                        measure,
                        first_request,
                    } = ins
                    {
                        if request >= *first_request {
                            if *measure {
                                hands.measure(&[*a, *b], &self.honest.bell)?;
                            }
                            return Ok(Payload::BellOutcome(*code & 3));
                        }
                    }
                }
                self.honest.respond(round, payload, hands)
            }
            Payload::Question(_) if self.script.contains(&Instruction::OversizedAnswer) => {
                match self.honest.respond(round, payload, hands)? {
                    Payload::Answer(a) => Ok(Payload::Answer(a | 2)),
                    other => Ok(other),
                }
            }
            _ => self.honest.respond(round, payload, hands),
        }
    }
}
