use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ProtocolError, Result};
use crate::teleport::Circuit;
use crate::xz::RESOURCE_QUBITS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubProtocol {
    Chsh,
    StateTomography,
    ProcessTomography,
    Computation,
}

impl SubProtocol {
    pub const ALL: [SubProtocol; 4] = [
        SubProtocol::Chsh,
        SubProtocol::StateTomography,
        SubProtocol::ProcessTomography,
        SubProtocol::Computation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SubProtocol::Chsh => "chsh",
            SubProtocol::StateTomography => "state",
            SubProtocol::ProcessTomography => "process",
            SubProtocol::Computation => "computation",
        }
    }
}

impl fmt::Display for SubProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubProtocol {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chsh" => Ok(SubProtocol::Chsh),
            "state" | "state_tomography" => Ok(SubProtocol::StateTomography),
            "process" | "process_tomography" => Ok(SubProtocol::ProcessTomography),
            "computation" | "compute" => Ok(SubProtocol::Computation),
            other => Err(ProtocolError::Config(format!("unknown sub-protocol {other:?}"))),
        }
    }
}

/// Probabilities of the four sub-protocols.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolWeights {
    pub chsh: f64,
    pub state_tomography: f64,
    pub process_tomography: f64,
    pub computation: f64,
}

impl Default for ProtocolWeights {
    fn default() -> Self {
        ProtocolWeights { chsh: 0.3, state_tomography: 0.3, process_tomography: 0.3, computation: 0.1 }
    }
}

impl ProtocolWeights {
    pub fn pinned(p: SubProtocol) -> Self {
        let mut w = ProtocolWeights { chsh: 0.0, state_tomography: 0.0, process_tomography: 0.0, computation: 0.0 };
        *w.get_mut(p) = 1.0;
        w
    }

    pub fn get(&self, p: SubProtocol) -> f64 {
        match p {
            SubProtocol::Chsh => self.chsh,
            SubProtocol::StateTomography => self.state_tomography,
            SubProtocol::ProcessTomography => self.process_tomography,
            SubProtocol::Computation => self.computation,
        }
    }

    fn get_mut(&mut self, p: SubProtocol) -> &mut f64 {
        match p {
            SubProtocol::Chsh => &mut self.chsh,
            SubProtocol::StateTomography => &mut self.state_tomography,
            SubProtocol::ProcessTomography => &mut self.process_tomography,
            SubProtocol::Computation => &mut self.computation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ws = SubProtocol::ALL.map(|p| self.get(p));
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ProtocolError::Config(format!("negative or non-finite weight in {ws:?}")));
        }
        let total: f64 = ws.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ProtocolError::Config(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SubProtocol {
        let mut u: f64 = rng.random();
        for p in SubProtocol::ALL {
            u -= self.get(p);
            if u < 0.0 {
                return p;
            }
        }
        // Rounding left u a hair above zero: take the last protocol with weight.
        *SubProtocol::ALL.iter().rev().find(|p| self.get(**p) > 0.0).expect("weights validated")
    }
}

/// A session uses `n` EPR pairs split into rounds of `m`. One round, chosen
/// uniformly, carries the tomography or computation; every other round is
/// CHSH games.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub n: usize,
    /// Qubits per round; a multiple of 22 so it splits into an even number
    /// of 11-qubit resource blocks.
    pub m: usize,
    /// CHSH rounds must win at rate at least `ω* − epsilon`.
    pub epsilon: f64,
    pub protocol_weights: ProtocolWeights,
    pub seed: u64,
    pub circuit: Option<Circuit>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            n: 1056,
            m: 88,
            epsilon: 0.05,
            protocol_weights: ProtocolWeights::default(),
            seed: 0,
            circuit: None,
        }
    }
}

impl ProtocolConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ProtocolConfig =
            serde_json::from_str(text).map_err(|e| ProtocolError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.protocol_weights.validate()?;
        if self.m == 0 || self.m % (2 * RESOURCE_QUBITS) != 0 {
            return Err(ProtocolError::Config(format!("m = {} is not a positive multiple of 22", self.m)));
        }
        if self.n == 0 || self.n % self.m != 0 {
            return Err(ProtocolError::Config(format!("m = {} does not divide n = {}", self.m, self.n)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(ProtocolError::Config(format!("epsilon = {} outside [0, 1]", self.epsilon)));
        }
        if let Some(c) = &self.circuit {
            c.validate()?;
            if super::compute::copies_per_round(c, self.blocks()) == 0 {
                return Err(ProtocolError::Config(format!(
                    "circuit needs more gadgets than {} blocks hold",
                    self.blocks()
                )));
            }
        }
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        self.n / self.m
    }

    /// Resource blocks per round.
    pub fn blocks(&self) -> usize {
        self.m / RESOURCE_QUBITS
    }

    pub fn pinned(&self, p: SubProtocol) -> Self {
        ProtocolConfig { protocol_weights: ProtocolWeights::pinned(p), ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ProtocolConfig { seed, ..self.clone() }
    }
}
