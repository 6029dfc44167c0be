use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, TeleportError};
use crate::linalg::ops::apply_local;
use crate::linalg::pauli::{cnot, g_gate, hadamard};
use crate::linalg::{PureState, C64, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Gate {
    Prepare { wire: usize },
    H { wire: usize },
    G { wire: usize },
    Cnot { control: usize, target: usize },
    Measure { wire: usize },
}

impl Gate {
    pub fn wires(&self) -> Vec<usize> {
        match *self {
            Gate::Prepare { wire } | Gate::H { wire } | Gate::G { wire } | Gate::Measure { wire } => vec![wire],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }
}

/// Wires start unprepared; each used wire is prepared in `|0⟩` once, before
/// anything else touches it, and nothing follows its measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub wires: usize,
    pub gates: Vec<Gate>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum WireStage {
    Fresh,
    Live,
    Measured,
}

impl Circuit {
    pub fn new(wires: usize, gates: Vec<Gate>) -> Result<Self> {
        let c = Circuit { wires, gates };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |i: usize, why: &str| Err(TeleportError::Circuit(format!("gate {i}: {why}")));
        let mut stage = vec![WireStage::Fresh; self.wires];
        for (i, g) in self.gates.iter().enumerate() {
            let ws = g.wires();
            if ws.iter().any(|&w| w >= self.wires) {
                return bad(i, "wire out of range");
            }
            if ws.len() == 2 && ws[0] == ws[1] {
                return bad(i, "CNOT control equals target");
            }
            match g {
                Gate::Prepare { wire } => {
                    if stage[*wire] != WireStage::Fresh {
                        return bad(i, "wire prepared twice");
                    }
                    stage[*wire] = WireStage::Live;
                }
                _ => {
                    for &w in &ws {
                        match stage[w] {
                            WireStage::Fresh => return bad(i, "wire used before preparation"),
                            WireStage::Measured => return bad(i, "wire used after measurement"),
                            WireStage::Live => {}
                        }
                    }
                    if let Gate::Measure { wire } = g {
                        stage[*wire] = WireStage::Measured;
                    }
                }
            }
        }
        Ok(())
    }

    /// Either `{"wires": w, "gates": [...]}` or a bare list of gates, in
    /// which case the wire count is one past the largest wire used.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum File {
            Full(Circuit),
            Gates(Vec<Gate>),
        }
        let file: File = serde_json::from_str(text).map_err(|e| TeleportError::Circuit(e.to_string()))?;
        let c = match file {
            File::Full(c) => c,
            File::Gates(gates) => {
                let wires = gates.iter().flat_map(Gate::wires).max().map_or(0, |w| w + 1);
                Circuit { wires, gates }
            }
        };
        c.validate()?;
        Ok(c)
    }

    /// Wires in measurement order; output bit strings follow this order.
    pub fn measured_wires(&self) -> Vec<usize> {
        self.gates
            .iter()
            .filter_map(|g| match g {
                Gate::Measure { wire } => Some(*wire),
                _ => None,
            })
            .collect()
    }

    pub fn prepared_wires(&self) -> Vec<usize> {
        self.gates
            .iter()
            .filter_map(|g| match g {
                Gate::Prepare { wire } => Some(*wire),
                _ => None,
            })
            .collect()
    }

    pub fn count(&self, pred: impl Fn(&Gate) -> bool) -> usize {
        self.gates.iter().filter(|g| pred(g)).count()
    }

    /// Prepare every wire, apply `gates` uniformly random gates, measure
    /// every wire.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, wires: usize, gates: usize) -> Self {
        let mut out: Vec<Gate> = (0..wires).map(|wire| Gate::Prepare { wire }).collect();
        for _ in 0..gates {
            let wire = rng.random_range(0..wires);
            let kind = if wires > 1 { rng.random_range(0..3) } else { rng.random_range(0..2) };
            out.push(match kind {
                0 => Gate::H { wire },
                1 => Gate::G { wire },
                _ => {
                    let target = (wire + rng.random_range(1..wires)) % wires;
                    Gate::Cnot { control: wire, target }
                }
            });
        }
        out.extend((0..wires).map(|wire| Gate::Measure { wire }));
        Circuit { wires, gates: out }
    }

    /// State of all wires (qubit `w` = wire `w`) after every unitary gate,
    /// measurements skipped. Unprepared wires stay `|0⟩`.
    pub fn direct_state(&self) -> Result<PureState> {
        let dims = vec![2; self.wires];
        let mut amps = vec![ZERO; 1 << self.wires];
        amps[0] = ONE;
        for g in &self.gates {
            amps = match *g {
                Gate::H { wire } => apply_local(&amps, &dims, &hadamard(), &[wire])?,
                Gate::G { wire } => apply_local(&amps, &dims, &g_gate(), &[wire])?,
                Gate::Cnot { control, target } => apply_local(&amps, &dims, &cnot(), &[control, target])?,
                Gate::Prepare { .. } | Gate::Measure { .. } => amps,
            };
        }
        Ok(PureState::new(amps, dims)?)
    }

    /// Exact distribution of the measured bits.
    pub fn direct_distribution(&self) -> Result<BTreeMap<String, f64>> {
        let measured = self.measured_wires();
        let psi = self.direct_state()?;
        let mut out = BTreeMap::new();
        for (i, a) in psi.amplitudes().iter().enumerate() {
            let p = a.norm_sqr();
            if p > 1e-15 {
                let key: String =
                    measured.iter().map(|&w| if (i >> (self.wires - 1 - w)) & 1 == 1 { '1' } else { '0' }).collect();
                *out.entry(key).or_insert(0.0) += p;
            }
        }
        Ok(out)
    }
}

/// `k` as `n` bits, most significant first.
pub fn bit_string(k: usize, n: usize) -> String {
    (0..n).map(|i| if (k >> (n - 1 - i)) & 1 == 1 { '1' } else { '0' }).collect()
}

pub(crate) fn basis_amp(bit: bool) -> Vec<C64> {
    if bit {
        vec![ZERO, ONE]
    } else {
        vec![ONE, ZERO]
    }
}
