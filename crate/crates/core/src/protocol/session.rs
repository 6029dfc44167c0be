use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::compute::computation_round;
use super::config::{ProtocolConfig, SubProtocol};
use super::{ProtocolError, Result};
use crate::chsh::chsh_quantum_value;
use crate::rng::{child_rng, DetRng};
use crate::tomography::state::answer_bit;
use crate::tomography::{
    parity_table, with_devices, BlockMode, DeviceModel, Lab, Payload, ProcessTomographySession, SessionLog, Side,
    StateTomographySession, Thresholds, TomographyError, Wire,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
}

/// One session as Eve recorded it. Everything here is a function of the
/// config, the seed and the devices' replies, so a seeded run with
/// deterministic devices serializes to identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub seed: u64,
    pub protocol: SubProtocol,
    /// 1-based index of the special round.
    pub k: usize,
    pub messages: SessionLog,
    pub verdict: Verdict,
    pub diagnostic: Option<String>,
    pub games: usize,
    pub win_rate: Option<f64>,
    /// Logical outcomes of each circuit copy in a computation session.
    pub output: Vec<String>,
}

impl SessionRecord {
    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accept
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

#[derive(Default)]
struct Body {
    games: Vec<(u8, u8, u8, u8)>,
    /// Failure reason from the special round, if it rejected.
    special: Option<String>,
    output: Vec<String>,
}

fn play_games(wire: &mut Wire, rng: &mut DetRng, qubits: std::ops::Range<usize>) -> Result<Vec<(u8, u8, u8, u8)>> {
    qubits
        .map(|q| {
            let x: u8 = rng.random_range(0..2);
            let y: u8 = rng.random_range(0..2);
            let a = answer_bit(wire.ask(Side::Alice, q, Payload::Question(x))?)?;
            let b = answer_bit(wire.ask(Side::Bob, q, Payload::Question(y))?)?;
            Ok((x, y, a, b))
        })
        .collect()
}

fn single_questions(
    wire: &mut Wire,
    rng: &mut DetRng,
    side: Side,
    qubits: std::ops::Range<usize>,
) -> Result<BTreeMap<usize, (u8, u8)>> {
    qubits
        .map(|q| {
            let x: u8 = rng.random_range(0..2);
            Ok((q, (x, answer_bit(wire.ask(side, q, Payload::Question(x))?)?)))
        })
        .collect()
}

fn ask_blocks(wire: &mut Wire, round: usize, permutation: &[usize], blocks: usize) -> Result<Vec<u16>> {
    match wire.ask(Side::Bob, round, Payload::Permutation(permutation.to_vec()))? {
        Payload::Reports(r) if r.len() == blocks && r.iter().all(|&x| (x as usize) < BlockMode::Resource.basis_size()) => {
            Ok(r)
        }
        other => Err(ProtocolError::Malformed(format!("expected {blocks} block reports, got {other:?}"))),
    }
}

fn special_round(
    cfg: &ProtocolConfig,
    protocol: SubProtocol,
    k: usize,
    wire: &mut Wire,
    rng: &mut DetRng,
    body: &mut Body,
) -> Result<()> {
    let start = (k - 1) * cfg.m;
    let qubits = start..start + cfg.m;
    let blocks = cfg.blocks();
    match protocol {
        SubProtocol::Chsh => body.games.extend(play_games(wire, rng, qubits)?),
        SubProtocol::StateTomography => {
            let mut permutation: Vec<usize> = qubits.clone().collect();
            permutation.shuffle(rng);
            let bob_reports = ask_blocks(wire, start, &permutation, blocks)?;
            let alice_transcript = single_questions(wire, rng, Side::Alice, qubits)?;
            let session = StateTomographySession {
                m: blocks,
                mode: BlockMode::Resource,
                k,
                prefix_games: Vec::new(),
                permutation,
                bob_reports,
                alice_transcript,
                thresholds: Thresholds::for_blocks(blocks),
            };
            let v = session.decide()?;
            if !v.accepted {
                body.special = Some(format!(
                    "state tomography: frequency gap {:.4} (ok {}), coefficients ok {}",
                    v.worst_frequency_gap, v.frequency_ok, v.coefficient_ok
                ));
            }
        }
        SubProtocol::ProcessTomography => {
            let mut order: Vec<usize> = qubits.clone().collect();
            order.shuffle(rng);
            let pair_schedule: Vec<(usize, usize)> = order.chunks(2).map(|c| (c[0], c[1])).collect();
            let mut alice_reports = Vec::with_capacity(pair_schedule.len());
            for (i, &(a, b)) in pair_schedule.iter().enumerate() {
                match wire.ask(Side::Alice, start + i, Payload::BellRequest(a, b))? {
                    Payload::BellOutcome(c) if c < 4 => alice_reports.push(c),
                    other => return Err(ProtocolError::Malformed(format!("expected a Bell outcome, got {other:?}"))),
                }
            }
            let bob_transcript = single_questions(wire, rng, Side::Bob, qubits)?;
            let session = ProcessTomographySession {
                m: cfg.m,
                k,
                prefix_games: Vec::new(),
                pair_schedule,
                alice_reports,
                bob_transcript,
            };
            let v = session.decide(&parity_table())?;
            if !v.accepted {
                body.special = Some(format!(
                    "process tomography: {} of {} parity checks failed",
                    v.violations.len(),
                    v.checks
                ));
            }
        }
        SubProtocol::Computation => {
            let mut permutation: Vec<usize> = qubits.collect();
            permutation.shuffle(rng);
            let reports = ask_blocks(wire, start, &permutation, blocks)?;
            body.output = computation_round(wire, rng, cfg.circuit.as_ref(), &permutation, &reports, start)?;
        }
    }
    Ok(())
}

/// One session with fresh EPR pairs. The sub-protocol and the special round
/// are drawn from `cfg.seed`; a device that sends something malformed gets a
/// reject verdict with a diagnostic rather than an error.
pub fn run_session(cfg: &ProtocolConfig, alice: &DeviceModel, bob: &DeviceModel) -> Result<SessionRecord> {
    cfg.validate()?;
    let seed = cfg.seed;
    let mut rng = child_rng(seed, 0);
    let protocol = cfg.protocol_weights.sample(&mut rng);
    let k = rng.random_range(1..=cfg.rounds());
    let lab = Arc::new(Mutex::new(Lab::new(cfg.n, seed ^ 0x6a09_e667_f3bc_c908)));
    let mut alice_dev = alice.build(Side::Alice, BlockMode::Resource, seed ^ 1)?;
    let mut bob_dev = bob.build(Side::Bob, BlockMode::Resource, seed ^ 2)?;
    let (outcome, messages) = with_devices(lab, alice_dev.as_mut(), bob_dev.as_mut(), |wire| {
        let mut body = Body::default();
        let run = (|| {
            for r in 1..=cfg.rounds() {
                if r == k {
                    special_round(cfg, protocol, k, wire, &mut rng, &mut body)?;
                } else {
                    let start = (r - 1) * cfg.m;
                    body.games.extend(play_games(wire, &mut rng, start..start + cfg.m)?);
                }
            }
            Ok(())
        })();
        Ok(run.map(|()| body))
    })?;
    let body = match outcome {
        Ok(b) => b,
        Err(e) => match malformed(e) {
            Ok(reason) => {
                return Ok(SessionRecord {
                    seed,
                    protocol,
                    k,
                    messages,
                    verdict: Verdict::Reject,
                    diagnostic: Some(format!("malformed: {reason}")),
                    games: 0,
                    win_rate: None,
                    output: Vec::new(),
                })
            }
            Err(e) => return Err(e),
        },
    };
    let wins = body.games.iter().filter(|(x, y, a, b)| (x & y) == (a ^ b)).count();
    let win_rate = (!body.games.is_empty()).then(|| wins as f64 / body.games.len() as f64);
    let floor = chsh_quantum_value() - cfg.epsilon;
    let mut diagnostic = body.special;
    if let Some(w) = win_rate.filter(|&w| w < floor) {
        diagnostic.get_or_insert(format!("CHSH win rate {w:.4} below {floor:.4}"));
    }
    Ok(SessionRecord {
        seed,
        protocol,
        k,
        messages,
        verdict: if diagnostic.is_none() { Verdict::Accept } else { Verdict::Reject },
        diagnostic,
        games: body.games.len(),
        win_rate,
        output: body.output,
    })
}

/// Errors caused by what a device sent, as opposed to a broken simulation.
fn malformed(e: ProtocolError) -> std::result::Result<String, ProtocolError> {
    match e {
        ProtocolError::Malformed(s) => Ok(s),
        ProtocolError::Tomography(TomographyError::Protocol(s)) => Ok(s),
        // The simulator running out of room is not the device's fault.
        ProtocolError::Tomography(TomographyError::Device(_, s)) if s.starts_with("capacity") => {
            Err(ProtocolError::Tomography(TomographyError::Capacity(s)))
        }
        ProtocolError::Tomography(TomographyError::Device(side, s)) => Ok(format!("{side:?}: {s}")),
        ProtocolError::Tomography(TomographyError::Disconnected(side)) => Ok(format!("{side:?} hung up")),
        other => Err(other),
    }
}
