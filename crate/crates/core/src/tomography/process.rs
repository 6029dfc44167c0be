//! Process tomography: Alice Bell-measures random pairs of her qubits and
//! reports the outcomes while Bob keeps playing CHSH games on his halves.
//! Bell states have deterministic parities for some of Bob's question
//! pairs; a single wrong parity rejects.

use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::channel::{with_devices, Payload, SessionLog};
use super::devices::DeviceModel;
use super::lab::{Lab, Side};
use super::state::{answer_bit, chsh_floor, chsh_win_rate, draw_k, play_prefix, BlockMode};
use super::{Result, TomographyError};
use crate::chsh::ideal_strategy;
use crate::linalg::eigen::{eigenvalues_hermitian, psd_sqrt};
use crate::linalg::matrix::inner;
use crate::linalg::ops::apply_local;
use crate::linalg::pauli::{bell_projectors, bell_state};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::rng::child_rng;

/// `checks[code][y1][y2]`: the parity Bob's answers must have when the pair
/// is in Bell state `code` and he is asked `(y1, y2)`, or `None` when his
/// answers are not determined.
pub type ParityTable = [[[Option<u8>; 2]; 2]; 4];

/// Derived from Bob's ideal CHSH observables: a check exists exactly when
/// the reported Bell state (as it appears on Bob's side) is an eigenvector of
/// `B_{y1} ⊗ B_{y2}`.
pub fn parity_table() -> ParityTable {
    let s = ideal_strategy();
    let mut t = [[[None; 2]; 2]; 4];
    for (code, row) in t.iter_mut().enumerate() {
        let v: Vec<C64> = bell_state(code & 2 != 0, code & 1 != 0)
            .iter()
            .map(|a| a.conj())
            .collect();
        for (y1, cell) in row.iter_mut().enumerate() {
            for (y2, slot) in cell.iter_mut().enumerate() {
                let o = s.bob[y1].matrix().kron(s.bob[y2].matrix());
                let e = inner(&v, &o.apply(&v)).re;
                if (e.abs() - 1.0).abs() < 1e-9 {
                    *slot = Some(if e > 0.0 { 0 } else { 1 });
                }
            }
        }
    }
    t
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProcessTomographyConfig {
    /// Qubits in the tomography block (even).
    pub m: usize,
    pub k_range: usize,
    pub pin_k: Option<usize>,
}

impl ProcessTomographyConfig {
    pub fn new(m: usize) -> Self {
        ProcessTomographyConfig {
            m,
            k_range: 1,
            pin_k: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub request: usize,
    pub qubits: (usize, usize),
    pub code: u8,
    pub questions: (u8, u8),
    pub answers: (u8, u8),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProcessTomographySession {
    pub m: usize,
    pub k: usize,
    pub prefix_games: Vec<(u8, u8, u8, u8)>,
    /// Disjoint pairs of lab indices, in request order.
    pub pair_schedule: Vec<(usize, usize)>,
    pub alice_reports: Vec<u8>,
    /// Bob's `(question, answer)` by lab index.
    pub bob_transcript: std::collections::BTreeMap<usize, (u8, u8)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProcessVerdict {
    pub accepted: bool,
    pub prefix_win_rate: Option<f64>,
    pub prefix_ok: bool,
    /// Pairs whose questions gave a deterministic check.
    pub checks: usize,
    pub violations: Vec<Violation>,
}

impl ProcessTomographySession {
    pub fn decide(&self, table: &ParityTable) -> Result<ProcessVerdict> {
        if self.alice_reports.len() != self.pair_schedule.len() {
            return Err(TomographyError::Protocol(
                "one report per requested pair".into(),
            ));
        }
        let prefix_win_rate = chsh_win_rate(&self.prefix_games);
        let prefix_ok = prefix_win_rate.is_none_or(|w| w >= chsh_floor(self.prefix_games.len()));
        let mut checks = 0;
        let mut violations = Vec::new();
        for (request, (&(a, b), &code)) in self
            .pair_schedule
            .iter()
            .zip(&self.alice_reports)
            .enumerate()
        {
            let (&(y1, b1), &(y2, b2)) =
                match (self.bob_transcript.get(&a), self.bob_transcript.get(&b)) {
                    (Some(p), Some(q)) => (p, q),
                    _ => {
                        return Err(TomographyError::Protocol(format!(
                            "no CHSH answers for pair ({a}, {b})"
                        )))
                    }
                };
            if let Some(parity) = table[(code & 3) as usize][y1 as usize][y2 as usize] {
                checks += 1;
                if b1 ^ b2 != parity {
                    violations.push(Violation {
                        request,
                        qubits: (a, b),
                        code,
                        questions: (y1, y2),
                        answers: (b1, b2),
                    });
                }
            }
        }
        Ok(ProcessVerdict {
            accepted: prefix_ok && violations.is_empty(),
            prefix_win_rate,
            prefix_ok,
            checks,
            violations,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProcessTomographyOutcome {
    pub session: ProcessTomographySession,
    pub verdict: ProcessVerdict,
    #[serde(skip)]
    pub log: SessionLog,
}

pub fn run_process_tomography(
    cfg: &ProcessTomographyConfig,
    alice: &DeviceModel,
    bob: &DeviceModel,
    seed: u64,
) -> Result<ProcessTomographyOutcome> {
    if cfg.m < 2 || cfg.m % 2 != 0 {
        return Err(TomographyError::Config(format!(
            "m = {} must be a positive even count",
            cfg.m
        )));
    }
    let mut rng = child_rng(seed, 1);
    let k = draw_k(&mut rng, cfg.k_range, cfg.pin_k)?;
    let prefix = (k - 1) * cfg.m;
    let total = prefix + cfg.m;
    let lab = Arc::new(Mutex::new(Lab::new(total, seed ^ 0x5851_f42d_4c95_7f2d)));
    let mut alice_dev = alice.build(Side::Alice, BlockMode::Bell, seed ^ 1)?;
    let mut bob_dev = bob.build(Side::Bob, BlockMode::Bell, seed ^ 2)?;
    let (session, log) = with_devices(lab, alice_dev.as_mut(), bob_dev.as_mut(), |wire| {
        let prefix_games = play_prefix(wire, &mut rng, prefix)?;
        let mut order: Vec<usize> = (prefix..total).collect();
        order.shuffle(&mut rng);
        let pair_schedule: Vec<(usize, usize)> = order.chunks(2).map(|c| (c[0], c[1])).collect();
        let mut alice_reports = Vec::with_capacity(pair_schedule.len());
        for (i, &(a, b)) in pair_schedule.iter().enumerate() {
            match wire.ask(Side::Alice, prefix + i, Payload::BellRequest(a, b))? {
                Payload::BellOutcome(c) if c < 4 => alice_reports.push(c),
                other => {
                    return Err(TomographyError::Protocol(format!(
                        "expected a Bell outcome, got {other:?}"
                    )))
                }
            }
        }
        let mut bob_transcript = std::collections::BTreeMap::new();
        for q in prefix..total {
            let y: u8 = rng.random_range(0..2);
            let b = answer_bit(wire.ask(Side::Bob, q, Payload::Question(y))?)?;
            bob_transcript.insert(q, (y, b));
        }
        Ok(ProcessTomographySession {
            m: cfg.m,
            k,
            prefix_games,
            pair_schedule,
            alice_reports,
            bob_transcript,
        })
    })?;
    let verdict = session.decide(&parity_table())?;
    Ok(ProcessTomographyOutcome {
        session,
        verdict,
        log,
    })
}

pub const MAX_CHAIN_QUBITS: usize = 8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainReport {
    pub m: usize,
    /// Pairs of Alice's qubits (0-based within the block), in request order.
    pub schedule: Vec<(usize, usize)>,
    /// `‖G^A_j(ρ̂) − Ĝ^A_j(ρ̂)‖_tr` for each request.
    pub per_step: Vec<f64>,
    /// `2√(1 − p_j)`, with `p_j` the probability that request `j` passes a
    /// Bell-measurement comparison on Bob's side.
    pub gentle_bounds: Vec<f64>,
    /// Distance between consecutive chain states, where state `j` has the
    /// first `j` ideal measurements moved to Bob's side.
    pub hops: Vec<f64>,
    /// `‖G^A_{1..}(ρ̂) − Ĝ^A_{1..}(ρ̂)‖_tr`.
    pub accumulated: f64,
    /// Ideal measurements on Alice's side versus the same on Bob's side;
    /// zero up to rounding.
    pub transpose_residual: f64,
    pub chain_holds: bool,
}

/// One step: Kraus operators per reported code, acting on `targets`.
struct Step {
    targets: [usize; 2],
    kraus: [Vec<CMatrix>; 4],
}

/// `‖Σ u u† − Σ v v†‖₁` through the Gram matrix of the pieces, with closed
/// forms for the one-against-one and one-sided cases.
fn piece_trace_norm(us: &[Vec<C64>], vs: &[Vec<C64>]) -> f64 {
    let sq = |v: &Vec<C64>| v.iter().map(|a| a.norm_sqr()).sum::<f64>();
    match (us.len(), vs.len()) {
        (0, _) => vs.iter().map(sq).sum(),
        (_, 0) => us.iter().map(sq).sum(),
        (1, 1) => {
            let (a, b) = (sq(&us[0]), sq(&vs[0]));
            ((a + b).powi(2) - 4.0 * inner(&us[0], &vs[0]).norm_sqr())
                .max(0.0)
                .sqrt()
        }
        _ => {
            // Nonzero spectrum of V S V† equals that of G^{1/2} S G^{1/2}.
            let all: Vec<&Vec<C64>> = us.iter().chain(vs).collect();
            let gram = CMatrix::from_fn(all.len(), all.len(), |i, j| inner(all[i], all[j]));
            let root = psd_sqrt(&gram.hermitian_part());
            let signs: Vec<C64> = (0..all.len())
                .map(|k| C64::new(if k < us.len() { 1.0 } else { -1.0 }, 0.0))
                .collect();
            let mid = root.matmul(&CMatrix::diag(&signs)).matmul(&root);
            eigenvalues_hermitian(&mid.hermitian_part())
                .iter()
                .map(|x| x.abs())
                .sum()
        }
    }
}

/// Half the trace norm between two cq states whose branches are given by
/// their rank-one pieces.
fn cq_distance(a: &[Vec<Vec<C64>>], b: &[Vec<Vec<C64>>]) -> f64 {
    0.5 * a
        .iter()
        .zip(b)
        .map(|(u, v)| piece_trace_norm(u, v))
        .sum::<f64>()
}

struct ChainSpace {
    m: usize,
    phi: Vec<C64>,
    dims: Vec<usize>,
}

impl ChainSpace {
    fn new(m: usize) -> Self {
        // Alice's qubits first, then Bob's; |Φ⟩ = Σ_i |i⟩|i⟩ / √d.
        let d = 1usize << m;
        let mut phi = vec![ZERO; d * d];
        let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        for i in 0..d {
            phi[(i << m) | i] = amp;
        }
        ChainSpace {
            m,
            phi,
            dims: vec![2; 2 * m],
        }
    }

    fn alice(&self, v: &[C64], op: &CMatrix, t: [usize; 2]) -> Vec<C64> {
        apply_local(v, &self.dims, op, &t).expect("chain register")
    }

    fn bob(&self, v: &[C64], op: &CMatrix, t: [usize; 2]) -> Vec<C64> {
        apply_local(v, &self.dims, op, &[t[0] + self.m, t[1] + self.m]).expect("chain register")
    }

    /// Branches of the chain state with steps `< split` done ideally on
    /// Bob's side and the rest by Alice's model, one entry per outcome tuple
    /// (base 4, first step most significant).
    fn chain_state(&self, steps: &[Step], ideal: &[CMatrix], split: usize) -> Vec<Vec<Vec<C64>>> {
        let n = steps.len();
        (0..4usize.pow(n as u32))
            .map(|tuple| {
                let codes: Vec<usize> = (0..n).map(|j| (tuple >> (2 * (n - 1 - j))) & 3).collect();
                let mut pieces = vec![self.phi.clone()];
                for (j, step) in steps.iter().enumerate() {
                    let o = codes[j];
                    pieces = if j < split {
                        pieces
                            .iter()
                            .map(|v| self.bob(v, &ideal[o], step.targets))
                            .collect()
                    } else {
                        pieces
                            .iter()
                            .flat_map(|v| {
                                step.kraus[o]
                                    .iter()
                                    .map(move |k| self.alice(v, k, step.targets))
                            })
                            .collect()
                    };
                    if pieces.is_empty() {
                        break;
                    }
                }
                pieces
            })
            .collect()
    }
}

/// Exact error chain for process tomography with `m ≤ 8` qubits.
pub fn process_soundness_chain(alice: &DeviceModel, m: usize, seed: u64) -> Result<ChainReport> {
    if m < 2 || m % 2 != 0 || m > MAX_CHAIN_QUBITS {
        return Err(TomographyError::Capacity(format!(
            "chain needs an even m ≤ {MAX_CHAIN_QUBITS}, got {m}"
        )));
    }
    let mut rng = child_rng(seed, 2);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    let schedule: Vec<(usize, usize)> = order.chunks(2).map(|c| (c[0], c[1])).collect();
    let ideal = bell_projectors();
    let steps: Vec<Step> = schedule
        .iter()
        .enumerate()
        .map(|(j, &(a, b))| Step {
            targets: [a, b],
            kraus: alice.alice_bell_kraus(j),
        })
        .collect();
    let space = ChainSpace::new(m);
    let n = steps.len();

    let mut per_step = Vec::with_capacity(n);
    let mut gentle_bounds = Vec::with_capacity(n);
    for step in &steps {
        let model: Vec<Vec<Vec<C64>>> = (0..4)
            .map(|o| {
                step.kraus[o]
                    .iter()
                    .map(|k| space.alice(&space.phi, k, step.targets))
                    .collect()
            })
            .collect();
        let bob: Vec<Vec<Vec<C64>>> = (0..4)
            .map(|o| vec![space.bob(&space.phi, &ideal[o], step.targets)])
            .collect();
        per_step.push(cq_distance(&model, &bob));
        let pass: f64 = (0..4)
            .map(|o| {
                model[o]
                    .iter()
                    .map(|v| {
                        space
                            .bob(v, &ideal[o], step.targets)
                            .iter()
                            .map(|a| a.norm_sqr())
                            .sum::<f64>()
                    })
                    .sum::<f64>()
            })
            .sum();
        gentle_bounds.push(2.0 * (1.0 - pass).max(0.0).sqrt());
    }

    let states: Vec<Vec<Vec<Vec<C64>>>> = (0..=n)
        .map(|split| space.chain_state(&steps, &ideal, split))
        .collect();
    let hops: Vec<f64> = states
        .windows(2)
        .map(|w| cq_distance(&w[0], &w[1]))
        .collect();
    let accumulated = cq_distance(&states[0], &states[n]);

    let honest: Vec<Step> = schedule
        .iter()
        .map(|&(a, b)| Step {
            targets: [a, b],
            kraus: ideal
                .iter()
                .map(|p| vec![p.clone()])
                .collect::<Vec<_>>()
                .try_into()
                .expect("four"),
        })
        .collect();
    let alice_ideal = space.chain_state(&honest, &ideal, 0);
    let transpose_residual = cq_distance(&alice_ideal, &states[n]);

    let total: f64 = per_step.iter().sum();
    Ok(ChainReport {
        m,
        schedule,
        chain_holds: accumulated <= total + 1e-9,
        per_step,
        gentle_bounds,
        hops,
        accumulated,
        transpose_residual,
    })
}
