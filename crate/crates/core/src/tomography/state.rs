//! State tomography: Bob measures permuted blocks of his EPR halves in a
//! product basis of XZ-determined states and reports the outcomes, while
//! Alice keeps playing ordinary CHSH games. Eve compares report frequencies
//! with uniform and Alice's statistics with the reported states.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::{with_devices, Payload, SessionLog, Wire};
use super::devices::{bell_basis, DeviceModel};
use super::lab::{Lab, MeasurementBasis, Side};
use super::{Result, TomographyError};
use crate::chsh::chsh_quantum_value;
use crate::linalg::pauli::bell_state;
use crate::linalg::{PauliWord, PureState};
use crate::rng::{child_rng, DetRng};
use crate::xz::{
    resource_basis, resource_element, resource_factors, xz_coefficients_pure, RESOURCE_QUBITS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockMode {
    /// Two-qubit blocks measured in the Bell basis.
    Bell,
    /// Eleven-qubit blocks measured in the twirled resource basis.
    Resource,
}

impl BlockMode {
    pub fn block_qubits(self) -> usize {
        match self {
            BlockMode::Bell => 2,
            BlockMode::Resource => RESOURCE_QUBITS,
        }
    }

    pub fn basis_size(self) -> usize {
        1 << self.block_qubits()
    }

    pub fn basis(self) -> Result<Arc<MeasurementBasis>> {
        static BELL: OnceLock<Arc<MeasurementBasis>> = OnceLock::new();
        static RESOURCE: OnceLock<Arc<MeasurementBasis>> = OnceLock::new();
        match self {
            BlockMode::Bell => Ok(Arc::clone(BELL.get_or_init(|| Arc::new(bell_basis())))),
            BlockMode::Resource => {
                if let Some(b) = RESOURCE.get() {
                    return Ok(Arc::clone(b));
                }
                let vectors = resource_basis()?
                    .into_iter()
                    .map(|e| e.state.amplitudes().to_vec())
                    .collect();
                let b = Arc::new(MeasurementBasis::new(vectors)?);
                Ok(Arc::clone(RESOURCE.get_or_init(|| b)))
            }
        }
    }

    /// The block basis as a product of small bases. Each factor's outcome
    /// is shifted into place and summed to give the block index, so an honest
    /// device never needs an entangling measurement across factors.
    pub fn factors(self) -> Result<Arc<Vec<BlockFactor>>> {
        static BELL: OnceLock<Arc<Vec<BlockFactor>>> = OnceLock::new();
        static RESOURCE: OnceLock<Arc<Vec<BlockFactor>>> = OnceLock::new();
        let cell = match self {
            BlockMode::Bell => &BELL,
            BlockMode::Resource => &RESOURCE,
        };
        if let Some(f) = cell.get() {
            return Ok(Arc::clone(f));
        }
        let built = match self {
            BlockMode::Bell => vec![BlockFactor {
                qubits: vec![0, 1],
                basis: bell_basis(),
                shift: 0,
            }],
            BlockMode::Resource => {
                // (position in resource_factors, block qubits, index shift, outcomes)
                let layout: [(usize, &[usize], u32, usize); 5] = [
                    (0, &[0], 10, 2),
                    (1, &[1, 2], 6, 4),
                    (2, &[3, 4], 4, 4),
                    (3, &[5, 6, 7, 8], 0, 16),
                    (4, &[9, 10], 8, 4),
                ];
                layout
                    .iter()
                    .map(|&(pos, qubits, shift, count)| {
                        let vectors = (0..count)
                            .map(|o| resource_factors(o << shift).swap_remove(pos))
                            .collect();
                        Ok(BlockFactor {
                            qubits: qubits.to_vec(),
                            basis: MeasurementBasis::new(vectors)?,
                            shift,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(Arc::clone(cell.get_or_init(|| Arc::new(built))))
    }

    pub fn element(self, b: usize) -> Result<PureState> {
        match self {
            BlockMode::Bell => Ok(PureState::new(
                bell_state(b & 2 != 0, b & 1 != 0),
                vec![2, 2],
            )?),
            BlockMode::Resource => Ok(resource_element(b)?.state),
        }
    }

    /// `{I,X,Z}` coefficients of element `b`, built factor by factor.
    pub fn element_coefficients(self, b: usize) -> Result<Vec<f64>> {
        let factors = match self {
            BlockMode::Bell => vec![bell_state(b & 2 != 0, b & 1 != 0)],
            BlockMode::Resource => resource_factors(b),
        };
        let mut out = vec![1.0];
        for f in factors {
            let n = f.len().trailing_zeros() as usize;
            let c = xz_coefficients_pure(&PureState::new(f, vec![2; n])?)?;
            out = out
                .iter()
                .flat_map(|a| c.entries.iter().map(move |b| a * b))
                .collect();
        }
        Ok(out)
    }
}

/// One tensor factor of a block basis.
#[derive(Clone, Debug)]
pub struct BlockFactor {
    /// Positions within the block.
    pub qubits: Vec<usize>,
    pub basis: MeasurementBasis,
    pub shift: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CoefficientRule {
    /// One tolerance for every word.
    Flat(f64),
    /// `sigmas · 2^{w/2} / √N` for a weight-`w` word estimated from `N`
    /// blocks; each per-block sample lies in `[−2^{w/2}, 2^{w/2}]`.
    Hoeffding { sigmas: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Allowed gap between each report frequency and uniform.
    pub frequency: f64,
    pub coefficient: CoefficientRule,
}

impl Thresholds {
    /// Frequencies within `√(ln m / m)`; coefficients within the Hoeffding
    /// tolerance whose false-alarm rate is `2/m` per word.
    pub fn for_blocks(m: usize) -> Self {
        let lm = (m.max(2) as f64).ln();
        Thresholds {
            frequency: (lm / m.max(1) as f64).sqrt(),
            coefficient: CoefficientRule::Hoeffding {
                sigmas: (2.0 * lm).sqrt(),
            },
        }
    }

    /// `√(ln m / m)` for everything.
    pub fn literal(m: usize) -> Self {
        let t = ((m.max(2) as f64).ln() / m.max(1) as f64).sqrt();
        Thresholds {
            frequency: t,
            coefficient: CoefficientRule::Flat(t),
        }
    }

    pub fn coefficient_tolerance(&self, weight: usize, samples: usize) -> f64 {
        match self.coefficient {
            CoefficientRule::Flat(t) => t,
            CoefficientRule::Hoeffding { sigmas } => {
                sigmas * 2f64.powf(weight as f64 / 2.0) / (samples.max(1) as f64).sqrt()
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateTomographyConfig {
    /// Number of blocks.
    pub m: usize,
    pub mode: BlockMode,
    /// `K` is uniform on `1..=k_range`; `K − 1` blocks' worth of CHSH games
    /// come first.
    pub k_range: usize,
    pub pin_k: Option<usize>,
    pub thresholds: Option<Thresholds>,
}

impl StateTomographyConfig {
    pub fn bell(m: usize) -> Self {
        StateTomographyConfig {
            m,
            mode: BlockMode::Bell,
            k_range: 1,
            pin_k: None,
            thresholds: None,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
            .unwrap_or_else(|| Thresholds::for_blocks(self.m))
    }
}

/// Everything Eve saw in one session; the verdict is a function of this alone.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateTomographySession {
    pub m: usize,
    pub mode: BlockMode,
    pub k: usize,
    /// CHSH games before the tomography block: `(x, y, a, b)`.
    pub prefix_games: Vec<(u8, u8, u8, u8)>,
    /// Lab indices of the tomography block, in the order sent to Bob.
    pub permutation: Vec<usize>,
    pub bob_reports: Vec<u16>,
    /// Alice's `(question, answer)` for each qubit of the tomography block,
    /// keyed by lab index.
    pub alice_transcript: BTreeMap<usize, (u8, u8)>,
    pub thresholds: Thresholds,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportEstimate {
    pub report: u16,
    pub blocks: usize,
    /// Full estimate vector, only for blocks of at most four qubits.
    pub coefficients: Option<Vec<f64>>,
    pub worst_word: String,
    pub deviation: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateVerdict {
    pub accepted: bool,
    pub prefix_win_rate: Option<f64>,
    pub prefix_ok: bool,
    pub worst_frequency_gap: f64,
    pub frequency_ok: bool,
    pub coefficient_ok: bool,
    pub estimates: Vec<ReportEstimate>,
}

/// Win-rate floor for `games` CHSH games: `ω* − √(ln M / M)`.
pub fn chsh_floor(games: usize) -> f64 {
    let g = games.max(2) as f64;
    chsh_quantum_value() - (g.ln() / g).sqrt()
}

pub fn chsh_win_rate(games: &[(u8, u8, u8, u8)]) -> Option<f64> {
    if games.is_empty() {
        return None;
    }
    let wins = games
        .iter()
        .filter(|(x, y, a, b)| (x & y) == (a ^ b))
        .count();
    Some(wins as f64 / games.len() as f64)
}

fn word_weights(n: usize) -> Vec<u8> {
    let mut w = vec![0u8];
    for _ in 0..n {
        w = w.iter().flat_map(|&a| [a, a + 1, a + 1]).collect();
    }
    w
}

impl StateTomographySession {
    /// Per-block sample of every `{I,X,Z}` word. Alice's observables are
    /// `(Z ± X)/√2`, so `√2·o` is unbiased for `Z` and `√2·(−1)^x·o` for
    /// `X` when `x` is uniform.
    fn block_samples(&self, block: &[usize]) -> Vec<f64> {
        let s = std::f64::consts::SQRT_2;
        let mut v = vec![1.0];
        for q in block {
            let (x, a) = self.alice_transcript[q];
            let o = if a == 0 { 1.0 } else { -1.0 };
            let xs = if x == 0 { s * o } else { -s * o };
            let f = [1.0, xs, s * o];
            v = v
                .iter()
                .flat_map(|p| f.iter().map(move |g| p * g))
                .collect();
        }
        v
    }

    pub fn decide(&self) -> Result<StateVerdict> {
        let k = self.mode.block_qubits();
        let size = self.mode.basis_size();
        let th = self.thresholds;
        if self.permutation.len() != self.m * k || self.bob_reports.len() != self.m {
            return Err(TomographyError::Protocol(
                "transcript does not match the block count".into(),
            ));
        }
        let prefix_win_rate = chsh_win_rate(&self.prefix_games);
        let prefix_ok = prefix_win_rate.is_none_or(|w| w >= chsh_floor(self.prefix_games.len()));

        let mut by_report: BTreeMap<u16, Vec<usize>> = BTreeMap::new();
        for (j, &r) in self.bob_reports.iter().enumerate() {
            if r as usize >= size {
                return Err(TomographyError::Protocol(format!(
                    "report {r} outside the basis"
                )));
            }
            by_report.entry(r).or_default().push(j);
        }
        let uniform = 1.0 / size as f64;
        let worst_frequency_gap = (0..size)
            .map(|b| {
                (by_report.get(&(b as u16)).map_or(0, |v| v.len()) as f64 / self.m as f64 - uniform)
                    .abs()
            })
            .fold(0.0, f64::max);
        let frequency_ok = worst_frequency_gap <= th.frequency;

        let weights = word_weights(k);
        let mut estimates = Vec::with_capacity(by_report.len());
        let mut coefficient_ok = true;
        for (&r, blocks) in &by_report {
            let mut acc = vec![0.0; weights.len()];
            for &j in blocks {
                let samples = self.block_samples(&self.permutation[j * k..(j + 1) * k]);
                for (a, s) in acc.iter_mut().zip(samples) {
                    *a += s;
                }
            }
            let nb = blocks.len();
            acc.iter_mut().for_each(|a| *a /= nb as f64);
            let target = self.mode.element_coefficients(r as usize)?;
            let mut worst = (0usize, 0.0f64, f64::INFINITY);
            let mut worst_ratio = f64::NEG_INFINITY;
            for w in 1..acc.len() {
                let dev = (acc[w] - target[w]).abs();
                let tol = th.coefficient_tolerance(weights[w] as usize, nb);
                if dev > tol {
                    coefficient_ok = false;
                }
                if dev / tol > worst_ratio {
                    worst_ratio = dev / tol;
                    worst = (w, dev, tol);
                }
            }
            estimates.push(ReportEstimate {
                report: r,
                blocks: nb,
                coefficients: (k <= 4).then_some(acc),
                worst_word: PauliWord::xz_word(k, worst.0).to_string(),
                deviation: worst.1,
                tolerance: worst.2,
            });
        }
        Ok(StateVerdict {
            accepted: prefix_ok && frequency_ok && coefficient_ok,
            prefix_win_rate,
            prefix_ok,
            worst_frequency_gap,
            frequency_ok,
            coefficient_ok,
            estimates,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateTomographyOutcome {
    pub session: StateTomographySession,
    pub verdict: StateVerdict,
    #[serde(skip)]
    pub log: SessionLog,
    /// Trace distance between each of Alice's blocks, right after Bob's
    /// measurement, and the element Bob reported. Not visible to Eve.
    pub audit: Option<Vec<f64>>,
}

/// `(K − 1)` blocks' worth of CHSH games on lab pairs `0..games`.
pub(crate) fn play_prefix(
    wire: &mut Wire,
    rng: &mut DetRng,
    games: usize,
) -> Result<Vec<(u8, u8, u8, u8)>> {
    (0..games)
        .map(|r| {
            let x: u8 = rng.random_range(0..2);
            let y: u8 = rng.random_range(0..2);
            let a = answer_bit(wire.ask(Side::Alice, r, Payload::Question(x))?)?;
            let b = answer_bit(wire.ask(Side::Bob, r, Payload::Question(y))?)?;
            Ok((x, y, a, b))
        })
        .collect()
}

pub(crate) fn answer_bit(p: Payload) -> Result<u8> {
    match p {
        Payload::Answer(a) if a < 2 => Ok(a),
        other => Err(TomographyError::Protocol(format!(
            "expected an answer bit, got {other:?}"
        ))),
    }
}

pub(crate) fn draw_k(rng: &mut DetRng, k_range: usize, pin: Option<usize>) -> Result<usize> {
    let k = pin.unwrap_or_else(|| rng.random_range(1..=k_range.max(1)));
    if k == 0 || k > k_range.max(1) {
        return Err(TomographyError::Config(format!(
            "K = {k} outside 1..={k_range}"
        )));
    }
    Ok(k)
}

pub fn run_state_tomography(
    cfg: &StateTomographyConfig,
    alice: &DeviceModel,
    bob: &DeviceModel,
    seed: u64,
    audit: bool,
) -> Result<StateTomographyOutcome> {
    if cfg.m == 0 {
        return Err(TomographyError::Config("no blocks".into()));
    }
    let mut rng = child_rng(seed, 0);
    let k = draw_k(&mut rng, cfg.k_range, cfg.pin_k)?;
    let bq = cfg.mode.block_qubits();
    let prefix = (k - 1) * cfg.m * bq;
    let total = prefix + cfg.m * bq;
    let lab = Arc::new(Mutex::new(Lab::new(total, seed ^ 0x9e37_79b9_7f4a_7c15)));
    let mut alice_dev = alice.build(Side::Alice, cfg.mode, seed ^ 1)?;
    let mut bob_dev = bob.build(Side::Bob, cfg.mode, seed ^ 2)?;
    let lab_view = Arc::clone(&lab);
    let ((session, audit), log) =
        with_devices(lab, alice_dev.as_mut(), bob_dev.as_mut(), |wire| {
            let prefix_games = play_prefix(wire, &mut rng, prefix)?;
            let mut permutation: Vec<usize> = (prefix..total).collect();
            permutation.shuffle(&mut rng);
            let bob_reports =
                match wire.ask(Side::Bob, prefix, Payload::Permutation(permutation.clone()))? {
                    Payload::Reports(r) if r.len() == cfg.m => r,
                    other => {
                        return Err(TomographyError::Protocol(format!(
                            "expected {} reports, got {other:?}",
                            cfg.m
                        )))
                    }
                };
            let audit = if audit {
                let lab = lab_view.lock().expect("lab lock");
                let d = permutation
                    .chunks(bq)
                    .zip(&bob_reports)
                    .map(|(block, &r)| {
                        lab.block_state(Side::Alice, block)?
                            .distance_to(&cfg.mode.element(r as usize)?)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Some(d)
            } else {
                None
            };
            let mut alice_transcript = BTreeMap::new();
            for q in prefix..total {
                let x: u8 = rng.random_range(0..2);
                let a = answer_bit(wire.ask(Side::Alice, q, Payload::Question(x))?)?;
                alice_transcript.insert(q, (x, a));
            }
            let session = StateTomographySession {
                m: cfg.m,
                mode: cfg.mode,
                k,
                prefix_games,
                permutation,
                bob_reports,
                alice_transcript,
                thresholds: cfg.thresholds(),
            };
            Ok((session, audit))
        })?;
    let verdict = session.decide()?;
    Ok(StateTomographyOutcome {
        session,
        verdict,
        log,
        audit,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SoundnessEstimate {
    pub sessions: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    /// Over accepted sessions: fraction of blocks within trace distance 0.1
    /// of the reported element.
    pub close_fraction: Option<f64>,
    pub max_distance: Option<f64>,
}

pub const CLOSE_DISTANCE: f64 = 0.1;

pub fn soundness_estimate_state(
    cfg: &StateTomographyConfig,
    bob: &DeviceModel,
    sessions: usize,
    seed: u64,
) -> Result<SoundnessEstimate> {
    let outcomes: Vec<StateTomographyOutcome> = (0..sessions)
        .into_par_iter()
        .map(|s| {
            run_state_tomography(
                cfg,
                &DeviceModel::Honest,
                bob,
                seed.wrapping_add(s as u64)
                    .wrapping_mul(0x2545_f491_4f6c_dd1d),
                true,
            )
        })
        .collect::<Result<_>>()?;
    let accepted: Vec<&StateTomographyOutcome> =
        outcomes.iter().filter(|o| o.verdict.accepted).collect();
    let distances: Vec<f64> = accepted
        .iter()
        .flat_map(|o| o.audit.clone().unwrap_or_default())
        .collect();
    let close_fraction = (!distances.is_empty()).then(|| {
        distances.iter().filter(|&&d| d <= CLOSE_DISTANCE).count() as f64 / distances.len() as f64
    });
    let max_distance = distances.iter().copied().reduce(f64::max);
    Ok(SoundnessEstimate {
        sessions,
        accepted: accepted.len(),
        acceptance_rate: accepted.len() as f64 / sessions.max(1) as f64,
        close_fraction,
        max_distance,
    })
}

/// Acceptance rate over `sessions` seeded sessions.
pub fn acceptance_rate(
    cfg: &StateTomographyConfig,
    bob: &DeviceModel,
    sessions: usize,
    seed: u64,
) -> Result<f64> {
    let accepted = (0..sessions)
        .into_par_iter()
        .map(|s| {
            let o = run_state_tomography(
                cfg,
                &DeviceModel::Honest,
                bob,
                seed.wrapping_add(s as u64)
                    .wrapping_mul(0x2545_f491_4f6c_dd1d),
                false,
            )?;
            Ok(o.verdict.accepted as usize)
        })
        .sum::<Result<usize>>()?;
    Ok(accepted as f64 / sessions.max(1) as f64)
}

/// Fit `1 − acceptance ≈ C·m^{−c}` over `(m, rejection rate)` points with
/// a nonzero rate; returns `c`.
pub fn completeness_exponent(points: &[(usize, f64)]) -> Option<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(m, r)| (m as f64, r))
        .collect();
    crate::stats::loglog_fit(&xy).map(|(slope, _)| -slope)
}

#[derive(Clone, Debug)]
pub struct ChshProtocolOutcome {
    pub games: Vec<(u8, u8, u8, u8)>,
    pub win_rate: f64,
    pub accepted: bool,
    pub log: SessionLog,
}

/// The plain protocol: `games` CHSH games with both devices, accepted when
/// the win rate clears [`chsh_floor`].
pub fn run_chsh_protocol(
    games: usize,
    alice: &DeviceModel,
    bob: &DeviceModel,
    seed: u64,
) -> Result<ChshProtocolOutcome> {
    let mut rng = child_rng(seed, 3);
    let lab = Arc::new(Mutex::new(Lab::new(games, seed ^ 0x2127_599b_f432_5c37)));
    let mut alice_dev = alice.build(Side::Alice, BlockMode::Bell, seed ^ 1)?;
    let mut bob_dev = bob.build(Side::Bob, BlockMode::Bell, seed ^ 2)?;
    let (games, log) = with_devices(lab, alice_dev.as_mut(), bob_dev.as_mut(), |wire| {
        play_prefix(wire, &mut rng, games)
    })?;
    let win_rate = chsh_win_rate(&games).unwrap_or(0.0);
    Ok(ChshProtocolOutcome {
        accepted: win_rate >= chsh_floor(games.len()),
        win_rate,
        games,
        log,
    })
}
