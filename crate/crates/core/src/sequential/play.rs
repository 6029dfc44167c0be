//! Monte Carlo play of sequential games.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exact::{branch_probability, initial_branch};
use super::strategy::{AnyStrategy, ProductStrategy, SequentialStrategy};
use super::transcript::{Device, LocalTranscript, Transcript};
use super::{Result, SeqError};
use crate::chsh::{chsh_quantum_value, SingleGameStrategy};
use crate::linalg::matrix::norm;
use crate::linalg::ops::apply_local;
use crate::linalg::{CMatrix, C64};
use crate::rng::{child_rng, DetRng};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub wins: usize,
    pub transcript: Transcript,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayOutcome {
    pub n: usize,
    pub trials: Vec<TrialRecord>,
}

impl PlayOutcome {
    pub fn mean_win_fraction(&self) -> f64 {
        if self.trials.is_empty() || self.n == 0 {
            return 0.0;
        }
        let total: usize = self.trials.iter().map(|t| t.wins).sum();
        total as f64 / (self.n * self.trials.len()) as f64
    }

    pub fn acceptance_rate(&self, epsilon: f64) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        let ok = self
            .trials
            .iter()
            .filter(|t| eve_accept(t.wins, self.n, epsilon))
            .count();
        ok as f64 / self.trials.len() as f64
    }
}

/// Accept iff at least `(1 − ε)·ω*·n` games were won.
pub fn eve_accept(wins: usize, n: usize, epsilon: f64) -> bool {
    wins as f64 >= (1.0 - epsilon) * chsh_quantum_value() * n as f64
}

/// Play `n` games `trials` times. Trial `t` draws from child stream `t` of
/// `seed`, so the output does not depend on thread scheduling.
pub fn play_games(s: &AnyStrategy, n: usize, trials: u64, seed: u64) -> Result<PlayOutcome> {
    if n == 0 {
        return Err(SeqError::InvalidSpec(
            "at least one game is required".into(),
        ));
    }
    let s = if s.n() == n {
        s.clone()
    } else {
        s.with_games(n)?
    };
    let records = match &s {
        AnyStrategy::Product(p) => {
            let tables = outcome_tables(p)?;
            (0..trials)
                .into_par_iter()
                .map(|t| Ok(play_product(&tables, t, &mut child_rng(seed, t))))
                .collect::<Result<Vec<_>>>()?
        }
        AnyStrategy::General(g) => {
            let init = initial_branch(g)?;
            (0..trials)
                .into_par_iter()
                .map(|t| play_general(g, &init, t, &mut child_rng(seed, t)))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(PlayOutcome { n, trials: records })
}

/// `p[a][b][2x + y]` for one single-game strategy.
type OutcomeTable = [[[f64; 4]; 2]; 2];

pub fn outcome_table(g: &SingleGameStrategy) -> Result<OutcomeTable> {
    let mut t = [[[0.0; 4]; 2]; 2];
    for (a, ra) in g.alice.iter().enumerate() {
        for (b, rb) in g.bob.iter().enumerate() {
            for x in 0..2u8 {
                for y in 0..2u8 {
                    let op = ra.projector(x).kron(&rb.projector(y));
                    t[a][b][(2 * x + y) as usize] = g.state.expectation(&op).re.max(0.0);
                }
            }
        }
    }
    Ok(t)
}

fn outcome_tables(p: &ProductStrategy) -> Result<Vec<OutcomeTable>> {
    p.games.iter().map(outcome_table).collect()
}

fn sample_index(weights: &[f64], rng: &mut DetRng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return k;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn play_product(tables: &[OutcomeTable], trial: u64, rng: &mut DetRng) -> TrialRecord {
    let mut h = Transcript::empty();
    for t in tables {
        let a = rng.random::<bool>() as u8;
        let b = rng.random::<bool>() as u8;
        let k = sample_index(&t[a as usize][b as usize], rng) as u8;
        h.alice.0.push((a, k >> 1));
        h.bob.0.push((b, k & 1));
    }
    TrialRecord {
        trial,
        wins: h.wins(),
        transcript: h,
    }
}

fn measure(
    s: &SequentialStrategy,
    d: Device,
    j: usize,
    h: &LocalTranscript,
    q: u8,
    u: &[C64],
    rng: &mut DetRng,
) -> Result<(u8, Vec<C64>)> {
    let r = s.reflection(d, j, h, q)?;
    let ru = apply_local(u, &s.register_dims(), r.matrix(), &[d.index()])?;
    let p0: Vec<C64> = u.iter().zip(&ru).map(|(x, y)| (x + y) * 0.5).collect();
    let p1: Vec<C64> = u.iter().zip(&ru).map(|(x, y)| (x - y) * 0.5).collect();
    let w0 = norm(&p0).powi(2);
    let w1 = norm(&p1).powi(2);
    let ans = sample_index(&[w0, w1], rng) as u8;
    let (v, w) = if ans == 0 { (p0, w0) } else { (p1, w1) };
    let scale = 1.0 / w.sqrt();
    Ok((ans, v.into_iter().map(|z| z * scale).collect()))
}

fn play_general(
    s: &SequentialStrategy,
    init: &[Vec<C64>],
    trial: u64,
    rng: &mut DetRng,
) -> Result<TrialRecord> {
    let weights: Vec<f64> = init.iter().map(|u| norm(u).powi(2)).collect();
    let k = sample_index(&weights, rng);
    let scale = 1.0 / weights[k].sqrt();
    let mut u: Vec<C64> = init[k].iter().map(|z| z * scale).collect();
    let mut h = Transcript::empty();
    for j in 1..=s.n() {
        let a = rng.random::<bool>() as u8;
        let b = rng.random::<bool>() as u8;
        let (x, v) = measure(s, Device::A, j, &h.alice, a, &u, rng)?;
        let (y, w) = measure(s, Device::B, j, &h.bob, b, &v, rng)?;
        u = w;
        h.alice.0.push((a, x));
        h.bob.0.push((b, y));
    }
    Ok(TrialRecord {
        trial,
        wins: h.wins(),
        transcript: h,
    })
}

/// Conditional probability of one full transcript, for consistency checks.
pub fn transcript_probability(s: &SequentialStrategy, h: &Transcript) -> Result<f64> {
    let mut branch = initial_branch(s)?;
    let dims = s.register_dims();
    for (j, ((a, x), (b, y))) in h.alice.0.iter().zip(&h.bob.0).enumerate() {
        let ra = s.reflection(Device::A, j + 1, &h.alice.prefix(j), *a)?;
        let rb = s.reflection(Device::B, j + 1, &h.bob.prefix(j), *b)?;
        let both: CMatrix = ra.projector(*x).kron(&rb.projector(*y)).scale_real(0.5);
        branch = branch
            .iter()
            .map(|u| apply_local(u, &dims, &both, &[0, 1]))
            .collect::<std::result::Result<_, _>>()?;
    }
    Ok(branch_probability(&branch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chsh::{always_zero_strategy, ideal_strategy};
    use crate::sequential::builtin;

    #[test]
    fn accept_threshold() {
        assert!(eve_accept(1000, 1000, 0.0));
        assert!(!eve_accept(750, 1000, 0.01));
        assert!(eve_accept(846, 1000, 0.01));
    }

    #[test]
    fn same_seed_same_transcripts() {
        let s = builtin("ideal", 5).unwrap();
        let a = play_games(&s, 5, 50, 7).unwrap();
        let b = play_games(&s, 5, 50, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, play_games(&s, 5, 50, 8).unwrap());
    }

    #[test]
    fn product_and_general_agree_on_distribution_shape() {
        let p = ProductStrategy::repeated(always_zero_strategy(), 2);
        let g = AnyStrategy::General(p.materialize().unwrap());
        let out = play_games(&g, 2, 200, 1).unwrap();
        for t in &out.trials {
            assert!(t.transcript.alice.0.iter().all(|(_, x)| *x == 0));
        }
        let table = outcome_table(&ideal_strategy()).unwrap();
        let total: f64 = table.iter().flatten().flatten().sum();
        assert!((total - 4.0).abs() < 1e-12);
    }
}
