//! Exact enumeration over transcripts.
//!
//! A branch is a list of unnormalized vectors `u_k` with
//! `Σ_k u_k u_k† = P ρ₁ P† / 4^{games}`, so the branch probability is
//! `Σ_k ‖u_k‖²` and the conditional state is the normalized sum.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::strategy::SequentialStrategy;
use super::transcript::{Device, LocalTranscript, Transcript};
use super::{Result, SeqError};
use crate::chsh::chsh_quantum_value;
use crate::linalg::eigen::{hermitian_eigen, trace_norm_low_rank};
use crate::linalg::matrix::{inner, norm};
use crate::linalg::ops::apply_local;
use crate::linalg::{c, CMatrix, DensityMatrix, QuantumState, SuperOperator, C64, ZERO};

/// Largest game index for exact enumeration.
pub const MAX_EXACT_GAMES: usize = 6;

/// Stored complex entries allowed in a materialized transcript state.
const MAX_STORED_ENTRIES: usize = 1 << 27;

/// Branches below this probability are dropped.
const PRUNE: f64 = 1e-16;

pub type Branch = Vec<Vec<C64>>;

/// Initial ensemble `{√w_k ψ_k}` of the strategy's state.
pub fn initial_branch(s: &SequentialStrategy) -> Result<Branch> {
    match s.initial() {
        QuantumState::Pure(p) => Ok(vec![p.amplitudes().to_vec()]),
        QuantumState::Mixed(m) => {
            if m.dim() > 1024 {
                return Err(SeqError::Capacity(
                    "mixed initial states above 1024 dimensions".into(),
                ));
            }
            let e = hermitian_eigen(m.matrix());
            Ok(e.values
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 1e-14)
                .map(|(k, &w)| e.vector(k).into_iter().map(|z| z * w.sqrt()).collect())
                .collect())
        }
    }
}

pub fn branch_probability(b: &Branch) -> f64 {
    b.iter().map(|u| norm(u).powi(2)).sum()
}

fn apply_device(s: &SequentialStrategy, d: Device, op: &CMatrix, u: &[C64]) -> Vec<C64> {
    apply_local(u, &s.register_dims(), op, &[d.index()]).expect("operator matches device register")
}

/// `(u + (−1)^answer R u) / 2 · scale` given `u` and `Ru`.
fn project(u: &[C64], ru: &[C64], answer: u8, scale: f64) -> Vec<C64> {
    let sign = if answer == 0 { 0.5 } else { -0.5 };
    u.iter()
        .zip(ru)
        .map(|(a, b)| (a * 0.5 + b * sign) * scale)
        .collect()
}

/// Play game `j` on device `d` for every (question, answer), each question
/// weighted ½.
fn expand_device(
    s: &SequentialStrategy,
    d: Device,
    j: usize,
    h: &LocalTranscript,
    branch: &Branch,
) -> Result<Vec<(u8, u8, Branch)>> {
    let mut out = Vec::with_capacity(4);
    for q in 0..2u8 {
        let r = s.reflection(d, j, h, q)?;
        let rus: Vec<Vec<C64>> = branch
            .iter()
            .map(|u| apply_device(s, d, r.matrix(), u))
            .collect();
        for ans in 0..2u8 {
            let child: Branch = branch
                .iter()
                .zip(&rus)
                .map(|(u, ru)| project(u, ru, ans, std::f64::consts::FRAC_1_SQRT_2))
                .collect();
            if branch_probability(&child) > PRUNE {
                out.push((q, ans, child));
            }
        }
    }
    Ok(out)
}

/// Classical-quantum state after Alice has played games `1..=alice_games`
/// and Bob `1..=bob_games`. Both counts equal gives `E^{AB}_{1,j}(ρ₁)`; one
/// zero gives a single device's `E^D_{1,j}(ρ₁)`.
#[derive(Clone, Debug)]
pub struct TranscriptState {
    pub register_dims: Vec<usize>,
    pub alice_games: usize,
    pub bob_games: usize,
    blocks: BTreeMap<Transcript, Branch>,
}

impl TranscriptState {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn transcripts(&self) -> impl Iterator<Item = &Transcript> {
        self.blocks.keys()
    }

    pub fn probability(&self, h: &Transcript) -> f64 {
        self.blocks.get(h).map_or(0.0, branch_probability)
    }

    pub fn total_probability(&self) -> f64 {
        self.blocks.values().map(branch_probability).sum()
    }

    pub fn branch(&self, h: &Transcript) -> Option<&Branch> {
        self.blocks.get(h)
    }

    /// Unnormalized block `Pr[h]·ρ(h)`.
    pub fn block_matrix(&self, h: &Transcript) -> Option<CMatrix> {
        self.blocks.get(h).map(|b| branch_matrix(b, self.dim()))
    }

    /// Conditional state `ρ(h)`.
    pub fn conditional_state(&self, h: &Transcript) -> Option<DensityMatrix> {
        let b = self.blocks.get(h)?;
        let p = branch_probability(b);
        let m = branch_matrix(b, self.dim()).scale_real(1.0 / p);
        DensityMatrix::new(m.hermitian_part(), self.register_dims.clone()).ok()
    }

    /// `(h, Pr[h], ρ(h))` for every stored transcript.
    pub fn entries(&self) -> Vec<(Transcript, f64, DensityMatrix)> {
        self.blocks
            .keys()
            .filter_map(|h| Some((h.clone(), self.probability(h), self.conditional_state(h)?)))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.register_dims.iter().product()
    }

    /// Push every block through an isometry on the joint register.
    pub fn map_isometry(&self, v: &CMatrix, new_dims: Vec<usize>) -> TranscriptState {
        let blocks = self
            .blocks
            .iter()
            .map(|(h, b)| (h.clone(), b.iter().map(|u| v.apply(u)).collect()))
            .collect();
        TranscriptState {
            register_dims: new_dims,
            alice_games: self.alice_games,
            bob_games: self.bob_games,
            blocks,
        }
    }

    /// Trace norm `‖self − other‖₁` of the block-diagonal difference.
    pub fn trace_norm_distance(&self, other: &TranscriptState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(SeqError::DimMismatch(self.dim(), other.dim()));
        }
        let empty: Branch = Vec::new();
        let mut keys: Vec<&Transcript> = self.blocks.keys().chain(other.blocks.keys()).collect();
        keys.sort();
        keys.dedup();
        Ok(keys
            .into_iter()
            .map(|h| {
                let a = self.blocks.get(h).unwrap_or(&empty);
                let b = other.blocks.get(h).unwrap_or(&empty);
                trace_norm_low_rank(a, b)
            })
            .sum())
    }
}

fn branch_matrix(b: &Branch, dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for u in b {
        m = &m + &CMatrix::outer(u, u);
    }
    m
}

/// Apply `alice_games` of Alice's and `bob_games` of Bob's game
/// super-operators to the initial state.
pub fn evolve(
    s: &SequentialStrategy,
    alice_games: usize,
    bob_games: usize,
) -> Result<TranscriptState> {
    if alice_games > s.n() || bob_games > s.n() {
        return Err(SeqError::InvalidSpec(format!(
            "strategy has only {} games",
            s.n()
        )));
    }
    if alice_games.max(bob_games) > MAX_EXACT_GAMES {
        return Err(SeqError::Capacity(format!(
            "exact enumeration is limited to {MAX_EXACT_GAMES} games"
        )));
    }
    let init = initial_branch(s)?;
    let est = 4usize.pow((alice_games + bob_games) as u32) * init.len() * s.total_dim();
    if est > MAX_STORED_ENTRIES {
        return Err(SeqError::Capacity(format!(
            "transcript state would hold about {est} amplitudes"
        )));
    }
    let mut blocks: BTreeMap<Transcript, Branch> = BTreeMap::new();
    blocks.insert(Transcript::empty(), init);
    for (d, count) in [(Device::A, alice_games), (Device::B, bob_games)] {
        for j in 1..=count {
            let mut next = BTreeMap::new();
            for (h, b) in &blocks {
                for (q, ans, child) in expand_device(s, d, j, h.local(d), b)? {
                    next.insert(h.with_local(d, h.local(d).extended(q, ans)), child);
                }
            }
            blocks = next;
        }
    }
    Ok(TranscriptState {
        register_dims: s.register_dims(),
        alice_games,
        bob_games,
        blocks,
    })
}

/// `ρ_j = E^{AB}_{1,j−1}(ρ₁)`, keyed by `h_{j−1}`.
pub fn transcript_state(s: &SequentialStrategy, j: usize) -> Result<TranscriptState> {
    if j == 0 || j > s.n() + 1 {
        return Err(SeqError::InvalidSpec(format!(
            "game index {j} outside 1..={}",
            s.n() + 1
        )));
    }
    evolve(s, j - 1, j - 1)
}

/// CHSH win probability of game `j` conditioned on the branch.
pub fn conditional_win_probability(
    s: &SequentialStrategy,
    j: usize,
    h: &Transcript,
    branch: &Branch,
) -> Result<f64> {
    let p = branch_probability(branch);
    if p <= 0.0 {
        return Err(SeqError::InvalidSpec("zero-probability transcript".into()));
    }
    let mut corr = 0.0;
    for a in 0..2u8 {
        let ra = s.reflection(Device::A, j, &h.alice, a)?;
        for b in 0..2u8 {
            let rb = s.reflection(Device::B, j, &h.bob, b)?;
            let sign = if a & b == 1 { -1.0 } else { 1.0 };
            for u in branch {
                let x = apply_device(s, Device::A, ra.matrix(), u);
                let y = apply_device(s, Device::B, rb.matrix(), u);
                corr += sign * inner(&x, &y).re;
            }
        }
    }
    Ok(0.5 + corr / (8.0 * p))
}

/// Depth-first walk over joint transcripts `h_k` for `k = 0..=depth`,
/// calling `visit(k, h, branch)` at every node without storing the tree.
pub fn walk_transcripts(
    s: &SequentialStrategy,
    depth: usize,
    visit: &mut dyn FnMut(usize, &Transcript, &Branch) -> Result<()>,
) -> Result<()> {
    if depth > MAX_EXACT_GAMES {
        return Err(SeqError::Capacity(format!(
            "exact enumeration is limited to {MAX_EXACT_GAMES} games"
        )));
    }
    let init = initial_branch(s)?;
    walk(s, depth, 0, &Transcript::empty(), &init, visit)
}

fn walk(
    s: &SequentialStrategy,
    depth: usize,
    k: usize,
    h: &Transcript,
    b: &Branch,
    visit: &mut dyn FnMut(usize, &Transcript, &Branch) -> Result<()>,
) -> Result<()> {
    visit(k, h, b)?;
    if k == depth {
        return Ok(());
    }
    for (qa, xa, ba) in expand_device(s, Device::A, k + 1, &h.alice, b)? {
        let ha = h.with_local(Device::A, h.alice.extended(qa, xa));
        for (qb, yb, bb) in expand_device(s, Device::B, k + 1, &h.bob, &ba)? {
            let hb = ha.with_local(Device::B, h.bob.extended(qb, yb));
            walk(s, depth, k + 1, &hb, &bb, visit)?;
        }
    }
    Ok(())
}

/// Game `j` on device `d` given its earlier local transcript: Kraus terms
/// `|α χ⟩ ⊗ P/√2` from `H_D` into `C⁴ ⊗ H_D`, the prepended register holding
/// the classical (question, answer) pair as index `2α + χ`.
pub fn game_superoperator(
    s: &SequentialStrategy,
    d: Device,
    j: usize,
    h: &LocalTranscript,
) -> Result<SuperOperator> {
    if j == 0 || j > s.n() || h.len() + 1 != j {
        return Err(SeqError::InvalidSpec(format!(
            "game {j} needs a transcript of length {}",
            j.saturating_sub(1)
        )));
    }
    let mut kraus = Vec::with_capacity(4);
    for q in 0..2u8 {
        let r = s.reflection(d, j, h, q)?;
        for ans in 0..2u8 {
            let mut ket = vec![ZERO; 4];
            ket[(2 * q + ans) as usize] = c(1.0, 0.0);
            let reg = CMatrix::from_vec(4, 1, ket);
            kraus.push(
                reg.kron(&r.projector(ans))
                    .scale_real(std::f64::consts::FRAC_1_SQRT_2),
            );
        }
    }
    Ok(SuperOperator::new(kraus)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameStructure {
    pub game: usize,
    /// Mass of `h_{j−1}` whose conditional game is ε-structured.
    pub structured_mass: f64,
    pub min_win: f64,
    pub mean_win: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub epsilon: f64,
    pub games: Vec<GameStructure>,
    /// Smallest δ for which the strategy is (δ, ε)-structured.
    pub delta: f64,
    /// (ε, ε)-structured.
    pub epsilon_structured: bool,
}

impl StructureReport {
    pub fn is_structured(&self, delta: f64) -> bool {
        self.delta <= delta + 1e-12
    }

    /// Games whose structured mass falls short of 1.
    pub fn flagged_games(&self) -> Vec<usize> {
        self.games
            .iter()
            .filter(|g| g.structured_mass < 1.0 - 1e-9)
            .map(|g| g.game)
            .collect()
    }
}

/// Per-game mass of transcripts `h_{j−1}` with conditional win probability
/// at least `ω* − ε/8`.
pub fn structure_report(s: &SequentialStrategy, epsilon: f64) -> Result<StructureReport> {
    let n = s.n();
    if n > MAX_EXACT_GAMES {
        return Err(SeqError::Capacity(format!(
            "exact enumeration is limited to {MAX_EXACT_GAMES} games"
        )));
    }
    let threshold = chsh_quantum_value() - epsilon / 8.0 - 1e-9;
    let mut games: Vec<GameStructure> = (1..=n)
        .map(|j| GameStructure {
            game: j,
            structured_mass: 0.0,
            min_win: f64::INFINITY,
            mean_win: 0.0,
        })
        .collect();
    walk_transcripts(s, n - 1, &mut |k, h, b| {
        let j = k + 1;
        let p = branch_probability(b);
        let w = conditional_win_probability(s, j, h, b)?;
        let g = &mut games[k];
        if w >= threshold {
            g.structured_mass += p;
        }
        g.min_win = g.min_win.min(w);
        g.mean_win += p * w;
        Ok(())
    })?;
    let delta = games
        .iter()
        .map(|g| (1.0 - g.structured_mass).max(0.0))
        .fold(0.0, f64::max);
    Ok(StructureReport {
        epsilon,
        games,
        delta,
        epsilon_structured: delta <= epsilon + 1e-12,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationDistance {
    /// `max_{D, j} ‖E^D_{1,j}(ρ₁) − Ẽ^D_{1,j}(ρ̃₁)‖₁`
    pub strong: f64,
    /// `max_j ½‖E^{AB}_{1,j}(ρ₁) − Ẽ^{AB}_{1,j}(ρ̃₁)‖₁`
    pub weak: f64,
    /// `(j, Alice-only, Bob-only, ½·joint)` per game.
    pub per_game: Vec<(usize, f64, f64, f64)>,
}

pub fn simulation_distance(
    s: &SequentialStrategy,
    t: &SequentialStrategy,
) -> Result<SimulationDistance> {
    if s.register_dims() != t.register_dims() || s.n() != t.n() {
        return Err(SeqError::DimMismatch(s.total_dim(), t.total_dim()));
    }
    simulation_distance_with(s, t, None)
}

/// As `simulation_distance`, comparing `t` against `s` pushed through the
/// local isometries `X_A ⊗ X_B` (for checking isometric extensions).
pub fn simulation_distance_embedded(
    s: &SequentialStrategy,
    t: &SequentialStrategy,
    xa: &CMatrix,
    xb: &CMatrix,
) -> Result<SimulationDistance> {
    let full = crate::linalg::kron_all(&[xa.clone(), xb.clone(), CMatrix::identity(s.env_dim())]);
    if full.rows() != t.total_dim() || full.cols() != s.total_dim() || s.n() != t.n() {
        return Err(SeqError::DimMismatch(full.rows(), t.total_dim()));
    }
    simulation_distance_with(s, t, Some(&full))
}

fn simulation_distance_with(
    s: &SequentialStrategy,
    t: &SequentialStrategy,
    embed: Option<&CMatrix>,
) -> Result<SimulationDistance> {
    let jobs: Vec<(usize, usize, usize)> = (1..=s.n())
        .flat_map(|j| [(j, j, 0), (j, 0, j), (j, j, j)])
        .collect();
    let values = jobs
        .par_iter()
        .map(|&(_, ja, jb)| paired_distance(s, t, ja, jb, embed))
        .collect::<Result<Vec<f64>>>()?;
    let mut per_game = Vec::new();
    let (mut strong, mut weak) = (0.0f64, 0.0f64);
    for (j, v) in (1..=s.n()).zip(values.chunks(3)) {
        let (da, db, dab) = (v[0], v[1], 0.5 * v[2]);
        strong = strong.max(da).max(db);
        weak = weak.max(dab);
        per_game.push((j, da, db, dab));
    }
    Ok(SimulationDistance {
        strong,
        weak,
        per_game,
    })
}

/// `‖E_s(ρ_s) − E_t(ρ_t)‖₁` after `alice_games` and `bob_games`, walking
/// both transcript trees together so that only one path is held in memory.
pub fn paired_distance(
    s: &SequentialStrategy,
    t: &SequentialStrategy,
    alice_games: usize,
    bob_games: usize,
    embed: Option<&CMatrix>,
) -> Result<f64> {
    if alice_games.max(bob_games) > s.n().min(t.n()) {
        return Err(SeqError::InvalidSpec(
            "more games than the strategies define".into(),
        ));
    }
    let steps: Vec<(Device, usize)> = (1..=alice_games)
        .map(|j| (Device::A, j))
        .chain((1..=bob_games).map(|j| (Device::B, j)))
        .collect();
    let mut bs = initial_branch(s)?;
    if let Some(x) = embed {
        bs = bs.iter().map(|u| x.apply(u)).collect();
    }
    let bt = initial_branch(t)?;
    let s_view = Embedded {
        s,
        embed: embed.map(|x| (x, x.adjoint())),
    };
    paired_walk(&s_view, t, &steps, &Transcript::empty(), Some(bs), Some(bt))
}

/// `s` viewed through an optional isometry applied to its initial state;
/// its reflections are applied in the embedded space by conjugation.
struct Embedded<'a> {
    s: &'a SequentialStrategy,
    embed: Option<(&'a CMatrix, CMatrix)>,
}

impl Embedded<'_> {
    fn expand(
        &self,
        d: Device,
        j: usize,
        h: &LocalTranscript,
        b: &Branch,
    ) -> Result<Vec<(u8, u8, Branch)>> {
        match &self.embed {
            None => expand_device(self.s, d, j, h, b),
            Some((x, xdag)) => {
                // Pull back, act, push forward: exact because the branch lies
                // in the image of the isometry.
                let back: Branch = b.iter().map(|u| xdag.apply(u)).collect();
                Ok(expand_device(self.s, d, j, h, &back)?
                    .into_iter()
                    .map(|(q, a, c)| (q, a, c.iter().map(|u| x.apply(u)).collect()))
                    .collect())
            }
        }
    }
}

fn paired_walk(
    s: &Embedded<'_>,
    t: &SequentialStrategy,
    steps: &[(Device, usize)],
    h: &Transcript,
    bs: Option<Branch>,
    bt: Option<Branch>,
) -> Result<f64> {
    match (bs, bt) {
        (None, None) => Ok(0.0),
        (Some(b), None) | (None, Some(b)) => Ok(branch_probability(&b)),
        (Some(bs), Some(bt)) => {
            let Some(((d, j), rest)) = steps.split_first() else {
                return Ok(trace_norm_low_rank(&bs, &bt));
            };
            let (d, j) = (*d, *j);
            let mut cs: BTreeMap<(u8, u8), Branch> = s
                .expand(d, j, h.local(d), &bs)?
                .into_iter()
                .map(|(q, a, c)| ((q, a), c))
                .collect();
            let mut ct: BTreeMap<(u8, u8), Branch> = expand_device(t, d, j, h.local(d), &bt)?
                .into_iter()
                .map(|(q, a, c)| ((q, a), c))
                .collect();
            let mut total = 0.0;
            for q in 0..2u8 {
                for a in 0..2u8 {
                    let hh = h.with_local(d, h.local(d).extended(q, a));
                    total += paired_walk(s, t, rest, &hh, cs.remove(&(q, a)), ct.remove(&(q, a)))?;
                }
            }
            Ok(total)
        }
    }
}

/// Game `j` played by both devices on one branch, keyed by the extended
/// transcript.
pub fn play_game(
    s: &SequentialStrategy,
    j: usize,
    h: &Transcript,
    b: &Branch,
) -> Result<BTreeMap<Transcript, Branch>> {
    let mut out = BTreeMap::new();
    for (qa, xa, ba) in expand_device(s, Device::A, j, &h.alice, b)? {
        let ha = h.with_local(Device::A, h.alice.extended(qa, xa));
        for (qb, yb, bb) in expand_device(s, Device::B, j, &h.bob, &ba)? {
            out.insert(ha.with_local(Device::B, h.bob.extended(qb, yb)), bb);
        }
    }
    Ok(out)
}

/// `‖E_j(ρ_j) − Ẽ_j(ρ_j)‖₁`: game `j` played by `s` and by `t` on the
/// transcript state `ρ_j` of `s`. Summed over `j` these bound the distance
/// between `E_{1,n}(ρ₁)` and `Ẽ_{1,n}(ρ₁)` by the triangle inequality.
pub fn replacement_distance(
    s: &SequentialStrategy,
    t: &SequentialStrategy,
    j: usize,
) -> Result<f64> {
    if s.register_dims() != t.register_dims() {
        return Err(SeqError::DimMismatch(s.total_dim(), t.total_dim()));
    }
    if j == 0 || j > s.n().min(t.n()) {
        return Err(SeqError::InvalidSpec(format!(
            "game index {j} out of range"
        )));
    }
    let mut total = 0.0;
    walk_transcripts(s, j - 1, &mut |k, h, b| {
        if k + 1 == j {
            let mut a = play_game(s, j, h, b)?;
            let mut c = play_game(t, j, h, b)?;
            let keys: Vec<Transcript> = a.keys().chain(c.keys()).cloned().collect();
            for key in keys {
                let x = a.remove(&key).unwrap_or_default();
                let y = c.remove(&key).unwrap_or_default();
                total += trace_norm_low_rank(&x, &y);
            }
        }
        Ok(())
    })?;
    Ok(total)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructurePreservation {
    pub delta: f64,
    pub epsilon: f64,
    pub eta: f64,
    /// δ of the simulating strategy at `ε + 16√η`.
    pub simulated_delta: f64,
    pub allowed_delta: f64,
    pub holds: bool,
}

/// If `s` is (δ, ε)-structured and `t` weakly η-simulates it, check that `t`
/// is (δ + 2√η, ε + 16√η)-structured.
pub fn check_structure_preservation(
    s: &SequentialStrategy,
    t: &SequentialStrategy,
    epsilon: f64,
) -> Result<StructurePreservation> {
    let delta = structure_report(s, epsilon)?.delta;
    let eta = simulation_distance(s, t)?.weak;
    let root = eta.sqrt();
    let simulated_delta = structure_report(t, epsilon + 16.0 * root)?.delta;
    let allowed_delta = delta + 2.0 * root;
    Ok(StructurePreservation {
        delta,
        epsilon,
        eta,
        simulated_delta,
        allowed_delta,
        holds: simulated_delta <= allowed_delta + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chsh::{always_zero_strategy, ideal_strategy};
    use crate::sequential::strategy::ProductStrategy;

    fn ideal(n: usize) -> SequentialStrategy {
        ProductStrategy::repeated(ideal_strategy(), n)
            .materialize()
            .unwrap()
    }

    #[test]
    fn first_game_state_is_initial() {
        let s = ideal(2);
        let ts = transcript_state(&s, 1).unwrap();
        assert_eq!(ts.len(), 1);
        assert!((ts.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_second_game_probabilities() {
        let s = ideal(2);
        let ts = transcript_state(&s, 2).unwrap();
        assert_eq!(ts.len(), 16);
        let w = chsh_quantum_value();
        for h in ts.transcripts() {
            let p = ts.probability(h);
            let want = if h.wins() == 1 {
                w / 8.0
            } else {
                (1.0 - w) / 8.0
            };
            assert!((p - want).abs() < 1e-12, "{h}: {p}");
        }
        // Per question pair, winning patterns carry ω*/4 in total.
        assert!((ts.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kraus_terms_for_ideal_first_game() {
        let s = ideal(1);
        let e = game_superoperator(&s, Device::A, 1, &LocalTranscript::empty()).unwrap();
        assert_eq!(e.kraus().len(), 4);
        let r = s
            .reflection(Device::A, 1, &LocalTranscript::empty(), 1)
            .unwrap();
        let k3 = &e.kraus()[3];
        let want = r.projector(1).scale_real(std::f64::consts::FRAC_1_SQRT_2);
        for i in 0..2 {
            for jj in 0..2 {
                assert!((k3[(6 + i, jj)] - want[(i, jj)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn structure_of_ideal_and_classical() {
        let rep = structure_report(&ideal(2), 0.0).unwrap();
        assert!(rep.epsilon_structured);
        assert!(rep.delta < 1e-12);
        let cl = ProductStrategy::repeated(always_zero_strategy(), 2)
            .materialize()
            .unwrap();
        let eps_needed = 8.0 * (chsh_quantum_value() - 0.75);
        assert!(
            !structure_report(&cl, eps_needed - 1e-3)
                .unwrap()
                .epsilon_structured
        );
        assert!(
            structure_report(&cl, eps_needed + 1e-6)
                .unwrap()
                .epsilon_structured
        );
    }

    #[test]
    fn mixed_strategy_flags_only_second_game() {
        let s = ProductStrategy {
            games: vec![ideal_strategy(), always_zero_strategy()],
        }
        .materialize()
        .unwrap();
        let rep = structure_report(&s, 0.01).unwrap();
        assert_eq!(rep.flagged_games(), vec![2]);
    }

    #[test]
    fn self_distance_is_zero() {
        let s = ideal(2);
        let d = simulation_distance(&s, &s).unwrap();
        assert!(d.strong < 1e-9 && d.weak < 1e-9);
    }

    #[test]
    fn gram_trace_norm_matches_dense() {
        let u = vec![c(0.6, 0.0), c(0.0, 0.0)];
        let v = vec![c(0.0, 0.0), c(0.8, 0.0)];
        let fast = trace_norm_low_rank(&[u.clone()], &[v.clone()]);
        let dense = crate::linalg::eigen::trace_norm_hermitian(
            &(&CMatrix::outer(&u, &u) - &CMatrix::outer(&v, &v)),
        );
        assert!((fast - dense).abs() < 1e-12);
    }
}
