//! Single-qubit ideal, multi-qubit ideal and ideal strategies built from a
//! sequential strategy, each measured against its predecessor by exact
//! enumeration.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::extract::{extract_device, ideal_eigenvector, ideal_reflection};
use super::{state_components, Result, RigidityError};
use crate::chsh::chsh_quantum_value;
use crate::linalg::matrix::{CMatrix, C64, ONE, ZERO};
use crate::linalg::ops::{apply_local, embed_operator, permutation_matrix, permute_subsystems};
use crate::linalg::{DensityMatrix, PureState, QuantumState, Reflection, MAX_DIM};
use crate::rng::rng_from_seed;
use crate::sequential::strategy::ReflectionSource;
use crate::sequential::transcript::{reflection_key, wildcard_key};
use crate::sequential::{
    conditional_win_probability, initial_branch, local_transcripts, paired_distance, play_game,
    replacement_distance, simulation_distance, walk_transcripts, Branch, Device, LocalTranscript,
    SequentialStrategy, SimulationDistance, Transcript,
};

/// Largest number of games the constructions accept.
pub const MAX_STAGE_GAMES: usize = 4;

/// Residual below which a structural predicate counts as satisfied.
pub const STRUCTURE_TOL: f64 = 1e-9;

pub type ContextKey = (Device, usize, LocalTranscript);

pub fn context_label(k: &ContextKey) -> String {
    format!("{}/{}/{}", k.0, k.1, k.2.bits())
}

/// `U†(ideal_q ⊗ I)U` for a frame `U` of a `2m`-dimensional device.
pub fn frame_pullback(u: &CMatrix, d: Device, question: u8) -> CMatrix {
    let lifted = ideal_reflection(d, question).kron(&CMatrix::identity(u.rows() / 2));
    u.adjoint().matmul(&lifted).matmul(u).hermitian_part()
}

/// Qubit frame of one context: a unitary `U` on the device space with
/// `R_q ≈ U†(ideal_q ⊗ I)U`. Unbalanced or odd-dimensional contexts have
/// 1×1 Jordan blocks that cannot be completed to a unitary frame.
#[derive(Clone, Debug)]
pub struct ContextFrame {
    pub unitary: Option<CMatrix>,
    pub degenerate: bool,
    pub residual: f64,
}

pub fn context_frame(
    s: &SequentialStrategy,
    d: Device,
    j: usize,
    h: &LocalTranscript,
) -> Result<ContextFrame> {
    let r0 = s.reflection(d, j, h, 0)?;
    let r1 = s.reflection(d, j, h, 1)?;
    let dim = r0.dim();
    if dim % 2 == 1 || r0.matrix().trace().re.abs() > 0.5 {
        return Ok(ContextFrame {
            unitary: None,
            degenerate: true,
            residual: f64::INFINITY,
        });
    }
    let ex = extract_device(d, r0.matrix(), r1.matrix(), true)?;
    if !ex.is_unitary() {
        return Ok(ContextFrame {
            unitary: None,
            degenerate: true,
            residual: f64::INFINITY,
        });
    }
    let residual = ex.ideal_residual([r0.matrix(), r1.matrix()]);
    Ok(ContextFrame {
        degenerate: ex.any_degenerate(),
        unitary: Some(ex.isometry),
        residual,
    })
}

fn contexts(n: usize) -> Vec<ContextKey> {
    let mut out = Vec::new();
    for d in [Device::A, Device::B] {
        for j in 1..=n {
            for h in local_transcripts(j - 1) {
                out.push((d, j, h));
            }
        }
    }
    out
}

fn check_games(n: usize) -> Result<()> {
    if n > MAX_STAGE_GAMES {
        return Err(RigidityError::Capacity(format!(
            "constructions are limited to {MAX_STAGE_GAMES} games"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureCheck {
    pub max_residual: f64,
    pub flagged: Vec<String>,
    pub holds: bool,
}

/// Every context measures ideal reflections on some qubit of its device.
pub fn check_single_qubit_ideal(s: &SequentialStrategy) -> Result<StructureCheck> {
    let mut max_residual = 0.0f64;
    let mut flagged = Vec::new();
    for k in contexts(s.n()) {
        let f = context_frame(s, k.0, k.1, &k.2)?;
        if f.unitary.is_none() || f.residual > STRUCTURE_TOL {
            flagged.push(context_label(&k));
        }
        max_residual = max_residual.max(f.residual);
    }
    Ok(StructureCheck {
        holds: flagged.is_empty(),
        max_residual,
        flagged,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingleQubitReport {
    pub contexts: usize,
    /// Degenerate contexts, left unreplaced.
    pub flagged: Vec<String>,
    pub distance: SimulationDistance,
    /// `‖E_{1,n}(ρ₁) − Ẽ_{1,n}(ρ₁)‖₁`.
    pub hybrid_total: f64,
    /// `‖E_j(ρ_j) − Ẽ_j(ρ_j)‖₁` per game.
    pub replacement_distances: Vec<f64>,
    pub hybrid_bound_holds: bool,
    pub structure: StructureCheck,
}

#[derive(Clone, Debug)]
pub struct SingleQubitIdeal {
    pub strategy: SequentialStrategy,
    pub report: SingleQubitReport,
}

/// Replace every context's reflections by the ideal ones pulled back through
/// that context's qubit frame.
pub fn construct_single_qubit_ideal(s: &SequentialStrategy) -> Result<SingleQubitIdeal> {
    check_games(s.n())?;
    let n = s.n();
    let mut table = BTreeMap::new();
    let mut flagged = Vec::new();
    let keys = contexts(n);
    for k in &keys {
        let (d, j, h) = (k.0, k.1, &k.2);
        let f = context_frame(s, d, j, h)?;
        match (&f.unitary, f.degenerate) {
            (Some(u), false) => {
                for q in 0..2u8 {
                    table.insert(
                        reflection_key(d, j, h, q),
                        Reflection::new(frame_pullback(u, d, q))?,
                    );
                }
            }
            _ => {
                flagged.push(context_label(k));
                for q in 0..2u8 {
                    table.insert(reflection_key(d, j, h, q), s.reflection(d, j, h, q)?);
                }
            }
        }
    }
    let out = SequentialStrategy::new(
        n,
        s.device_dim(Device::A),
        s.device_dim(Device::B),
        s.env_dim(),
        s.initial().clone(),
        ReflectionSource::Table(table),
    )?;
    let distance = simulation_distance(s, &out)?;
    let hybrid_total = paired_distance(s, &out, n, n, None)?;
    let replacement_distances = (1..=n)
        .map(|j| replacement_distance(s, &out, j))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let bound: f64 = replacement_distances.iter().sum();
    let structure = check_single_qubit_ideal(&out)?;
    Ok(SingleQubitIdeal {
        strategy: out,
        report: SingleQubitReport {
            contexts: keys.len(),
            flagged,
            distance,
            hybrid_total,
            hybrid_bound_holds: hybrid_total <= bound + 1e-9,
            replacement_distances,
            structure,
        },
    })
}

/// Ancilla bookkeeping for the multi-qubit construction. Device space is
/// `C^{2^n} ⊗ H_D` with ancilla `k` as tensor factor `k − 1`.
#[derive(Clone, Debug)]
pub struct AncillaTransform {
    pub n: usize,
    pub device_dims: [usize; 2],
    frames: BTreeMap<ContextKey, CMatrix>,
}

impl AncillaTransform {
    /// Read the qubit frames off a single-qubit ideal strategy.
    pub fn from_strategy(s: &SequentialStrategy) -> Result<Self> {
        check_games(s.n())?;
        let mut frames = BTreeMap::new();
        for k in contexts(s.n()) {
            let f = context_frame(s, k.0, k.1, &k.2)?;
            match f.unitary {
                Some(u) if f.residual <= STRUCTURE_TOL => {
                    frames.insert(k, u);
                }
                _ => {
                    return Err(RigidityError::NotIdealForm(format!(
                        "context {} has no qubit frame",
                        context_label(&k)
                    )))
                }
            }
        }
        Ok(AncillaTransform {
            n: s.n(),
            device_dims: [s.device_dim(Device::A), s.device_dim(Device::B)],
            frames,
        })
    }

    pub fn frame(&self, d: Device, j: usize, h: &LocalTranscript) -> Result<&CMatrix> {
        self.frames.get(&(d, j, h.clone())).ok_or_else(|| {
            RigidityError::NotIdealForm(format!("no frame for {d}/{j}/{}", h.bits()))
        })
    }

    pub fn register_dims(&self, d: Device) -> Vec<usize> {
        let mut dims = vec![2; self.n];
        dims.push(self.device_dims[d.index()]);
        dims
    }

    pub fn expanded_dim(&self, d: Device) -> usize {
        (1usize << self.n) * self.device_dims[d.index()]
    }

    /// `S_j = (I ⊗ U†)·SWAP(ancilla j, qubit)·(I ⊗ U)` with `U` the frame of
    /// game `j` after local transcript `h` (length `j − 1`).
    pub fn swap_step(&self, d: Device, j: usize, h: &LocalTranscript) -> Result<CMatrix> {
        let u = self.frame(d, j, h)?;
        let dim = self.device_dims[d.index()];
        let lifted = CMatrix::identity(1 << self.n).kron(u);
        let mut dims = vec![2; self.n];
        dims.extend([2, dim / 2]);
        let mut order: Vec<usize> = (0..dims.len()).collect();
        order.swap(j - 1, self.n);
        let sw = permutation_matrix(&dims, &order)?;
        Ok(lifted.adjoint().matmul(&sw).matmul(&lifted))
    }

    /// `V_j`: ancilla `j` from `|0⟩, |1⟩` to the ideal post-measurement
    /// qubit for `(question, answer)` and its complement.
    pub fn rotation(&self, d: Device, j: usize, question: u8, answer: u8) -> Result<CMatrix> {
        let a = ideal_eigenvector(d, question, answer);
        let b = ideal_eigenvector(d, question, 1 - answer);
        let v = CMatrix::from_rows(&[vec![a[0], b[0]], vec![a[1], b[1]]]);
        Ok(embed_operator(&v, &self.register_dims(d), &[j - 1])?)
    }

    /// `T_j = S_j·V_j` for a local transcript of length `≥ j`.
    pub fn step(&self, d: Device, j: usize, h: &LocalTranscript) -> Result<CMatrix> {
        let (q, x) = h.0[j - 1];
        Ok(self
            .swap_step(d, j, &h.prefix(j - 1))?
            .matmul(&self.rotation(d, j, q, x)?))
    }

    /// `T_{1,k} = T_k ⋯ T_1`.
    pub fn prefix(&self, d: Device, k: usize, h: &LocalTranscript) -> Result<CMatrix> {
        let mut t = CMatrix::identity(self.expanded_dim(d));
        for j in 1..=k {
            t = self.step(d, j, h)?.matmul(&t);
        }
        Ok(t)
    }

    /// `Ω_j = S_j·T_{1,j−1}`, the frame in which game `j` measures ancilla `j`.
    pub fn game_frame(&self, d: Device, j: usize, h: &LocalTranscript) -> Result<CMatrix> {
        Ok(self
            .swap_step(d, j, &h.prefix(j - 1))?
            .matmul(&self.prefix(d, j - 1, h)?))
    }

    /// Ideal reflection on ancilla `j`.
    pub fn ancilla_ideal(&self, d: Device, j: usize, question: u8) -> Result<CMatrix> {
        Ok(embed_operator(
            &ideal_reflection(d, question),
            &self.register_dims(d),
            &[j - 1],
        )?)
    }

    /// Largest `‖T_j†T_j − I‖` entry over all steps.
    pub fn unitarity_residual(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for d in [Device::A, Device::B] {
            for j in 1..=self.n {
                for h in local_transcripts(j) {
                    let t = self.step(d, j, &h)?;
                    worst = worst.max(
                        t.adjoint()
                            .matmul(&t)
                            .max_abs_diff(&CMatrix::identity(t.rows())),
                    );
                }
            }
        }
        Ok(worst)
    }
}

/// `|0ⁿ⟩ ⊗ I` as a `2^n d × d` isometry.
pub fn ancilla_isometry(n: usize, dim: usize) -> CMatrix {
    let mut x = CMatrix::zeros((1 << n) * dim, dim);
    for i in 0..dim {
        x[(i, i)] = ONE;
    }
    x
}

/// `s` with `n` fresh ancillas in `|0ⁿ⟩` on each device, reflections `I ⊗ R`.
pub fn prepend_ancillas(s: &SequentialStrategy) -> Result<SequentialStrategy> {
    let n = s.n();
    let (da, db) = (s.device_dim(Device::A), s.device_dim(Device::B));
    let total = (1usize << (2 * n)) * s.total_dim();
    if total > MAX_DIM {
        return Err(RigidityError::Capacity(format!(
            "ancilla-extended dimension {total} exceeds {MAX_DIM}"
        )));
    }
    let id = CMatrix::identity(1 << n);
    Ok(s.extend_with(
        &ancilla_isometry(n, da),
        &ancilla_isometry(n, db),
        |_, r| Ok(Reflection::new(id.kron(r.matrix()))?),
    )?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AncillaOverlap {
    pub alice: f64,
    pub bob: f64,
    pub joint: f64,
}

/// Probability that the ancillas read `|0ⁿ⟩` after all `n` games.
pub fn ancilla_overlap(s: &SequentialStrategy, n: usize) -> Result<AncillaOverlap> {
    let (xa, xb) = (s.device_dim(Device::A), s.device_dim(Device::B));
    let (da, db) = (xa >> n, xb >> n);
    let dc = s.env_dim();
    let mut acc = AncillaOverlap {
        alice: 0.0,
        bob: 0.0,
        joint: 0.0,
    };
    walk_transcripts(s, s.n(), &mut |k, _, b| {
        if k == s.n() {
            for u in b {
                for (idx, z) in u.iter().enumerate() {
                    let w = z.norm_sqr();
                    if w == 0.0 {
                        continue;
                    }
                    let a = idx / (xb * dc);
                    let bb = (idx / dc) % xb;
                    let (za, zb) = (a < da, bb < db);
                    if za {
                        acc.alice += w;
                    }
                    if zb {
                        acc.bob += w;
                    }
                    if za && zb {
                        acc.joint += w;
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(acc)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiQubitReport {
    pub distance: SimulationDistance,
    pub ancilla_overlap: AncillaOverlap,
    /// Joint overlap `≥ 1 − weak distance`.
    pub overlap_bound_holds: bool,
    /// Largest `‖Ω_j R̄ Ω_j† − ideal on ancilla j‖` entry.
    pub structure_residual: f64,
    pub unitarity_residual: f64,
    pub structured: bool,
}

#[derive(Clone, Debug)]
pub struct MultiQubitIdeal {
    pub strategy: SequentialStrategy,
    pub transform: AncillaTransform,
    pub report: MultiQubitReport,
}

/// Largest deviation of each context from ideal play on its own ancilla.
pub fn check_multi_qubit_ideal(s: &SequentialStrategy, t: &AncillaTransform) -> Result<f64> {
    let mut worst = 0.0f64;
    for (d, j, h) in contexts(t.n) {
        let omega = t.game_frame(d, j, &h)?;
        for q in 0..2u8 {
            let r = s.reflection(d, j, &h, q)?;
            let rot = omega.matmul(r.matrix()).matmul(&omega.adjoint());
            worst = worst.max(rot.max_abs_diff(&t.ancilla_ideal(d, j, q)?));
        }
    }
    Ok(worst)
}

/// Each measured qubit is swapped into its own ancilla, so later games act
/// on qubits in tensor product with earlier ones.
pub fn construct_multi_qubit_ideal(s: &SequentialStrategy) -> Result<MultiQubitIdeal> {
    let transform = AncillaTransform::from_strategy(s)?;
    let reference = prepend_ancillas(s)?;
    let n = s.n();
    let id = CMatrix::identity(1 << n);
    let mut table = BTreeMap::new();
    for (d, j, h) in contexts(n) {
        let t = transform.prefix(d, j - 1, &h)?;
        for q in 0..2u8 {
            let lifted = id.kron(s.reflection(d, j, &h, q)?.matrix());
            let r = t.adjoint().matmul(&lifted).matmul(&t).hermitian_part();
            table.insert(reflection_key(d, j, &h, q), Reflection::new(r)?);
        }
    }
    let out = SequentialStrategy::new(
        n,
        reference.device_dim(Device::A),
        reference.device_dim(Device::B),
        reference.env_dim(),
        reference.initial().clone(),
        ReflectionSource::Table(table),
    )?;
    let distance = simulation_distance(&reference, &out)?;
    let overlap = ancilla_overlap(&out, n)?;
    let structure_residual = check_multi_qubit_ideal(&out, &transform)?;
    let unitarity_residual = transform.unitarity_residual()?;
    let report = MultiQubitReport {
        overlap_bound_holds: overlap.joint >= 1.0 - distance.weak - 1e-9,
        ancilla_overlap: overlap,
        distance,
        structured: structure_residual <= STRUCTURE_TOL && unitarity_residual <= STRUCTURE_TOL,
        structure_residual,
        unitarity_residual,
    };
    Ok(MultiQubitIdeal {
        strategy: out,
        transform,
        report,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdealConfig {
    pub epsilon: f64,
    pub seed: u64,
    pub max_attempts: usize,
    /// Required probability that every later game is ε-structured; defaults
    /// to `1 − √ε`.
    pub tail_threshold: Option<f64>,
}

impl IdealConfig {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        IdealConfig {
            epsilon,
            seed,
            max_attempts: 64,
            tail_threshold: None,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.tail_threshold
            .unwrap_or(1.0 - self.epsilon.max(0.0).sqrt())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdealReport {
    pub transcript: String,
    pub attempts: usize,
    /// Whether the frozen transcript met both sampling conditions.
    pub conditions_met: bool,
    pub epsilon: f64,
    pub tail_threshold: f64,
    /// Weight of `|φ⟩^{⊗n}` on the frozen qubits before renormalizing.
    pub epr_weight: f64,
    pub distance: SimulationDistance,
    pub reflection_residual: f64,
    pub state_residual: f64,
    pub structured: bool,
}

#[derive(Clone, Debug)]
pub struct IdealStrategy {
    pub strategy: SequentialStrategy,
    /// `Û_A`, `Û_B`: ideal play on ancilla `j` in game `j`.
    pub frames: [CMatrix; 2],
    pub report: IdealReport,
}

/// Probability of each joint prefix and whether its next game is
/// ε-structured, for prefixes of length `< n`.
struct PrefixTable {
    prob: BTreeMap<Transcript, f64>,
    good: BTreeMap<Transcript, bool>,
}

impl PrefixTable {
    fn build(s: &SequentialStrategy, epsilon: f64) -> Result<Self> {
        let threshold = chsh_quantum_value() - epsilon / 8.0 - 1e-9;
        let mut prob = BTreeMap::new();
        let mut good = BTreeMap::new();
        walk_transcripts(s, s.n() - 1, &mut |k, h, b| {
            let p: f64 = b.iter().map(|u| crate::linalg::norm(u).powi(2)).sum();
            let w = conditional_win_probability(s, k + 1, h, b)?;
            prob.insert(h.clone(), p);
            good.insert(h.clone(), w >= threshold);
            Ok(())
        })?;
        Ok(PrefixTable { prob, good })
    }

    /// `Pr[games |h|+1..n are all ε-structured | h]`.
    fn tail(&self, h: &Transcript, n: usize) -> f64 {
        let k = h.alice.len();
        if k >= n {
            return 1.0;
        }
        if !self.good.get(h).copied().unwrap_or(false) {
            return 0.0;
        }
        if k + 1 == n {
            return 1.0;
        }
        let p = self.prob[h];
        let mut acc = 0.0;
        for (c, pc) in self.prob.range(h.clone()..) {
            if c.alice.len() == k + 1 && c.alice.prefix(k) == h.alice && c.bob.prefix(k) == h.bob {
                acc += pc / p * self.tail(c, n);
            }
        }
        acc
    }
}

fn joint_prefix(h: &Transcript, k: usize) -> Transcript {
    Transcript {
        alice: h.alice.prefix(k),
        bob: h.bob.prefix(k),
    }
}

fn sample_transcript(s: &SequentialStrategy, rng: &mut impl Rng) -> Result<Transcript> {
    let mut h = Transcript::empty();
    let mut b: Branch = initial_branch(s)?;
    for j in 1..=s.n() {
        let children = play_game(s, j, &h, &b)?;
        let total: f64 = children
            .values()
            .map(|c| {
                c.iter()
                    .map(|u| crate::linalg::norm(u).powi(2))
                    .sum::<f64>()
            })
            .sum();
        let mut x = rng.random::<f64>() * total;
        let mut chosen = None;
        for (t, c) in &children {
            let p: f64 = c.iter().map(|u| crate::linalg::norm(u).powi(2)).sum();
            chosen = Some((t.clone(), c.clone()));
            if x < p {
                break;
            }
            x -= p;
        }
        let (t, c) = chosen.ok_or_else(|| {
            RigidityError::Numerical("no transcript has positive probability".into())
        })?;
        h = t;
        b = c;
    }
    Ok(h)
}

fn conditions_hold(table: &PrefixTable, h: &Transcript, n: usize, threshold: f64) -> bool {
    (1..=n).all(|j| {
        let before = joint_prefix(h, j - 1);
        table.good.get(&before).copied().unwrap_or(false)
            && table.tail(&joint_prefix(h, j), n) >= threshold
    })
}

fn epr_power(n: usize) -> Vec<C64> {
    let phi = PureState::epr().amplitudes().to_vec();
    let mut v = vec![ONE];
    for _ in 0..n {
        v = crate::linalg::kron_vec(&v, &phi);
    }
    v
}

/// Subsystem order grouping ancilla pairs `(A1, B1, …, An, Bn)` first.
fn pair_order(n: usize, env: bool) -> (Vec<usize>, usize) {
    let mut order = Vec::new();
    for k in 0..n {
        order.push(k);
        order.push(n + 1 + k);
    }
    order.push(n);
    order.push(2 * n + 1);
    if env {
        order.push(2 * n + 2);
    }
    (order, 2 * n)
}

/// Freeze every qubit location to a sampled transcript and put `n` EPR
/// pairs on the frozen qubits, keeping the projected remainder as junk.
pub fn construct_ideal(multi: &MultiQubitIdeal, cfg: &IdealConfig) -> Result<IdealStrategy> {
    let s = &multi.strategy;
    let t = &multi.transform;
    let n = s.n();
    let table = PrefixTable::build(s, cfg.epsilon)?;
    let threshold = cfg.threshold();
    let mut rng = rng_from_seed(cfg.seed);
    let mut attempts = 0;
    let mut chosen = None;
    let mut met = false;
    while attempts < cfg.max_attempts.max(1) {
        attempts += 1;
        let h = sample_transcript(s, &mut rng)?;
        let ok = conditions_hold(&table, &h, n, threshold);
        chosen = Some(h);
        if ok {
            met = true;
            break;
        }
    }
    let hat = chosen.expect("at least one attempt");

    let mut refl = BTreeMap::new();
    for d in [Device::A, Device::B] {
        let hd = hat.local(d);
        for j in 1..=n {
            for q in 0..2u8 {
                refl.insert(
                    wildcard_key(d, j, q),
                    s.reflection(d, j, &hd.prefix(j - 1), q)?,
                );
            }
        }
    }
    let frames = [
        t.game_frame(Device::A, n, &hat.alice.prefix(n - 1))?,
        t.game_frame(Device::B, n, &hat.bob.prefix(n - 1))?,
    ];

    let reg = s.register_dims();
    let env = s.env_dim() > 1;
    let mut dims = t.register_dims(Device::A);
    dims.extend(t.register_dims(Device::B));
    if env {
        dims.push(s.env_dim());
    }
    let (order, _) = pair_order(n, env);
    let mut inverse = vec![0; order.len()];
    for (k, &o) in order.iter().enumerate() {
        inverse[o] = k;
    }
    let phi_n = epr_power(n);
    let pairs = phi_n.len();
    let frames_adj = [frames[0].adjoint(), frames[1].adjoint()];

    let comps = state_components(s.initial())?;
    let mut junk: Vec<Vec<C64>> = Vec::with_capacity(comps.len());
    for u in &comps {
        let v = apply_local(
            &apply_local(u, &reg, &frames[0], &[0])?,
            &reg,
            &frames[1],
            &[1],
        )?;
        let (w, _) = permute_subsystems(&v, &dims, &order)?;
        let rest = w.len() / pairs;
        let mut j = vec![ZERO; rest];
        for (k, p) in phi_n.iter().enumerate() {
            if *p == ZERO {
                continue;
            }
            for (r, z) in j.iter_mut().enumerate() {
                *z += p.conj() * w[k * rest + r];
            }
        }
        junk.push(j);
    }
    let epr_weight: f64 = junk.iter().map(|j| crate::linalg::norm(j).powi(2)).sum();
    if epr_weight < 1e-12 {
        return Err(RigidityError::Numerical(
            "frozen qubits carry no EPR component".into(),
        ));
    }
    let scale = 1.0 / epr_weight.sqrt();
    let permuted_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    let mut new_comps = Vec::with_capacity(junk.len());
    let mut state_residual = 0.0f64;
    for j in &junk {
        let target: Vec<C64> = crate::linalg::kron_vec(&phi_n, j)
            .into_iter()
            .map(|z| z * scale)
            .collect();
        let (back, _) = permute_subsystems(&target, &permuted_dims, &inverse)?;
        let c = apply_local(
            &apply_local(&back, &reg, &frames_adj[0], &[0])?,
            &reg,
            &frames_adj[1],
            &[1],
        )?;
        // Structural check: the frames carry the new state back to φ^n ⊗ junk.
        let again = apply_local(
            &apply_local(&c, &reg, &frames[0], &[0])?,
            &reg,
            &frames[1],
            &[1],
        )?;
        let (w, _) = permute_subsystems(&again, &dims, &order)?;
        state_residual = state_residual.max(crate::linalg::matrix::vec_max_abs_diff(&w, &target));
        new_comps.push(c);
    }
    let initial = if new_comps.len() == 1 {
        QuantumState::Pure(PureState::normalized(
            new_comps.pop().expect("one component"),
            reg.clone(),
        )?)
    } else {
        let dim = s.total_dim();
        let mut m = CMatrix::zeros(dim, dim);
        for c in &new_comps {
            m = &m + &CMatrix::outer(c, c);
        }
        QuantumState::Mixed(DensityMatrix::new(m.hermitian_part(), reg.clone())?)
    };
    let out = SequentialStrategy::new(
        n,
        s.device_dim(Device::A),
        s.device_dim(Device::B),
        s.env_dim(),
        initial,
        ReflectionSource::Table(refl),
    )?;

    let mut reflection_residual = 0.0f64;
    for (i, d) in [Device::A, Device::B].into_iter().enumerate() {
        for j in 1..=n {
            for q in 0..2u8 {
                let expected = frames_adj[i]
                    .matmul(&t.ancilla_ideal(d, j, q)?)
                    .matmul(&frames[i]);
                let r = out.reflection(d, j, &LocalTranscript::empty(), q)?;
                reflection_residual = reflection_residual.max(r.matrix().max_abs_diff(&expected));
            }
        }
    }
    let distance = simulation_distance(s, &out)?;
    Ok(IdealStrategy {
        strategy: out,
        frames,
        report: IdealReport {
            transcript: hat.key(),
            attempts,
            conditions_met: met,
            epsilon: cfg.epsilon,
            tail_threshold: threshold,
            epr_weight,
            distance,
            structured: reflection_residual <= STRUCTURE_TOL && state_residual <= STRUCTURE_TOL,
            reflection_residual,
            state_residual,
        },
    })
}
