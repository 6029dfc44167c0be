//! The three constructions chained, with per-stage and end-to-end distances.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::stages::{
    construct_ideal, construct_multi_qubit_ideal, construct_single_qubit_ideal, prepend_ancillas,
    IdealConfig, IdealReport, MultiQubitReport, SingleQubitReport,
};
use super::Result;
use crate::linalg::Reflection;
use crate::rng::{perturb_reflection, DetRng};
use crate::sequential::strategy::ReflectionSource;
use crate::sequential::transcript::reflection_key;
use crate::sequential::{
    builtin, local_transcripts, simulation_distance, Device, SequentialStrategy, SimulationDistance,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub epsilon: f64,
    pub seed: u64,
    pub max_attempts: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            epsilon: 0.05,
            seed: 0,
            max_attempts: 64,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n: usize,
    pub single: SingleQubitReport,
    pub multi: MultiQubitReport,
    pub ideal: IdealReport,
    /// Ideal strategy against the input with ancillas prepended.
    pub end_to_end: SimulationDistance,
    pub stage_sum_weak: f64,
    pub stage_sum_strong: f64,
    /// End-to-end distances within the sum of the stage distances.
    pub chained_bound_holds: bool,
    /// Every stage output passed its structural check.
    pub structured: bool,
}

pub fn run_pipeline(s: &SequentialStrategy, cfg: &PipelineConfig) -> Result<PipelineReport> {
    let single = construct_single_qubit_ideal(s)?;
    let multi = construct_multi_qubit_ideal(&single.strategy)?;
    let ideal_cfg = IdealConfig {
        max_attempts: cfg.max_attempts,
        ..IdealConfig::new(cfg.epsilon, cfg.seed)
    };
    let ideal = construct_ideal(&multi, &ideal_cfg)?;
    let reference = prepend_ancillas(s)?;
    let end_to_end = simulation_distance(&reference, &ideal.strategy)?;
    let stages = [
        &single.report.distance,
        &multi.report.distance,
        &ideal.report.distance,
    ];
    let stage_sum_weak: f64 = stages.iter().map(|d| d.weak).sum();
    let stage_sum_strong: f64 = stages.iter().map(|d| d.strong).sum();
    Ok(PipelineReport {
        n: s.n(),
        chained_bound_holds: end_to_end.weak <= stage_sum_weak + 1e-9
            && end_to_end.strong <= stage_sum_strong + 1e-9,
        structured: single.report.structure.holds
            && multi.report.structured
            && ideal.report.structured,
        single: single.report,
        multi: multi.report,
        ideal: ideal.report,
        end_to_end,
        stage_sum_weak,
        stage_sum_strong,
    })
}

/// The ideal `n`-game strategy on `n` EPR pairs with every context's
/// reflections replaced by `sign(R + τH)` for random unit-norm `H`. The same
/// seed draws the same directions for every `τ`.
pub fn perturbed_ideal(n: usize, tau: f64, seed: u64) -> Result<SequentialStrategy> {
    let base = builtin("ideal", n)?.to_general()?;
    let mut rng = DetRng::seed_from_u64(seed);
    let mut table = std::collections::BTreeMap::new();
    for d in [Device::A, Device::B] {
        for j in 1..=n {
            for h in local_transcripts(j - 1) {
                for q in 0..2u8 {
                    let r = base.reflection(d, j, &h, q)?;
                    let p = perturb_reflection(&mut rng, r.matrix(), tau);
                    table.insert(reflection_key(d, j, &h, q), Reflection::new(p)?);
                }
            }
        }
    }
    Ok(SequentialStrategy::new(
        n,
        base.device_dim(Device::A),
        base.device_dim(Device::B),
        base.env_dim(),
        base.initial().clone(),
        ReflectionSource::Table(table),
    )?)
}
