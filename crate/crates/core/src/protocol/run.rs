use std::collections::BTreeMap;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ProtocolConfig, SubProtocol};
use super::session::{run_session, SessionRecord};
use super::Result;
use crate::rng::child_rng;
use crate::stats::{frequencies, total_variation};
use crate::tomography::DeviceModel;

/// Seed of session `i` in a run seeded with `seed`.
pub fn session_seed(seed: u64, i: usize) -> u64 {
    child_rng(seed, i as u64).next_u64()
}

/// `sessions` independent sessions, in index order.
pub fn run_sessions(
    cfg: &ProtocolConfig,
    sessions: usize,
    seed: u64,
    alice: &DeviceModel,
    bob: &DeviceModel,
) -> Result<Vec<SessionRecord>> {
    cfg.validate()?;
    (0..sessions)
        .into_par_iter()
        .map(|i| run_session(&cfg.with_seed(session_seed(seed, i)), alice, bob))
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStats {
    pub sessions: usize,
    pub accepted: usize,
    pub acceptance_rate: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub sessions: usize,
    pub accepted: usize,
    pub malformed: usize,
    pub per_protocol: BTreeMap<SubProtocol, ProtocolStats>,
    /// Logical outcomes over all computation sessions.
    pub histogram: BTreeMap<String, usize>,
    /// Exact output distribution of the circuit, when there is one.
    pub direct: Option<BTreeMap<String, f64>>,
    pub tv_to_direct: Option<f64>,
}

impl RunReport {
    pub fn from_records(cfg: &ProtocolConfig, records: &[SessionRecord]) -> Result<Self> {
        let mut report = RunReport { sessions: records.len(), ..Default::default() };
        for r in records {
            let s = report.per_protocol.entry(r.protocol).or_default();
            s.sessions += 1;
            if r.accepted() {
                s.accepted += 1;
                report.accepted += 1;
            }
            if r.diagnostic.as_deref().is_some_and(|d| d.starts_with("malformed")) {
                report.malformed += 1;
            }
            for bits in &r.output {
                *report.histogram.entry(bits.clone()).or_insert(0) += 1;
            }
        }
        for s in report.per_protocol.values_mut() {
            s.acceptance_rate = Some(s.accepted as f64 / s.sessions as f64);
        }
        if let Some(c) = &cfg.circuit {
            let direct = c.direct_distribution()?;
            if !report.histogram.is_empty() {
                report.tv_to_direct = Some(total_variation(&frequencies(&report.histogram), &direct));
            }
            report.direct = Some(direct);
        }
        Ok(report)
    }

    pub fn acceptance(&self, p: SubProtocol) -> Option<f64> {
        self.per_protocol.get(&p).and_then(|s| s.acceptance_rate)
    }

    /// More accepted sessions than rejected ones.
    pub fn accept_majority(&self) -> bool {
        2 * self.accepted > self.sessions
    }
}

/// Many sessions with the same devices, summarized per sub-protocol, with
/// the computation sessions' outputs compared against direct simulation.
pub fn full_verified_run(
    cfg: &ProtocolConfig,
    sessions: usize,
    seed: u64,
    alice: &DeviceModel,
    bob: &DeviceModel,
) -> Result<(RunReport, Vec<SessionRecord>)> {
    let records = run_sessions(cfg, sessions, seed, alice, bob)?;
    Ok((RunReport::from_records(cfg, &records)?, records))
}
