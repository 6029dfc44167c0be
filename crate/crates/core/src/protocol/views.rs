//! What one device can see of a session, reduced to a small alphabet.
//!
//! The raw view (hundreds of messages) has far too many values to compare
//! empirically, so each view is mapped to a feature: the run-length shape of
//! the incoming message kinds, which pins down both the sub-protocol's
//! message pattern and the special round, plus a few content bits and one
//! bit of the device's own first reply. Two protocols the device cannot tell
//! apart give the same feature distribution; a difference in the feature
//! distribution is a distinguisher.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ProtocolConfig, SubProtocol};
use super::session::run_session;
use super::Result;
use crate::rng::child_rng;
use crate::stats::{frequencies, total_variation};
use crate::tomography::{DeviceModel, Direction, Payload, SessionLog, Side};
use rand::RngCore;

pub fn view_feature(log: &SessionLog, side: Side) -> String {
    let (to, from) = (Direction::to(side), Direction::from(side));
    let mut shape: Vec<(char, usize)> = Vec::new();
    let mut question_parity = 0u8;
    let mut first_perm = '-';
    let mut first_pair = '-';
    let mut first_reply = '-';
    let bit = |b: bool| if b { '1' } else { '0' };
    for e in &log.entries {
        if e.direction == to {
            let kind = match &e.payload {
                Payload::Question(x) => {
                    question_parity ^= x & 1;
                    'Q'
                }
                Payload::Permutation(p) => {
                    if first_perm == '-' && p.len() > 1 {
                        first_perm = bit(p[0] < p[1]);
                    }
                    'P'
                }
                Payload::BellRequest(a, b) => {
                    if first_pair == '-' {
                        first_pair = bit(a < b);
                    }
                    'B'
                }
                _ => '?',
            };
            match shape.last_mut() {
                Some((k, n)) if *k == kind => *n += 1,
                _ => shape.push((kind, 1)),
            }
        } else if e.direction == from && first_reply == '-' {
            first_reply = match &e.payload {
                Payload::Answer(a) => bit(a & 1 == 1),
                Payload::Reports(r) => bit(r.first().is_some_and(|x| x & 1 == 1)),
                Payload::BellOutcome(c) => bit(c & 1 == 1),
                _ => '?',
            };
        }
    }
    let shape: String = shape.iter().map(|(k, n)| format!("{k}{n}")).collect();
    format!("{shape}|{question_parity}{first_perm}{first_pair}|{first_reply}")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ViewReport {
    pub side: Side,
    pub protocols: (SubProtocol, SubProtocol),
    pub sessions: usize,
    pub tv: f64,
    /// Number of distinct features seen under either protocol.
    pub alphabet: usize,
    /// `2·√(alphabet / sessions)`.
    pub noise_floor: f64,
    pub counts: (BTreeMap<String, usize>, BTreeMap<String, usize>),
}

fn feature_counts(
    cfg: &ProtocolConfig,
    side: Side,
    protocol: SubProtocol,
    sessions: usize,
    seed: u64,
) -> Result<BTreeMap<String, usize>> {
    let pinned = cfg.pinned(protocol);
    let features: Vec<String> = (0..sessions)
        .into_par_iter()
        .map(|i| {
            let s = child_rng(seed, i as u64).next_u64();
            let rec = run_session(&pinned.with_seed(s), &DeviceModel::Honest, &DeviceModel::Honest)?;
            Ok(view_feature(&rec.messages, side))
        })
        .collect::<Result<_>>()?;
    let mut counts = BTreeMap::new();
    for f in features {
        *counts.entry(f).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Empirical total variation between `side`'s view features under the two
/// protocols, both devices honest.
pub fn view_indistinguishability(
    cfg: &ProtocolConfig,
    side: Side,
    protocols: (SubProtocol, SubProtocol),
    sessions: usize,
    seed: u64,
) -> Result<ViewReport> {
    let a = feature_counts(cfg, side, protocols.0, sessions, child_rng(seed, 1).next_u64())?;
    let b = feature_counts(cfg, side, protocols.1, sessions, child_rng(seed, 2).next_u64())?;
    let tv = if sessions == 0 { 0.0 } else { total_variation(&frequencies(&a), &frequencies(&b)) };
    let alphabet = a.keys().chain(b.keys()).collect::<std::collections::BTreeSet<_>>().len();
    Ok(ViewReport {
        side,
        protocols,
        sessions,
        tv,
        alphabet,
        noise_floor: 2.0 * (alphabet as f64 / sessions.max(1) as f64).sqrt(),
        counts: (a, b),
    })
}
