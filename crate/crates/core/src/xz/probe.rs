//! Empirical look at how tightly `{I,X,Z}` statistics pin a state down.
//!
//! For each tolerance ε we sample states near `τ` whose XZ coefficients all
//! lie within ε of `τ`'s and record the largest trace distance seen. The fit
//! `distance ≈ c·ε^d` is a lower-bound witness for the true exponent, not a
//! proof.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::coefficients::{conjugation_obstruction, xz_coefficients};
use super::{Result, XzError};
use crate::linalg::eigen::hermitian_eigen;
use crate::linalg::ops::trace_distance_matrix;
use crate::linalg::DensityMatrix;
use crate::rng::{random_hermitian, rng_from_seed};
use crate::stats::loglog_fit;

pub const MAX_PROBE_QUBITS: usize = 4;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbePoint {
    pub epsilon: f64,
    /// Random samples that met the tolerance.
    pub accepted: usize,
    /// Largest trace distance among accepted samples (τ itself counts, so
    /// this is 0 when nothing else was accepted).
    pub max_distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExponentProbe {
    pub points: Vec<ProbePoint>,
    pub exponent: Option<f64>,
    pub constant: Option<f64>,
    /// Positive tolerances at which no random sample was accepted.
    pub starved: Vec<f64>,
}

/// `τ + tH` projected back to a state: negative eigenvalues clipped, trace
/// renormalized.
fn clipped(tau: &DensityMatrix, h: &crate::linalg::CMatrix, t: f64) -> crate::linalg::CMatrix {
    let m = tau.matrix() + &h.scale_real(t);
    let e = hermitian_eigen(&m);
    let pos = e.map(|v| v.max(0.0));
    let tr = pos.trace().re;
    pos.scale_real(1.0 / tr)
}

pub fn determination_exponent_probe(
    tau: &DensityMatrix,
    epsilons: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ExponentProbe> {
    let n = tau.num_qubits()?;
    if n > MAX_PROBE_QUBITS {
        return Err(XzError::Capacity(format!(
            "probe limited to {MAX_PROBE_QUBITS} qubits"
        )));
    }
    let obstruction = conjugation_obstruction(tau);
    if obstruction > 1e-6 {
        return Err(XzError::NotDetermined(format!(
            "conjugate state lies at trace distance {obstruction:.3}"
        )));
    }
    let target = xz_coefficients(tau)?;
    let dim = tau.dim();
    let mut rng = rng_from_seed(seed);
    let mut points = Vec::with_capacity(epsilons.len());
    let mut starved = Vec::new();
    for &eps in epsilons {
        let mut accepted = 0;
        let mut max_distance = 0.0f64;
        if eps > 0.0 {
            for _ in 0..samples {
                let h = random_hermitian(&mut rng, dim);
                let h = h.scale_real(1.0 / h.frobenius_norm());
                // Scales spread over two decades around ε.
                let t = eps * 10f64.powf(rng.random_range(-1.0..1.0));
                let m = clipped(tau, &h, t);
                let rho = DensityMatrix::new(m.clone(), tau.dims().to_vec())?;
                if xz_coefficients(&rho)?.max_deviation(&target) <= eps {
                    accepted += 1;
                    max_distance = max_distance.max(trace_distance_matrix(&m, tau.matrix()));
                }
            }
            if accepted == 0 {
                starved.push(eps);
            }
        }
        points.push(ProbePoint {
            epsilon: eps,
            accepted,
            max_distance,
        });
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.accepted > 0)
        .map(|p| (p.epsilon, p.max_distance))
        .collect();
    let fit = loglog_fit(&xy);
    Ok(ExponentProbe {
        exponent: fit.map(|f| f.0),
        constant: fit.map(|f| f.1.exp()),
        points,
        starved,
    })
}
