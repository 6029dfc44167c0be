//! Single-shot two-question XOR games, CHSH in particular.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::eigen::{eigenvalues_hermitian, operator_norm};
use crate::linalg::pauli::{pauli_x, pauli_z};
use crate::linalg::{CMatrix, LinalgError, PureState, QuantumState, Reflection};

/// cos²(π/8), the optimal quantum CHSH win probability.
pub fn chsh_quantum_value() -> f64 {
    (PI / 8.0).cos().powi(2)
}

pub const CHSH_CLASSICAL_VALUE: f64 = 0.75;

/// Win-probability deficit in the normalization `w = ω* − ε/8`, clamped at 0.
pub fn epsilon_from_win(win: f64) -> f64 {
    (8.0 * (chsh_quantum_value() - win)).max(0.0)
}

#[derive(Debug, Error)]
pub enum ChshError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("strategy dimensions do not match the shared state ({0} vs {1})")]
    DimMismatch(usize, usize),
    #[error("bias-operator identity violated (residual {0:e})")]
    IdentityViolation(f64),
    #[error("dual certificate is not feasible (minimum eigenvalue {0:e})")]
    CertificateNotPsd(f64),
}

pub type Result<T> = std::result::Result<T, ChshError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XorGameSpec {
    /// `question_dist[a][b] = p(a, b)`.
    pub question_dist: [[f64; 2]; 2],
    /// Accept iff `x ⊕ y = predicate[a][b]`.
    pub predicate: [[u8; 2]; 2],
}

impl Default for XorGameSpec {
    fn default() -> Self {
        Self::chsh()
    }
}

impl XorGameSpec {
    pub fn chsh() -> Self {
        XorGameSpec {
            question_dist: [[0.25; 2]; 2],
            predicate: [[0, 0], [0, 1]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut total = 0.0;
        for row in &self.question_dist {
            for &p in row {
                if !(p >= 0.0) {
                    return Err(ChshError::InvalidGame(format!("negative probability {p}")));
                }
                total += p;
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(ChshError::InvalidGame(format!(
                "probabilities sum to {total}"
            )));
        }
        if self.predicate.iter().flatten().any(|&v| v > 1) {
            return Err(ChshError::InvalidGame(
                "predicate values must be 0 or 1".into(),
            ));
        }
        Ok(())
    }

    pub fn wins(&self, a: usize, b: usize, x: u8, y: u8) -> bool {
        (x ^ y) == self.predicate[a][b]
    }

    /// `(−1)^{V(a,b)}`
    pub fn sign(&self, a: usize, b: usize) -> f64 {
        if self.predicate[a][b] == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingleGameStrategy {
    pub state: QuantumState,
    pub alice: [Reflection; 2],
    pub bob: [Reflection; 2],
}

impl SingleGameStrategy {
    pub fn new(state: QuantumState, alice: [Reflection; 2], bob: [Reflection; 2]) -> Result<Self> {
        let s = SingleGameStrategy { state, alice, bob };
        s.check_dims()?;
        Ok(s)
    }

    pub fn check_dims(&self) -> Result<()> {
        let da = self.alice[0].dim();
        let db = self.bob[0].dim();
        if self.alice[1].dim() != da {
            return Err(ChshError::DimMismatch(self.alice[1].dim(), da));
        }
        if self.bob[1].dim() != db {
            return Err(ChshError::DimMismatch(self.bob[1].dim(), db));
        }
        if da * db != self.state.dim() {
            return Err(ChshError::DimMismatch(da * db, self.state.dim()));
        }
        Ok(())
    }

    pub fn alice_dim(&self) -> usize {
        self.alice[0].dim()
    }

    pub fn bob_dim(&self) -> usize {
        self.bob[0].dim()
    }

    /// `R^A_a ⊗ R^B_b` on the joint space.
    pub fn joint_observable(&self, a: usize, b: usize) -> CMatrix {
        self.alice[a].matrix().kron(self.bob[b].matrix())
    }
}

/// EPR pair; Bob measures σ_z or σ_x, Alice (σ_z ± σ_x)/√2.
pub fn ideal_strategy() -> SingleGameStrategy {
    alice_angle_strategy(PI / 4.0)
}

/// Ideal strategy with Alice's Bloch axes at `±theta` from σ_z (ideal at π/4).
pub fn alice_angle_strategy(theta: f64) -> SingleGameStrategy {
    let (s, c) = theta.sin_cos();
    let r0 = (&pauli_z().scale_real(c) + &pauli_x().scale_real(s)).hermitian_part();
    let r1 = (&pauli_z().scale_real(c) - &pauli_x().scale_real(s)).hermitian_part();
    SingleGameStrategy {
        state: QuantumState::Pure(PureState::epr()),
        alice: [
            Reflection::new(r0).expect("reflection"),
            Reflection::new(r1).expect("reflection"),
        ],
        bob: [
            Reflection::new(pauli_z()).expect("σz"),
            Reflection::new(pauli_x()).expect("σx"),
        ],
    }
}

/// Both devices always answer 0 (all reflections equal the identity).
pub fn always_zero_strategy() -> SingleGameStrategy {
    SingleGameStrategy {
        state: QuantumState::Pure(PureState::epr()),
        alice: [Reflection::identity(2), Reflection::identity(2)],
        bob: [Reflection::identity(2), Reflection::identity(2)],
    }
}

/// Ideal reflections on `(1−p)|φ⟩⟨φ| + p·I/4`.
pub fn werner_strategy(p: f64) -> Result<SingleGameStrategy> {
    let phi = PureState::epr().density();
    let mixed = crate::linalg::DensityMatrix::maximally_mixed(vec![2, 2])?;
    let rho = crate::linalg::DensityMatrix::mixture(&[(1.0 - p, phi), (p, mixed)])?;
    let mut s = ideal_strategy();
    s.state = QuantumState::Mixed(rho);
    Ok(s)
}

/// Σ p(a,b)·Pr[x ⊕ y = V(a,b)], from the projective measurements on the state.
pub fn win_probability(s: &SingleGameStrategy, g: &XorGameSpec) -> Result<f64> {
    s.check_dims()?;
    g.validate()?;
    let mut total = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let p = g.question_dist[a][b];
            if p == 0.0 {
                continue;
            }
            for x in 0..2u8 {
                let pa = s.alice[a].projector(x);
                for y in 0..2u8 {
                    if g.wins(a, b, x, y) {
                        let proj = pa.kron(&s.bob[b].projector(y));
                        total += p * s.state.expectation(&proj).re;
                    }
                }
            }
        }
    }
    Ok(total)
}

pub fn chsh_win_probability(s: &SingleGameStrategy) -> Result<f64> {
    win_probability(s, &XorGameSpec::chsh())
}

/// Best win probability over the 16 deterministic answer-function pairs.
pub fn classical_value(g: &XorGameSpec) -> f64 {
    let mut best = 0.0f64;
    for fa in 0..4u8 {
        for fb in 0..4u8 {
            let mut w = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let x = (fa >> a) & 1;
                    let y = (fb >> b) & 1;
                    if g.wins(a, b, x, y) {
                        w += g.question_dist[a][b];
                    }
                }
            }
            best = best.max(w);
        }
    }
    best
}

/// Σ (−1)^{ab} R^A_a ⊗ R^B_b
pub fn bell_operator(s: &SingleGameStrategy) -> CMatrix {
    let mut out = CMatrix::zeros(s.state.dim(), s.state.dim());
    for a in 0..2 {
        for b in 0..2 {
            let sign = if a * b == 1 { -1.0 } else { 1.0 };
            out = &out + &s.joint_observable(a, b).scale_real(sign);
        }
    }
    out
}

pub fn bell_value(s: &SingleGameStrategy) -> f64 {
    s.state.expectation(&bell_operator(s)).re
}

#[derive(Clone, Debug)]
pub struct BiasOperators {
    pub m0: CMatrix,
    pub m1: CMatrix,
}

/// Max-entry residual of `B − (2√2·I − √2(M0² + M1²))`.
pub fn bias_identity_residual(s: &SingleGameStrategy, m: &BiasOperators) -> f64 {
    let d = s.state.dim();
    let sq = &m.m0.matmul(&m.m0) + &m.m1.matmul(&m.m1);
    let rhs = &CMatrix::identity(d).scale_real(2.0 * SQRT_2) - &sq.scale_real(SQRT_2);
    bell_operator(s).max_abs_diff(&rhs)
}

/// `M_a = ½(R^A_0 + (−1)^a R^A_1) ⊗ I − (1/√2) I ⊗ R^B_a`, checked against the
/// Bell operator identity at 1e−9.
pub fn bias_operators(s: &SingleGameStrategy) -> Result<BiasOperators> {
    s.check_dims()?;
    let ia = CMatrix::identity(s.alice_dim());
    let ib = CMatrix::identity(s.bob_dim());
    let make = |a: usize| {
        let sign = if a == 0 { 1.0 } else { -1.0 };
        let alice = (s.alice[0].matrix() + &s.alice[1].matrix().scale_real(sign)).scale_real(0.5);
        &alice.kron(&ib) - &ia.kron(s.bob[a].matrix()).scale_real(FRAC_1_SQRT_2)
    };
    let ops = BiasOperators {
        m0: make(0),
        m1: make(1),
    };
    let residual = bias_identity_residual(s, &ops);
    if residual > 1e-9 {
        return Err(ChshError::IdentityViolation(residual));
    }
    Ok(ops)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SdpCertificate {
    /// `[[0, Θ], [Θᵀ, 0]]`
    pub theta_hat: [[f64; 4]; 4],
    /// Diagonal of Δ.
    pub delta: [f64; 4],
    pub bias: f64,
    pub omega: f64,
    /// Smallest eigenvalue of Δ − Θ̂ (≥ 0 up to rounding).
    pub min_slack_eigenvalue: f64,
}

impl SdpCertificate {
    pub fn delta_matrix(&self) -> CMatrix {
        CMatrix::diag(&self.delta.map(crate::linalg::r))
    }

    pub fn theta_hat_matrix(&self) -> CMatrix {
        CMatrix::from_fn(4, 4, |i, j| crate::linalg::r(self.theta_hat[i][j]))
    }

    pub fn slack_eigenvalues(&self) -> Vec<f64> {
        eigenvalues_hermitian(&(&self.delta_matrix() - &self.theta_hat_matrix()))
    }
}

/// Optimal dual certificate of the two-question XOR-game SDP.
///
/// The primal optimum uses unit vectors `u_0, u_1` (Alice) and `v_0, v_1`
/// (Bob). For fixed `t = ⟨u_0, u_1⟩` the best `v_b` is parallel to
/// `Σ_a Θ_ab u_a`, so the value is `Σ_b ‖Σ_a Θ_ab u_a‖`, a concave function
/// of `t ∈ [−1, 1]` whose maximizer has a closed form. Complementary
/// slackness then gives the diagonal dual `Δ_ii = (Θ̂Γ)_ii`, which is checked
/// for feasibility.
pub fn tsirelson_certificate(g: &XorGameSpec) -> Result<SdpCertificate> {
    g.validate()?;
    let mut theta = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            theta[a][b] = g.question_dist[a][b] * g.sign(a, b);
        }
    }
    // ‖Σ_a Θ_ab u_a‖² = A_b + 2 B_b t
    let coef: [(f64, f64); 2] = [0, 1].map(|b| {
        (
            theta[0][b].powi(2) + theta[1][b].powi(2),
            theta[0][b] * theta[1][b],
        )
    });
    let value = |t: f64| -> f64 {
        coef.iter()
            .map(|(a, b)| (a + 2.0 * b * t).max(0.0).sqrt())
            .sum()
    };
    let mut candidates = vec![-1.0, 0.0, 1.0];
    let ((a0, b0), (a1, b1)) = (coef[0], coef[1]);
    // Stationary point: b0²(a1 + 2 b1 t) = b1²(a0 + 2 b0 t) with b0·b1 < 0.
    if b0 * b1 < 0.0 {
        let t = (b1 * b1 * a0 - b0 * b0 * a1) / (2.0 * b0 * b1 * (b0 - b1));
        if t.is_finite() {
            candidates.push(t.clamp(-1.0, 1.0));
        }
    }
    let t = candidates.into_iter().fold(f64::NAN, |best, t| {
        if best.is_nan() || value(t) > value(best) {
            t
        } else {
            best
        }
    });

    // ⟨u_a, v_b⟩ = (Θ_0b⟨u_a,u_0⟩ + Θ_1b⟨u_a,u_1⟩) / n_b
    let gram_u = [[1.0, t], [t, 1.0]];
    let mut uv = [[0.0; 2]; 2];
    for b in 0..2 {
        let nb = value_component(coef[b], t);
        if nb <= 1e-300 {
            continue;
        }
        for a in 0..2 {
            uv[a][b] = (theta[0][b] * gram_u[a][0] + theta[1][b] * gram_u[a][1]) / nb;
        }
    }
    let mut delta = [0.0; 4];
    for a in 0..2 {
        delta[a] = (0..2).map(|b| theta[a][b] * uv[a][b]).sum();
    }
    for b in 0..2 {
        delta[2 + b] = (0..2).map(|a| theta[a][b] * uv[a][b]).sum();
    }
    let mut theta_hat = [[0.0; 4]; 4];
    for a in 0..2 {
        for b in 0..2 {
            theta_hat[a][2 + b] = theta[a][b];
            theta_hat[2 + b][a] = theta[a][b];
        }
    }
    let bias = 0.5 * delta.iter().sum::<f64>();
    let mut cert = SdpCertificate {
        theta_hat,
        delta,
        bias,
        omega: (1.0 + bias) / 2.0,
        min_slack_eigenvalue: 0.0,
    };
    let min_eig = cert.slack_eigenvalues()[0];
    cert.min_slack_eigenvalue = min_eig;
    if min_eig < -1e-9 {
        return Err(ChshError::CertificateNotPsd(min_eig));
    }
    Ok(cert)
}

fn value_component((a, b): (f64, f64), t: f64) -> f64 {
    (a + 2.0 * b * t).max(0.0).sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Evaluation {
    pub win_probability: f64,
    pub epsilon: f64,
    pub bell_value: f64,
    pub classical_value: f64,
    pub certificate: SdpCertificate,
    pub bell_operator_norm: f64,
}

/// Everything `chsh eval` reports for one strategy and game.
pub fn evaluate(s: &SingleGameStrategy, g: &XorGameSpec) -> Result<Evaluation> {
    let win = win_probability(s, g)?;
    let certificate = tsirelson_certificate(g)?;
    let b = bell_operator(s);
    Ok(Evaluation {
        win_probability: win,
        epsilon: epsilon_from_win(win),
        bell_value: s.state.expectation(&b).re,
        classical_value: classical_value(g),
        certificate,
        bell_operator_norm: operator_norm(&b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::norm;

    #[test]
    fn ideal_wins_at_tsirelson_value() {
        let w = chsh_win_probability(&ideal_strategy()).unwrap();
        assert!((w - 0.853_553_390_593_273_8).abs() < 1e-12);
    }

    #[test]
    fn ideal_alice_reflections_anticommute() {
        let s = ideal_strategy();
        let (r0, r1) = (s.alice[0].matrix(), s.alice[1].matrix());
        let anti = &r0.matmul(r1) + &r1.matmul(r0);
        assert!(anti.max_abs() < 1e-15);
    }

    #[test]
    fn always_zero_wins_three_quarters() {
        assert!((chsh_win_probability(&always_zero_strategy()).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn werner_value() {
        let w = chsh_win_probability(&werner_strategy(0.1).unwrap()).unwrap();
        assert!((w - (0.5 + 0.9 / (2.0 * SQRT_2))).abs() < 1e-12);
        assert!((w - 0.81820).abs() < 1e-5);
    }

    #[test]
    fn classical_values() {
        assert_eq!(classical_value(&XorGameSpec::chsh()), 0.75);
        let trivial = XorGameSpec {
            question_dist: [[0.25; 2]; 2],
            predicate: [[0; 2]; 2],
        };
        assert_eq!(classical_value(&trivial), 1.0);
    }

    #[test]
    fn bell_operator_values() {
        assert!((bell_value(&ideal_strategy()) - 2.0 * SQRT_2).abs() < 1e-12);
        let z = Reflection::new(pauli_z()).unwrap();
        let s = SingleGameStrategy::new(
            QuantumState::Pure(PureState::epr()),
            [z.clone(), z.clone()],
            [z.clone(), z],
        )
        .unwrap();
        assert!((bell_value(&s) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_state_is_in_bias_kernels() {
        let s = ideal_strategy();
        let m = bias_operators(&s).unwrap();
        let psi = PureState::epr();
        assert!(norm(&m.m0.apply(psi.amplitudes())) < 1e-9);
        assert!(norm(&m.m1.apply(psi.amplitudes())) < 1e-9);
    }

    #[test]
    fn bias_operator_spectrum_for_alice_angle() {
        for &theta in &[0.1, 0.5, PI / 4.0, 1.2] {
            // R^A_0 = σ_z and R^A_1 a reflection at Bloch angle 2θ from it.
            let r1 = crate::linalg::pauli::real_reflection(theta);
            let s = SingleGameStrategy::new(
                QuantumState::Pure(PureState::epr()),
                [
                    Reflection::new(pauli_z()).unwrap(),
                    Reflection::new(r1).unwrap(),
                ],
                [
                    Reflection::new(pauli_z()).unwrap(),
                    Reflection::new(pauli_x()).unwrap(),
                ],
            )
            .unwrap();
            let m = bias_operators(&s).unwrap();
            let mut got = eigenvalues_hermitian(&m.m0);
            let c = theta.cos();
            let mut want = vec![
                c + FRAC_1_SQRT_2,
                c - FRAC_1_SQRT_2,
                -c + FRAC_1_SQRT_2,
                -c - FRAC_1_SQRT_2,
            ];
            want.sort_by(f64::total_cmp);
            got.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "θ={theta}: {got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn chsh_certificate() {
        let cert = tsirelson_certificate(&XorGameSpec::chsh()).unwrap();
        let d = 1.0 / (2.0 * SQRT_2);
        for v in cert.delta {
            assert!((v - d).abs() < 1e-12);
        }
        assert!((cert.bias - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((cert.omega - chsh_quantum_value()).abs() < 1e-12);
        let eig = cert.slack_eigenvalues();
        let want = [0.0, 0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2];
        for (g, w) in eig.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn trivial_game_certificate() {
        let g = XorGameSpec {
            question_dist: [[0.25; 2]; 2],
            predicate: [[0; 2]; 2],
        };
        let cert = tsirelson_certificate(&g).unwrap();
        assert!((cert.bias - 1.0).abs() < 1e-12);
        assert!((cert.omega - 1.0).abs() < 1e-12);
        for v in cert.delta {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_game_rejected() {
        let g = XorGameSpec {
            question_dist: [[0.5; 2]; 2],
            predicate: [[0; 2]; 2],
        };
        assert!(matches!(
            tsirelson_certificate(&g),
            Err(ChshError::InvalidGame(_))
        ));
    }

    #[test]
    fn strategy_json_round_trip() {
        let s = ideal_strategy();
        let json = serde_json::to_string(&s).unwrap();
        let back: SingleGameStrategy = serde_json::from_str(&json).unwrap();
        assert!((chsh_win_probability(&back).unwrap() - chsh_quantum_value()).abs() < 1e-12);
    }
}
