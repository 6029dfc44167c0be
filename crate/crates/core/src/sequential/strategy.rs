use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::transcript::{reflection_key, wildcard_key, Device, LocalTranscript};
use super::{Result, SeqError};
use crate::chsh::{always_zero_strategy, ideal_strategy, werner_strategy, SingleGameStrategy};
use crate::linalg::ops::{embed_operator, kron_all, permutation_matrix, permute_subsystems};
use crate::linalg::{CMatrix, DensityMatrix, PureState, QuantumState, Reflection, MAX_DIM};

/// `(device, game j ≥ 1, local transcript before game j, question) → R`.
pub type ReflectionFn =
    Arc<dyn Fn(Device, usize, &LocalTranscript, u8) -> Option<Reflection> + Send + Sync>;

#[derive(Clone)]
pub enum ReflectionSource {
    /// Keys `D/j/transcript/question`; `D/j/*/question` matches any transcript.
    Table(BTreeMap<String, Reflection>),
    Callback(ReflectionFn),
}

impl fmt::Debug for ReflectionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReflectionSource::Table(t) => write!(f, "Table({} entries)", t.len()),
            ReflectionSource::Callback(_) => f.write_str("Callback"),
        }
    }
}

/// Strategy for `n` sequential CHSH games on `H_A ⊗ H_B (⊗ H_C)`.
#[derive(Clone, Debug)]
pub struct SequentialStrategy {
    n: usize,
    dims: [usize; 3],
    initial: QuantumState,
    reflections: ReflectionSource,
}

impl SequentialStrategy {
    /// `env_dim = 1` means no environment register.
    pub fn new(
        n: usize,
        alice_dim: usize,
        bob_dim: usize,
        env_dim: usize,
        initial: QuantumState,
        reflections: ReflectionSource,
    ) -> Result<Self> {
        if n == 0 {
            return Err(SeqError::InvalidSpec(
                "at least one game is required".into(),
            ));
        }
        let total = alice_dim * bob_dim * env_dim;
        if total > MAX_DIM {
            return Err(SeqError::Capacity(format!(
                "joint dimension {total} exceeds {MAX_DIM}"
            )));
        }
        if initial.dim() != total {
            return Err(SeqError::DimMismatch(initial.dim(), total));
        }
        if let ReflectionSource::Table(t) = &reflections {
            for (k, r) in t {
                let d = if k.starts_with('A') {
                    alice_dim
                } else {
                    bob_dim
                };
                if r.dim() != d {
                    return Err(SeqError::InvalidSpec(format!(
                        "reflection {k} has dimension {} not {d}",
                        r.dim()
                    )));
                }
            }
        }
        Ok(SequentialStrategy {
            n,
            dims: [alice_dim, bob_dim, env_dim],
            initial,
            reflections,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn device_dim(&self, d: Device) -> usize {
        self.dims[d.index()]
    }

    pub fn env_dim(&self) -> usize {
        self.dims[2]
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Subsystem dims of the joint register: `[dA, dB]` or `[dA, dB, dC]`.
    pub fn register_dims(&self) -> Vec<usize> {
        if self.dims[2] > 1 {
            self.dims.to_vec()
        } else {
            self.dims[..2].to_vec()
        }
    }

    pub fn initial(&self) -> &QuantumState {
        &self.initial
    }

    pub fn reflections(&self) -> &ReflectionSource {
        &self.reflections
    }

    pub fn with_initial(&self, initial: QuantumState) -> Result<Self> {
        Self::new(
            self.n,
            self.dims[0],
            self.dims[1],
            self.dims[2],
            initial,
            self.reflections.clone(),
        )
    }

    pub fn with_games(&self, n: usize) -> Result<Self> {
        Self::new(
            n,
            self.dims[0],
            self.dims[1],
            self.dims[2],
            self.initial.clone(),
            self.reflections.clone(),
        )
    }

    pub fn reflection(
        &self,
        d: Device,
        j: usize,
        h: &LocalTranscript,
        question: u8,
    ) -> Result<Reflection> {
        let found = match &self.reflections {
            ReflectionSource::Table(t) => t
                .get(&reflection_key(d, j, h, question))
                .or_else(|| t.get(&wildcard_key(d, j, question)))
                .cloned(),
            ReflectionSource::Callback(f) => f(d, j, h, question),
        };
        let r =
            found.ok_or_else(|| SeqError::MissingReflection(reflection_key(d, j, h, question)))?;
        if r.dim() != self.device_dim(d) {
            return Err(SeqError::DimMismatch(r.dim(), self.device_dim(d)));
        }
        Ok(r)
    }

    /// Replace one device's reflections by `f`, keeping everything else.
    pub fn with_device_override(&self, d: Device, f: ReflectionFn) -> Self {
        let base = self.clone();
        let over = move |dev: Device, j: usize, h: &LocalTranscript, q: u8| {
            if dev == d {
                f(dev, j, h, q)
            } else {
                base.reflection(dev, j, h, q).ok()
            }
        };
        SequentialStrategy {
            reflections: ReflectionSource::Callback(Arc::new(over)),
            ..self.clone()
        }
    }

    /// Evaluate every reflection into an explicit table keyed by full
    /// transcripts, so later lookups are cheap.
    pub fn tabulate(&self) -> Result<SequentialStrategy> {
        if self.n > super::exact::MAX_EXACT_GAMES {
            return Err(SeqError::Capacity(format!(
                "cannot tabulate {} games",
                self.n
            )));
        }
        let mut table = BTreeMap::new();
        for d in [Device::A, Device::B] {
            for j in 1..=self.n {
                for h in local_transcripts(j - 1) {
                    for q in 0..2u8 {
                        table.insert(reflection_key(d, j, &h, q), self.reflection(d, j, &h, q)?);
                    }
                }
            }
        }
        Ok(SequentialStrategy {
            reflections: ReflectionSource::Table(table),
            ..self.clone()
        })
    }

    /// Isometric extension with a caller-chosen reflection on the new space:
    /// `lift(d, R)` must satisfy `lift(d, R)·X_d = X_d·R`.
    pub fn extend_with(
        &self,
        xa: &CMatrix,
        xb: &CMatrix,
        lift: impl Fn(Device, &Reflection) -> Result<Reflection>,
    ) -> Result<SequentialStrategy> {
        let (da, db, dc) = (self.dims[0], self.dims[1], self.dims[2]);
        if xa.cols() != da || xb.cols() != db || !xa.is_isometry(1e-9) || !xb.is_isometry(1e-9) {
            return Err(SeqError::InvalidSpec(
                "extension maps must be isometries on the device spaces".into(),
            ));
        }
        let full = kron_all(&[xa.clone(), xb.clone(), CMatrix::identity(dc)]);
        let mut new_dims = vec![xa.rows(), xb.rows()];
        if dc > 1 {
            new_dims.push(dc);
        }
        let initial = match &self.initial {
            QuantumState::Pure(p) => {
                QuantumState::Pure(PureState::new(full.apply(p.amplitudes()), new_dims)?)
            }
            QuantumState::Mixed(m) => QuantumState::Mixed(m.map_isometry(&full, new_dims)?),
        };
        let mut table = BTreeMap::new();
        for d in [Device::A, Device::B] {
            for j in 1..=self.n {
                for h in local_transcripts(j - 1) {
                    for q in 0..2u8 {
                        let r = self.reflection(d, j, &h, q)?;
                        table.insert(reflection_key(d, j, &h, q), lift(d, &r)?);
                    }
                }
            }
        }
        SequentialStrategy::new(
            self.n,
            xa.rows(),
            xb.rows(),
            dc,
            initial,
            ReflectionSource::Table(table),
        )
    }

    /// `ρ̃ = (X_A ⊗ X_B ⊗ I)ρ(…)†` and `R̃ = X R X† + (I − X X†)`, so that
    /// `X R = R̃ X` for every reflection.
    pub fn isometric_extension(&self, xa: &CMatrix, xb: &CMatrix) -> Result<SequentialStrategy> {
        let (da, db, dc) = (self.dims[0], self.dims[1], self.dims[2]);
        if xa.cols() != da || xb.cols() != db || !xa.is_isometry(1e-9) || !xb.is_isometry(1e-9) {
            return Err(SeqError::InvalidSpec(
                "extension maps must be isometries on the device spaces".into(),
            ));
        }
        let full = kron_all(&[xa.clone(), xb.clone(), CMatrix::identity(dc)]);
        let mut new_dims = vec![xa.rows(), xb.rows()];
        if dc > 1 {
            new_dims.push(dc);
        }
        let initial = match &self.initial {
            QuantumState::Pure(p) => {
                QuantumState::Pure(PureState::new(full.apply(p.amplitudes()), new_dims)?)
            }
            QuantumState::Mixed(m) => QuantumState::Mixed(m.map_isometry(&full, new_dims)?),
        };
        let base = self.clone();
        let maps = [xa.clone(), xb.clone()];
        let lift = move |d: Device, j: usize, h: &LocalTranscript, q: u8| {
            let r = base.reflection(d, j, h, q).ok()?;
            let x = &maps[d.index()];
            let proj = x.matmul(&x.adjoint());
            let comp = &CMatrix::identity(x.rows()) - &proj;
            Reflection::new(&x.conjugate(r.matrix()) + &comp).ok()
        };
        SequentialStrategy::new(
            self.n,
            xa.rows(),
            xb.rows(),
            dc,
            initial,
            ReflectionSource::Callback(Arc::new(lift)),
        )
    }
}

/// All local transcripts of the given length, in lexicographic order.
pub fn local_transcripts(len: usize) -> Vec<LocalTranscript> {
    let mut out = vec![LocalTranscript::empty()];
    for _ in 0..len {
        out = out
            .iter()
            .flat_map(|h| (0..4u8).map(move |k| h.extended(k >> 1, k & 1)))
            .collect();
    }
    out
}

/// Independent single-game strategies, game `j` played on its own fresh
/// state. Supports Monte Carlo at any `n`; `materialize` gives the joint
/// form for exact work.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductStrategy {
    pub games: Vec<SingleGameStrategy>,
}

impl ProductStrategy {
    pub fn repeated(game: SingleGameStrategy, n: usize) -> Self {
        ProductStrategy {
            games: vec![game; n],
        }
    }

    pub fn n(&self) -> usize {
        self.games.len()
    }

    /// Joint strategy with Alice's register `A_1 ⊗ … ⊗ A_n` and Bob's
    /// `B_1 ⊗ … ⊗ B_n`.
    pub fn materialize(&self) -> Result<SequentialStrategy> {
        let n = self.games.len();
        if n == 0 {
            return Err(SeqError::InvalidSpec("empty product strategy".into()));
        }
        let a_dims: Vec<usize> = self.games.iter().map(|g| g.alice_dim()).collect();
        let b_dims: Vec<usize> = self.games.iter().map(|g| g.bob_dim()).collect();
        let da: usize = a_dims.iter().product();
        let db: usize = b_dims.iter().product();
        if da * db > MAX_DIM {
            return Err(SeqError::Capacity(format!(
                "{n} games need dimension {}",
                da * db
            )));
        }
        // Interleaved order A1 B1 A2 B2 … → A1 … An B1 … Bn.
        let interleaved: Vec<usize> = a_dims
            .iter()
            .zip(&b_dims)
            .flat_map(|(a, b)| [*a, *b])
            .collect();
        let order: Vec<usize> = (0..n)
            .map(|k| 2 * k)
            .chain((0..n).map(|k| 2 * k + 1))
            .collect();
        let any_mixed = self
            .games
            .iter()
            .any(|g| matches!(g.state, QuantumState::Mixed(_)));
        let initial = if any_mixed {
            let mut m = CMatrix::identity(1);
            for g in &self.games {
                m = m.kron(g.state.density().matrix());
            }
            let p = permutation_matrix(&interleaved, &order)?;
            QuantumState::Mixed(DensityMatrix::new(p.conjugate(&m), vec![da, db])?)
        } else {
            let mut v = vec![crate::linalg::ONE];
            for g in &self.games {
                if let QuantumState::Pure(p) = &g.state {
                    v = crate::linalg::kron_vec(&v, p.amplitudes());
                }
            }
            let (w, _) = permute_subsystems(&v, &interleaved, &order)?;
            QuantumState::Pure(PureState::new(w, vec![da, db])?)
        };
        let mut table = BTreeMap::new();
        for (j, g) in self.games.iter().enumerate() {
            for q in 0..2u8 {
                let ra = embed_operator(g.alice[q as usize].matrix(), &a_dims, &[j])?;
                let rb = embed_operator(g.bob[q as usize].matrix(), &b_dims, &[j])?;
                table.insert(wildcard_key(Device::A, j + 1, q), Reflection::new(ra)?);
                table.insert(wildcard_key(Device::B, j + 1, q), Reflection::new(rb)?);
            }
        }
        SequentialStrategy::new(n, da, db, 1, initial, ReflectionSource::Table(table))
    }
}

/// Either representation; what strategy files decode to.
#[derive(Clone, Debug)]
pub enum AnyStrategy {
    Product(ProductStrategy),
    General(SequentialStrategy),
}

impl AnyStrategy {
    pub fn n(&self) -> usize {
        match self {
            AnyStrategy::Product(p) => p.n(),
            AnyStrategy::General(g) => g.n(),
        }
    }

    pub fn to_general(&self) -> Result<SequentialStrategy> {
        match self {
            AnyStrategy::Product(p) => p.materialize(),
            AnyStrategy::General(g) => Ok(g.clone()),
        }
    }

    /// Same strategy with `n` games (built-ins and products repeat the last game).
    pub fn with_games(&self, n: usize) -> Result<AnyStrategy> {
        match self {
            AnyStrategy::Product(p) => {
                let last = p
                    .games
                    .last()
                    .cloned()
                    .ok_or_else(|| SeqError::InvalidSpec("empty".into()))?;
                let mut games: Vec<_> = p.games.iter().take(n).cloned().collect();
                while games.len() < n {
                    games.push(last.clone());
                }
                Ok(AnyStrategy::Product(ProductStrategy { games }))
            }
            AnyStrategy::General(g) => Ok(AnyStrategy::General(g.with_games(n)?)),
        }
    }
}

/// Named built-ins: `ideal`, `classical_00`, `werner:p`.
pub fn builtin(name: &str, n: usize) -> Result<AnyStrategy> {
    let game = if name == "ideal" {
        ideal_strategy()
    } else if name == "classical_00" {
        always_zero_strategy()
    } else if let Some(p) = name.strip_prefix("werner:") {
        let p: f64 = p
            .parse()
            .map_err(|_| SeqError::InvalidSpec(format!("bad Werner parameter in '{name}'")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(SeqError::InvalidSpec(format!(
                "Werner parameter {p} outside [0, 1]"
            )));
        }
        werner_strategy(p)?
    } else {
        return Err(SeqError::InvalidSpec(format!(
            "unknown built-in strategy '{name}'"
        )));
    };
    Ok(AnyStrategy::Product(ProductStrategy::repeated(
        game,
        n.max(1),
    )))
}

/// JSON strategy file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategyFile {
    Builtin {
        builtin: String,
        #[serde(default = "one")]
        n: usize,
    },
    Product {
        games: Vec<SingleGameStrategy>,
    },
    Table {
        n: usize,
        /// `[dA, dB]` or `[dA, dB, dC]`.
        dims: Vec<usize>,
        initial_state: QuantumState,
        reflections: BTreeMap<String, Reflection>,
    },
}

fn one() -> usize {
    1
}

impl StrategyFile {
    pub fn load(&self) -> Result<AnyStrategy> {
        match self {
            StrategyFile::Builtin { builtin: name, n } => builtin(name, *n),
            StrategyFile::Product { games } => {
                for g in games {
                    g.check_dims()?;
                }
                Ok(AnyStrategy::Product(ProductStrategy {
                    games: games.clone(),
                }))
            }
            StrategyFile::Table {
                n,
                dims,
                initial_state,
                reflections,
            } => {
                if dims.len() < 2 || dims.len() > 3 {
                    return Err(SeqError::InvalidSpec(
                        "dims must list 2 or 3 registers".into(),
                    ));
                }
                let dc = dims.get(2).copied().unwrap_or(1);
                Ok(AnyStrategy::General(SequentialStrategy::new(
                    *n,
                    dims[0],
                    dims[1],
                    dc,
                    initial_state.clone(),
                    ReflectionSource::Table(reflections.clone()),
                )?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        assert!(builtin("ideal", 3).is_ok());
        assert!(builtin("classical_00", 2).is_ok());
        assert!(builtin("werner:0.1", 2).is_ok());
        assert!(builtin("werner:x", 2).is_err());
        assert!(builtin("nonsense", 2).is_err());
    }

    #[test]
    fn materialized_ideal_has_epr_pairs() {
        let s = ProductStrategy::repeated(ideal_strategy(), 2)
            .materialize()
            .unwrap();
        assert_eq!(s.register_dims(), vec![4, 4]);
        if let QuantumState::Pure(p) = s.initial() {
            let want = PureState::epr_pairs_split(2).unwrap();
            assert!(
                crate::linalg::matrix::vec_max_abs_diff(p.amplitudes(), want.amplitudes()) < 1e-15
            );
        } else {
            panic!("expected a pure state");
        }
    }

    #[test]
    fn missing_reflection_is_reported() {
        let s = SequentialStrategy::new(
            1,
            2,
            2,
            1,
            QuantumState::Pure(PureState::epr()),
            ReflectionSource::Table(BTreeMap::new()),
        )
        .unwrap();
        let err = s
            .reflection(Device::A, 1, &LocalTranscript::empty(), 0)
            .unwrap_err();
        assert!(matches!(err, SeqError::MissingReflection(k) if k == "A/1//0"));
    }

    #[test]
    fn strategy_file_variants() {
        let f: StrategyFile = serde_json::from_str(r#"{"builtin":"ideal","n":2}"#).unwrap();
        assert_eq!(f.load().unwrap().n(), 2);
        let table = format!(
            r#"{{"n":1,"dims":[2,2],"initial_state":{},"reflections":{{"A/1/*/0":[[[1,0],[0,0]],[[0,0],[-1,0]]]}}}}"#,
            serde_json::to_string(&PureState::epr()).unwrap()
        );
        let f: StrategyFile = serde_json::from_str(&table).unwrap();
        let s = f.load().unwrap().to_general().unwrap();
        assert!(s
            .reflection(Device::A, 1, &LocalTranscript::empty(), 0)
            .is_ok());
    }
}
