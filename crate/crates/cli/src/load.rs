use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use qverify_core::chsh::SingleGameStrategy;
use qverify_core::linalg::{CMatrix, QuantumState};
use qverify_core::sequential::{builtin, AnyStrategy, ProductStrategy, StrategyFile};
use qverify_core::xz::{SignedPauli, StabilizerSpec};

pub fn json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// A strategy argument is either a file or a built-in name such as
/// `werner:0.9`.
pub fn strategy(arg: &str) -> Result<AnyStrategy> {
    let path = Path::new(arg);
    if !path.exists() {
        return builtin(arg, 1).map_err(|e| anyhow!("{arg}: not a file, and {e}"));
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
    if let Ok(single) = serde_json::from_str::<SingleGameStrategy>(&text) {
        return Ok(AnyStrategy::Product(ProductStrategy::repeated(single, 1)));
    }
    let file: StrategyFile = serde_json::from_str(&text).with_context(|| format!("parsing {arg}"))?;
    Ok(file.load()?)
}

pub fn single_game(arg: &str) -> Result<SingleGameStrategy> {
    match strategy(arg)? {
        AnyStrategy::Product(p) => match p.games.first() {
            Some(g) => Ok(g.clone()),
            None => bail!("{arg} lists no games"),
        },
        AnyStrategy::General(_) => bail!("{arg} is a sequential table, not a single-game strategy"),
    }
}

/// Stabilizer file: `{"n": 2, "generators": ["+XX", "+ZZ"], "rotations": [...]}`.
#[derive(Deserialize)]
struct StabilizerFile {
    n: usize,
    generators: Vec<String>,
    #[serde(default)]
    rotations: Vec<CMatrix>,
}

pub fn stabilizer(path: &Path) -> Result<(StabilizerSpec, Vec<CMatrix>)> {
    let f: StabilizerFile = json(path)?;
    let generators = f
        .generators
        .iter()
        .map(|g| g.parse::<SignedPauli>().map_err(|e| anyhow!("generator '{g}': {e}")))
        .collect::<Result<Vec<_>>>()?;
    Ok((StabilizerSpec::new(f.n, generators)?, f.rotations))
}

pub fn state(path: &Path) -> Result<QuantumState> {
    json(path)
}
