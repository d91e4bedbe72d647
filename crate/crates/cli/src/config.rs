//! Problem sources, start points and the resolved run configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gapvi::diagnostics::SampleRegion;
use gapvi::homotopy::HomotopyConfig;
use gapvi::library::{self, BimatrixGame, TrafficNetwork};
use gapvi::prox::{CoVariant, SolverConfig};
use gapvi::VIProblem;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "GAPVI_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSource {
    /// `name[:param...]` as accepted by `gapvi::library::builtin`.
    Builtin(String),
    /// A `.tep` traffic network, or a bimatrix game in text form.
    File(PathBuf),
}

impl ProblemSource {
    pub fn load(&self) -> Result<VIProblem> {
        match self {
            ProblemSource::Builtin(spec) => Ok(library::builtin(spec)?),
            ProblemSource::File(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("file");
                if path.extension().is_some_and(|e| e == "tep") {
                    Ok(TrafficNetwork::parse_tep(&text)?.to_problem(name))
                } else {
                    Ok(library::make_bimatrix(&BimatrixGame::parse(&text)?).renamed(name))
                }
            }
        }
    }

    /// Bytes that identify the problem: the spec string or the file contents.
    fn identity(&self) -> Result<Vec<u8>> {
        match self {
            ProblemSource::Builtin(spec) => Ok(spec.as_bytes().to_vec()),
            ProblemSource::File(path) => std::fs::read(path).with_context(|| format!("reading {}", path.display())),
        }
    }
}

/// Parses a start point: `barycenter`, `random`, or comma-separated entries
/// that may be fractions such as `1/3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    Barycenter,
    Random,
    Explicit(Vec<f64>),
}

impl std::str::FromStr for StartSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "barycenter" => Ok(StartSpec::Barycenter),
            "random" => Ok(StartSpec::Random),
            list => list.split(',').map(parse_entry).collect::<Result<_>>().map(StartSpec::Explicit),
        }
    }
}

fn parse_entry(s: &str) -> Result<f64> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let (num, den): (f64, f64) = (num.trim().parse()?, den.trim().parse()?);
            if den == 0.0 {
                bail!("zero denominator in `{s}`");
            }
            num / den
        }
        None => s.parse().with_context(|| format!("bad number `{s}`"))?,
    };
    if !value.is_finite() {
        bail!("non-finite entry `{s}`");
    }
    Ok(value)
}

impl StartSpec {
    pub fn resolve(&self, problem: &VIProblem, seed: u64) -> Result<DVector<f64>> {
        let set = problem.feasible_set();
        match self {
            StartSpec::Barycenter => Ok(set.reference_point()),
            StartSpec::Random => Ok(SampleRegion::for_problem(problem, 1, seed).sample(set)?.remove(0)),
            StartSpec::Explicit(v) => {
                if v.len() != problem.dim() {
                    bail!("x0 has {} entries, `{}` has dimension {}", v.len(), problem.name(), problem.dim());
                }
                Ok(DVector::from_column_slice(v))
            }
        }
    }
}

/// The seed after the environment override.
pub fn effective_seed(configured: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().with_context(|| format!("{SEED_ENV}=`{s}` is not an unsigned integer")),
        Err(std::env::VarError::NotPresent) => Ok(configured),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Pg,
    Homotopy,
    Co,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoSettings {
    pub variant: CoVariant,
    /// Stop once `|F(x)|` reaches this value.
    pub tol: f64,
}

/// Everything a solve depends on, after defaults are filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub solver: SolverKind,
    pub pg: SolverConfig,
    pub homotopy: Option<HomotopyConfig>,
    pub co: Option<CoSettings>,
    pub x0_spec: Option<StartSpec>,
    pub x0: Vec<f64>,
    pub seed: u64,
}

impl RunConfig {
    /// Git-style content hash: SHA-256 of `blob <len>\0<inputs>`, where the
    /// inputs are the problem identity followed by this config as JSON.
    pub fn content_hash(&self) -> Result<String> {
        let mut content = self.problem.identity()?;
        content.push(b'\n');
        content.extend(serde_json::to_vec(self)?);
        let mut hasher = Sha256::new();
        hasher.update(format!("blob {}\0", content.len()).as_bytes());
        hasher.update(&content);
        Ok(hex::encode(hasher.finalize()))
    }
}

pub fn ensure_parent_exists(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => bail!("output directory {} does not exist", dir.display()),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_specs() {
        assert_eq!("barycenter".parse::<StartSpec>().unwrap(), StartSpec::Barycenter);
        match "1/3, 0.5,-2".parse::<StartSpec>().unwrap() {
            StartSpec::Explicit(v) => assert_eq!(v, vec![1.0 / 3.0, 0.5, -2.0]),
            other => panic!("{other:?}"),
        }
        assert!("1/0".parse::<StartSpec>().is_err());
        assert!("a,b".parse::<StartSpec>().is_err());
    }

    #[test]
    fn explicit_start_must_match_dimension() {
        let p = library::example_1_2();
        assert!(StartSpec::Explicit(vec![0.1, 0.2]).resolve(&p, 0).is_err());
        assert_eq!(StartSpec::Explicit(vec![0.4]).resolve(&p, 0).unwrap()[0], 0.4);
    }

    #[test]
    fn hash_depends_on_config() {
        let p = library::example_1_2();
        let mut cfg = RunConfig {
            problem: ProblemSource::Builtin("example1_2".into()),
            solver: SolverKind::Pg,
            pg: SolverConfig::new(1.0, 0.1),
            homotopy: None,
            co: None,
            x0_spec: None,
            x0: vec![0.4],
            seed: 0,
        };
        let a = cfg.content_hash().unwrap();
        assert_eq!(a.len(), 64);
        assert_eq!(a, cfg.content_hash().unwrap());
        cfg.x0 = StartSpec::Barycenter.resolve(&p, 0).unwrap().as_slice().to_vec();
        assert_ne!(a, cfg.content_hash().unwrap());
    }
}
