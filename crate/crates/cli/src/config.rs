//! File configuration and its merge with command-line flags.
//!
//! Precedence: flags, then the file named by `--config` (or `GSR_CONFIG`),
//! then built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use scenebench_core::agent::{AgentSpec, RemoteConfig};
use scenebench_core::bench::{FlipMode, Level, Suite};
use scenebench_core::data::AugmentationPlan;
use scenebench_core::engine::EngineConfig;
use scenebench_core::harness::Thresholds;
use scenebench_core::reward::RewardWeights;

/// Everything a config file may set. Unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub bench: BenchSection,
    pub remote: RemoteConfig,
    pub reward: RewardWeights,
    pub engine: EngineConfig,
    pub thresholds: Thresholds,
    pub datagen: DatagenSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub suites: Vec<Suite>,
    pub levels: Vec<Level>,
    pub seeds: u64,
    pub trials: u32,
    pub noise: Vec<f64>,
    pub agent: AgentSpec,
    pub seed: u64,
    /// Worker threads; 0 means one per available core.
    pub parallel: usize,
    pub feedback: bool,
    pub flip_mode: FlipMode,
    pub noise_per_episode: bool,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            suites: Suite::ALL.to_vec(),
            levels: Level::ALL.to_vec(),
            seeds: 20,
            trials: 10,
            noise: vec![0.0],
            agent: AgentSpec::Oracle,
            seed: 0,
            parallel: 0,
            feedback: true,
            flip_mode: FlipMode::Predicate,
            noise_per_episode: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatagenSection {
    pub horizons: Vec<usize>,
    pub max_actions: usize,
    pub plan: AugmentationPlan,
    pub rephraser_url: Option<String>,
}

impl Default for DatagenSection {
    fn default() -> Self {
        let d = scenebench_core::harness::DatagenConfig::default();
        Self {
            horizons: d.horizons,
            max_actions: d.max_actions,
            plan: d.plan,
            rephraser_url: d.rephraser_url,
        }
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// Loads `explicit`, else `GSR_CONFIG`, else returns the defaults.
    pub fn resolve(explicit: Option<&PathBuf>) -> Result<(Self, Option<PathBuf>)> {
        let path = explicit
            .cloned()
            .or_else(|| std::env::var_os("GSR_CONFIG").map(PathBuf::from));
        match path {
            Some(p) => Ok((Self::load(&p)?, Some(p))),
            None => Ok((Self::default(), None)),
        }
    }
}

/// `all` or a comma list.
pub fn parse_list<T>(s: &str, all: &[T]) -> Result<Vec<T>>
where
    T: std::str::FromStr + Clone,
    T::Err: std::fmt::Display,
{
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| anyhow::anyhow!("{e}")))
        .collect()
}

pub fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("`{p}` is not a number"))
        })
        .collect()
}

/// `λ_s,λ_g,λ_t`.
pub fn parse_lambdas(s: &str) -> Result<[f64; 3]> {
    let v = parse_floats(s)?;
    match v.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => bail!("--weights expects three comma-separated values, got {}", v.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("[bench]\nseeds = 2\n").is_ok());
        assert!(toml::from_str::<FileConfig>("[bench]\nsedes = 2\n").is_err());
        assert!(toml::from_str::<FileConfig>("[nonsense]\n").is_err());
    }

    #[test]
    fn file_sections_parse() {
        let cfg: FileConfig = toml::from_str(
            r#"
            [bench]
            suites = ["sas"]
            noise = [0.0, 0.05]
            agent = "remote:tcp://127.0.0.1:9000"
            [reward]
            alpha = 0.25
            [engine.extraction]
            inside_threshold = 0.6
            "#,
        )
        .unwrap();
        assert_eq!(cfg.bench.suites, vec![Suite::Sas]);
        assert_eq!(cfg.reward.alpha, 0.25);
        assert_eq!(cfg.reward.beta, 1.0);
        assert_eq!(cfg.engine.extraction.inside_threshold, 0.6);
        assert!(matches!(cfg.bench.agent, AgentSpec::Remote(_)));
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("all", &Suite::ALL).unwrap().len(), 3);
        assert_eq!(parse_list("sod,gcg", &Suite::ALL).unwrap(), vec![Suite::Sod, Suite::Gcg]);
        assert!(parse_list("sod,xyz", &Suite::ALL).is_err());
        assert_eq!(parse_floats("0,0.05,0.10").unwrap(), vec![0.0, 0.05, 0.10]);
        assert!(parse_lambdas("1,2").is_err());
    }
}
