//! Experiment configuration: one TOML file plus `--set key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shapgame::features::FeatureSubset;
use shapgame::game_config::GameDescriptor;
use shapgame::solver::{log_schedule, Algorithm, Averaging, SolverConfig};
use shapgame::GameConfig;

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SHAPGAME_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "shapgame-out";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Master seed; every random stream of a run derives from it.
    pub seed: u64,
    pub game: GameDescriptor,
    pub solver: SolverSection,
    pub sgfi: SgfiSection,
    pub ssfi: SsfiSection,
    pub eval: EvalSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub algorithm: Algorithm,
    /// CFR iterations, or MCCFR timesteps.
    pub iterations: u64,
    pub eval_schedule: Schedule,
    pub averaging: Averaging,
    /// Visible features of the target player (`"CD"`, `"none"`, `"all"`);
    /// absent for no abstraction. Used by `solve` only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abstraction: Option<String>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            algorithm: Algorithm::ExternalMccfr,
            iterations: 1_000_000,
            eval_schedule: Schedule::Named(ScheduleName::Log),
            averaging: Averaging::default(),
            abstraction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Named(ScheduleName),
    Explicit(Vec<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleName {
    /// 1, 2, 5, 10, 20, 50, ... and the last iteration.
    Log,
    /// Only the last iteration.
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SgfiSection {
    pub replicates: u64,
}

impl Default for SgfiSection {
    fn default() -> Self {
        SgfiSection { replicates: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsfiSection {
    /// Strategy file to explain; solved inline from `[solver]` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<PathBuf>,
    pub selector: Selector,
    /// Explained features, e.g. `"CDO"` or `"all"`.
    pub features: String,
    pub t1: u64,
    pub t2: u64,
    /// Enumerate instead of sampling.
    pub exact: bool,
}

impl Default for SsfiSection {
    fn default() -> Self {
        SsfiSection {
            strategy: None,
            selector: Selector::default(),
            features: "all".to_string(),
            t1: 1_000_000,
            t2: 1_000_000,
            exact: false,
        }
    }
}

/// Picks the explained infoset by its exact key or by observable values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infoset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deck: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opponent: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Read `path` (if any), apply `overrides` in order and validate.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::input(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let config: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        config.game()?;
        config.solver_config()?;
        Ok(config)
    }

    pub fn game(&self) -> Result<GameConfig, CliError> {
        Ok(self.game.to_config()?)
    }

    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let s = &self.solver;
        let schedule = match &s.eval_schedule {
            Schedule::Named(ScheduleName::Log) => log_schedule(s.iterations),
            Schedule::Named(ScheduleName::Final) => Vec::new(),
            Schedule::Explicit(points) => points.clone(),
        };
        let mut config = SolverConfig::new(s.algorithm, s.iterations, self.seed).with_schedule(schedule);
        config.averaging = s.averaging;
        config.validate()?;
        Ok(config)
    }

    /// The `[solver] abstraction` subset, resolved against the game's features.
    pub fn abstraction(&self) -> Result<Option<FeatureSubset>, CliError> {
        let Some(text) = &self.solver.abstraction else {
            return Ok(None);
        };
        let game = self.game()?;
        let model = game.require_features()?;
        Ok(Some(FeatureSubset::parse(text, model.feature_names())?))
    }

    /// Output directory: the flag, then `[output] dir`, then the environment,
    /// then the built-in default.
    pub fn resolve_out_dir(&mut self, flag: Option<PathBuf>) -> PathBuf {
        let dir = flag
            .or_else(|| self.output.dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        self.output.dir = Some(dir.clone());
        dir
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }
}

/// Apply `section.key=value`. The value is parsed as a TOML value and falls
/// back to a bare string.
fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override \"{item}\" is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("bad override key \"{path}\"")));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, parents) = keys.split_last().expect("non-empty key path");
    let mut node = table;
    for key in parents {
        let entry = node
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("\"{key}\" in \"{path}\" is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use shapgame::game_config::GameName;

    #[test]
    fn defaults_round_trip_through_toml() {
        let config = ExperimentConfig::default();
        let text = config.to_toml();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn overrides_are_typed() {
        let c = ExperimentConfig::load(
            None,
            &[
                "game.name=kuhn".into(),
                "solver.algorithm=vanilla_cfr".into(),
                "solver.iterations=10".into(),
                "solver.eval_schedule=[2, 5]".into(),
                "ssfi.selector.hand=[1,2,4]".into(),
                "ssfi.features=CDO".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.game.name, GameName::Kuhn);
        assert_eq!(c.solver.iterations, 10);
        assert_eq!(c.solver.eval_schedule, Schedule::Explicit(vec![2, 5]));
        assert_eq!(c.ssfi.selector.hand, Some(vec![1, 2, 4]));
        assert_eq!(c.ssfi.features, "CDO");
        assert_eq!(c.solver_config().unwrap().checkpoints(), vec![2, 5, 10]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for bad in ["solver.iteration=5", "colour=1", "game.k=1", "solver.iterations=0"] {
            let err = ExperimentConfig::load(None, &[bad.into()]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn out_dir_precedence() {
        let mut c = ExperimentConfig::default();
        c.output.dir = Some("from-config".into());
        assert_eq!(c.resolve_out_dir(Some("flag".into())), PathBuf::from("flag"));
        let mut c = ExperimentConfig::default();
        c.output.dir = Some("from-config".into());
        assert_eq!(c.resolve_out_dir(None), PathBuf::from("from-config"));
    }
}
