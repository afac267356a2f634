//! TOML run configuration.
//!
//! ```toml
//! preset = "desk"            # or "full"; supplies every default below
//!
//! [env]
//! num_products = 2
//! num_customers = 5
//!
//! [trainer]
//! iterations = 300
//! fast_schedule = { initial = 0.05, exponent = 0.75, horizon = 300 }
//!
//! [experiment]
//! name = "baseline"
//! scenario = "cooperative"
//! algorithm = "MTMA"
//! seeds = [0, 1, 2]
//! ```
//!
//! Tables are merged key by key over the preset, so a file only lists what
//! it changes. Schedule horizons follow `trainer.iterations` unless given.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, Perturbation};
use crate::error::{LabError, Result};
use crate::harness::{ExperimentSpec, Scenario};
use crate::marl::{Algorithm, TrainerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Desk,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    pub scenario: Scenario,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub eval_seed: u64,
    pub window: usize,
    #[serde(default)]
    pub warm_start: Option<PathBuf>,
    #[serde(default)]
    pub perturbations: Vec<Perturbation>,
}

/// Parsed configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    pub preset: Preset,
    pub env: EnvConfig,
    pub trainer: TrainerConfig,
    pub experiment: ExperimentSection,
}

impl LabConfig {
    pub fn preset(preset: Preset) -> Self {
        let (env, trainer) = match preset {
            Preset::Desk => (EnvConfig::default(), TrainerConfig::desk()),
            Preset::Full => (EnvConfig::full_scale(), TrainerConfig::default()),
        };
        let spec = ExperimentSpec::desk(Scenario::Cooperative, Algorithm::Mtma, (0..20).collect());
        Self {
            preset,
            env,
            trainer,
            experiment: ExperimentSection {
                name: "run".into(),
                scenario: spec.scenario,
                algorithm: spec.algorithm,
                seeds: spec.seeds,
                eval_seed: spec.eval_seed,
                window: spec.window,
                warm_start: None,
                perturbations: Vec::new(),
            },
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(text)?;
        let preset = match user.get("preset") {
            None => Preset::default(),
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|_| LabError::config("preset", format!("unknown preset {v}")))?,
        };
        let base = Self::preset(preset);
        let trainer = user.get("trainer").and_then(|t| t.as_table());
        let iterations_given = trainer.and_then(|t| t.get("iterations")).and_then(|v| v.as_integer());
        let horizon_given = |name: &str| {
            trainer
                .and_then(|t| t.get(name))
                .and_then(|s| s.as_table())
                .is_some_and(|s| s.contains_key("horizon"))
        };
        let explicit: Vec<bool> = ["critic_schedule", "fast_schedule", "slow_schedule"]
            .iter()
            .map(|n| horizon_given(n))
            .collect();
        let mut merged = toml::Table::try_from(&base)?;
        merge(&mut merged, user);
        let mut cfg: LabConfig = toml::Value::Table(merged).try_into()?;
        if let Some(n) = iterations_given {
            // Re-anchor horizons the user did not set explicitly.
            let t = &mut cfg.trainer;
            for (s, given) in [&mut t.critic_schedule, &mut t.fast_schedule, &mut t.slow_schedule]
                .into_iter()
                .zip(explicit)
            {
                if !given {
                    s.horizon = usize::try_from(n).unwrap_or(1).max(1);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec().validate()
    }

    pub fn spec(&self) -> ExperimentSpec {
        let e = &self.experiment;
        ExperimentSpec {
            name: e.name.clone(),
            scenario: e.scenario,
            algorithm: e.algorithm,
            env: self.env.clone(),
            trainer: self.trainer.clone(),
            perturbations: e.perturbations.clone(),
            seeds: e.seeds.clone(),
            eval_seed: e.eval_seed,
            window: e.window,
            warm_start: e.warm_start.clone(),
        }
    }
}

fn merge(base: &mut toml::Table, user: toml::Table) {
    for (k, v) in user {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => merge(b, u),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_desk_preset() {
        let cfg = LabConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, LabConfig::preset(Preset::Desk));
    }

    #[test]
    fn partial_tables_merge_over_the_preset() {
        let cfg = LabConfig::from_toml_str(
            r#"
            [env]
            num_customers = 7
            [env.econ]
            holding_cost = 0.2
            [trainer]
            iterations = 40
            fast_schedule = { initial = 0.1, exponent = 0.7, horizon = 9 }
            [experiment]
            scenario = "isolated"
            algorithm = "STMA_S"
            seeds = [4, 5]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.env.num_customers, 7);
        assert_eq!(cfg.env.econ.holding_cost, 0.2);
        assert_eq!(cfg.env.econ.sell_price, 2.0);
        assert_eq!(cfg.trainer.iterations, 40);
        assert_eq!(cfg.trainer.fast_schedule.horizon, 9);
        assert_eq!(cfg.trainer.slow_schedule.horizon, 40);
        assert_eq!(cfg.trainer.batch_size, TrainerConfig::desk().batch_size);
        assert_eq!(cfg.spec().seeds, vec![4, 5]);
        assert_eq!(cfg.spec().scenario, Scenario::Isolated);
    }

    #[test]
    fn round_trip_through_toml() {
        let cfg = LabConfig::preset(Preset::Full);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(LabConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(LabConfig::from_toml_str("[trainer]\nclip = 1.5").is_err());
        assert!(LabConfig::from_toml_str("[trainer]\nbogus = 1").is_err());
        assert!(LabConfig::from_toml_str("preset = \"huge\"").is_err());
        assert!(LabConfig::from_toml_str("[experiment]\nscenario = \"solo\"").is_err());
        assert!(LabConfig::from_toml_str("[experiment]\nseeds = [1, 1]").is_err());
    }
}
