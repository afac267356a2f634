use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::sa::StepSchedule;

/// Which part of the joint action an agent controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Inventory,
    Recommendation,
    /// Single agent emitting orders followed by recommendations.
    Merged,
}

impl AgentRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentRole::Inventory => "inventory",
            AgentRole::Recommendation => "recommendation",
            AgentRole::Merged => "merged",
        }
    }
}

/// Training algorithm: multi/single timescale, multi/single agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Algorithm {
    #[default]
    #[serde(rename = "MTMA")]
    Mtma,
    #[serde(rename = "STMA_F")]
    StmaF,
    #[serde(rename = "STMA_S")]
    StmaS,
    #[serde(rename = "STSA_F")]
    StsaF,
    #[serde(rename = "STSA_S")]
    StsaS,
}

/// Step-size schedule consumed by an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timescale {
    Fast,
    Slow,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Mtma,
        Algorithm::StmaF,
        Algorithm::StmaS,
        Algorithm::StsaF,
        Algorithm::StsaS,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Mtma => "MTMA",
            Algorithm::StmaF => "STMA_F",
            Algorithm::StmaS => "STMA_S",
            Algorithm::StsaF => "STSA_F",
            Algorithm::StsaS => "STSA_S",
        }
    }

    pub fn is_single_agent(&self) -> bool {
        matches!(self, Algorithm::StsaF | Algorithm::StsaS)
    }

    /// Schedule used by `role`; `fast_agent` receives the fast schedule under MTMA.
    pub fn timescale(&self, role: AgentRole, fast_agent: AgentRole) -> Timescale {
        match self {
            Algorithm::Mtma => {
                if role == fast_agent {
                    Timescale::Fast
                } else {
                    Timescale::Slow
                }
            }
            Algorithm::StmaF | Algorithm::StsaF => Timescale::Fast,
            Algorithm::StmaS | Algorithm::StsaS => Timescale::Slow,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_uppercase().replace('-', "_");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == norm)
            .ok_or_else(|| LabError::config("algorithm", format!("unknown algorithm {s:?}")))
    }
}

/// Hidden layer widths of every network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkWidths {
    pub inventory: Vec<usize>,
    pub recommendation: Vec<usize>,
    pub merged: Vec<usize>,
    pub critic: Vec<usize>,
}

impl Default for NetworkWidths {
    fn default() -> Self {
        Self {
            inventory: vec![128; 3],
            recommendation: vec![384; 3],
            merged: vec![512; 3],
            critic: vec![512; 3],
        }
    }
}

impl NetworkWidths {
    pub fn desk() -> Self {
        Self {
            inventory: vec![32, 32],
            recommendation: vec![32, 32],
            merged: vec![64, 64],
            critic: vec![64, 64],
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("widths.inventory", &self.inventory),
            ("widths.recommendation", &self.recommendation),
            ("widths.merged", &self.merged),
            ("widths.critic", &self.critic),
        ] {
            if w.contains(&0) {
                return Err(LabError::config(name, "hidden widths must be positive"));
            }
        }
        Ok(())
    }
}

/// Trainer hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub iterations: usize,
    pub num_minibatches: usize,
    pub batch_size: usize,
    pub episodes_per_iter: usize,
    pub clip: f64,
    pub discount: f64,
    pub gae_lambda: f64,
    pub critic_schedule: StepSchedule,
    pub fast_schedule: StepSchedule,
    pub slow_schedule: StepSchedule,
    pub fast_agent: AgentRole,
    pub normalize_advantages: bool,
    /// Rescale each gradient to at most this Euclidean norm before stepping.
    pub max_grad_norm: Option<f64>,
    /// Multiplies rewards before they reach the learners; evaluation is unscaled.
    pub reward_scale: f64,
    /// Append `t / T` to every network input.
    pub time_feature: bool,
    pub init_log_std: f64,
    /// Initial output bias of the order units.
    pub init_order_mean: f64,
    pub widths: NetworkWidths,
    pub eval_every: usize,
    pub eval_episodes: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        let iterations = 300;
        Self {
            iterations,
            num_minibatches: 4,
            batch_size: 512,
            episodes_per_iter: 8,
            clip: 0.2,
            discount: 0.99,
            gae_lambda: 0.95,
            critic_schedule: StepSchedule::new(1e-3, 0.51, iterations),
            fast_schedule: StepSchedule::new(1e-3, 0.75, iterations),
            slow_schedule: StepSchedule::new(2e-5, 0.99, iterations),
            fast_agent: AgentRole::Inventory,
            normalize_advantages: false,
            max_grad_norm: None,
            reward_scale: 1.0,
            time_feature: false,
            init_log_std: crate::nn::LOG_STD_INIT,
            init_order_mean: 0.0,
            widths: NetworkWidths::default(),
            eval_every: 10,
            eval_episodes: 8,
        }
    }
}

impl TrainerConfig {
    /// Small networks and calibrated step sizes for single-machine runs.
    pub fn desk() -> Self {
        let iterations = 300;
        Self {
            iterations,
            num_minibatches: 4,
            batch_size: 64,
            episodes_per_iter: 4,
            critic_schedule: StepSchedule::new(0.2, 0.51, iterations),
            fast_schedule: StepSchedule::new(0.05, 0.75, iterations),
            slow_schedule: StepSchedule::new(0.002, 0.99, iterations),
            normalize_advantages: true,
            max_grad_norm: Some(5.0),
            reward_scale: 0.01,
            time_feature: true,
            init_order_mean: 1.0,
            widths: NetworkWidths::desk(),
            eval_every: 1,
            eval_episodes: 4,
            ..Self::default()
        }
    }

    /// Rebuilds the schedules so their horizon matches `iterations`.
    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        for s in [&mut self.critic_schedule, &mut self.fast_schedule, &mut self.slow_schedule] {
            s.horizon = iterations.max(1);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_minibatches == 0 {
            return Err(LabError::config("num_minibatches", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(LabError::config("batch_size", "must be positive"));
        }
        if self.episodes_per_iter == 0 {
            return Err(LabError::config("episodes_per_iter", "must be positive"));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(LabError::config("clip", format!("must lie in (0,1), got {}", self.clip)));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(LabError::config("discount", format!("must lie in (0,1], got {}", self.discount)));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(LabError::config("gae_lambda", format!("must lie in [0,1], got {}", self.gae_lambda)));
        }
        if let Some(g) = self.max_grad_norm {
            if !(g.is_finite() && g > 0.0) {
                return Err(LabError::config("max_grad_norm", "must be positive"));
            }
        }
        if !(self.reward_scale.is_finite() && self.reward_scale > 0.0) {
            return Err(LabError::config("reward_scale", "must be positive"));
        }
        if !(crate::nn::LOG_STD_MIN..=crate::nn::LOG_STD_MAX).contains(&self.init_log_std) {
            return Err(LabError::config("init_log_std", "outside the log-std clamp range"));
        }
        if !self.init_order_mean.is_finite() {
            return Err(LabError::config("init_order_mean", "must be finite"));
        }
        if self.fast_agent == AgentRole::Merged {
            return Err(LabError::config("fast_agent", "must be inventory or recommendation"));
        }
        if self.eval_every == 0 || self.eval_episodes == 0 {
            return Err(LabError::config("eval_every", "evaluation cadence and episodes must be positive"));
        }
        for s in [&self.critic_schedule, &self.fast_schedule, &self.slow_schedule] {
            s.validate()?;
        }
        let (p0, p1, p2) = (
            self.critic_schedule.exponent,
            self.fast_schedule.exponent,
            self.slow_schedule.exponent,
        );
        if !(0.5 < p1 && p1 < p2 && p2 <= 1.0) {
            return Err(LabError::config(
                "fast_schedule.exponent",
                format!("need 0.5 < fast ({p1}) < slow ({p2}) <= 1"),
            ));
        }
        if p0 > p1 {
            return Err(LabError::config(
                "critic_schedule.exponent",
                format!("critic exponent {p0} must not exceed the fast exponent {p1}"),
            ));
        }
        self.widths.validate()
    }
}
