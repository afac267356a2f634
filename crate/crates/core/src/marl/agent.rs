use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{AgentRole, NetworkWidths};
use crate::env::{EnvConfig, EnvState, JointAction};
use crate::error::{LabError, Result};
use crate::nn::{GaussianHead, Mlp, SquashKind};

/// One policy together with the slice of the joint action it controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub role: AgentRole,
    pub policy: GaussianHead,
    /// One squash per output.
    pub squash: Vec<SquashKind>,
    pub hidden: Vec<usize>,
}

fn order_squash(env: &EnvConfig) -> SquashKind {
    let cap = env.order_cap();
    if env.demand_model.is_discrete() {
        SquashKind::OrderIntegerBox { cap }
    } else {
        SquashKind::OrderContinuousBox { cap }
    }
}

/// Network input length: the observation, plus one slot for `t / T` when enabled.
pub fn input_len(env: &EnvConfig, time_feature: bool) -> usize {
    env.observation_len() + usize::from(time_feature)
}

/// Observation fed to every network.
pub fn policy_input(state: &EnvState, env: &EnvConfig, time_feature: bool) -> Vec<f64> {
    let mut x = crate::env::observe(state, env);
    if time_feature {
        x.push(state.t as f64 / env.horizon as f64);
    }
    x
}

fn widths(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut w = Vec::with_capacity(hidden.len() + 2);
    w.push(input);
    w.extend_from_slice(hidden);
    w.push(output);
    w
}

/// Initialization choices shared by all policies of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyInit {
    pub time_feature: bool,
    pub log_std: f64,
    /// Output bias of the order units.
    pub order_mean: f64,
}

impl Default for PolicyInit {
    fn default() -> Self {
        Self {
            time_feature: false,
            log_std: crate::nn::LOG_STD_INIT,
            order_mean: 0.0,
        }
    }
}

impl AgentSpec {
    pub fn new<R: Rng + ?Sized>(
        role: AgentRole,
        env: &EnvConfig,
        hidden: &[usize],
        init: PolicyInit,
        rng: &mut R,
    ) -> Result<Self> {
        let n = env.num_products;
        let nm = n * env.num_customers;
        let squash = match role {
            AgentRole::Inventory => vec![order_squash(env); n],
            AgentRole::Recommendation => vec![SquashKind::RecUnitInterval; nm],
            AgentRole::Merged => {
                let mut s = vec![order_squash(env); n];
                s.extend(std::iter::repeat_n(SquashKind::RecUnitInterval, nm));
                s
            }
        };
        let mut policy = GaussianHead::new(&widths(input_len(env, init.time_feature), hidden, squash.len()), rng)?;
        policy.log_std.iter_mut().for_each(|v| *v = init.log_std);
        if role != AgentRole::Recommendation && init.order_mean != 0.0 {
            for k in 0..n {
                policy.mean.set_output_bias(k, init.order_mean)?;
            }
        }
        Ok(Self {
            role,
            policy,
            squash,
            hidden: hidden.to_vec(),
        })
    }

    pub fn action_dim(&self) -> usize {
        self.squash.len()
    }
}

/// Inventory and recommendation agents with their configured widths.
pub fn make_multi_agent<R: Rng + ?Sized>(
    env: &EnvConfig,
    widths: &NetworkWidths,
    init: PolicyInit,
    rng: &mut R,
) -> Result<Vec<AgentSpec>> {
    Ok(vec![
        AgentSpec::new(AgentRole::Inventory, env, &widths.inventory, init, rng)?,
        AgentSpec::new(AgentRole::Recommendation, env, &widths.recommendation, init, rng)?,
    ])
}

/// One agent emitting `N` orders followed by `N * M` recommendations.
pub fn make_single_agent<R: Rng + ?Sized>(
    env: &EnvConfig,
    widths: &NetworkWidths,
    init: PolicyInit,
    rng: &mut R,
) -> Result<AgentSpec> {
    AgentSpec::new(AgentRole::Merged, env, &widths.merged, init, rng)
}

/// Value network `R^input -> R`.
pub fn make_critic<R: Rng + ?Sized>(env: &EnvConfig, hidden: &[usize], time_feature: bool, rng: &mut R) -> Result<Mlp> {
    Mlp::new(&widths(input_len(env, time_feature), hidden, 1), rng)
}

/// Scatters per-agent squashed actions into a joint action.
pub fn assemble_action(env: &EnvConfig, agents: &[AgentSpec], actions: &[Vec<f64>]) -> Result<JointAction> {
    if agents.len() != actions.len() {
        return Err(LabError::Shape(format!("{} actions for {} agents", actions.len(), agents.len())));
    }
    let n = env.num_products;
    let m = env.num_customers;
    let mut joint = JointAction::zeros(env);
    let mut filled = (false, false);
    for (agent, a) in agents.iter().zip(actions) {
        if a.len() != agent.action_dim() {
            return Err(LabError::Shape(format!("{} action has length {}", agent.role.as_str(), a.len())));
        }
        let (orders, recs): (&[f64], &[f64]) = match agent.role {
            AgentRole::Inventory => (a, &[]),
            AgentRole::Recommendation => (&[], a),
            AgentRole::Merged => a.split_at(n),
        };
        if !orders.is_empty() {
            joint.orders.copy_from_slice(orders);
            filled.0 = true;
        }
        if !recs.is_empty() {
            for i in 0..n {
                joint.recommendations[i].copy_from_slice(&recs[i * m..(i + 1) * m]);
            }
            filled.1 = true;
        }
    }
    if filled != (true, true) {
        return Err(LabError::Shape("agents do not cover the whole joint action".into()));
    }
    Ok(joint)
}
