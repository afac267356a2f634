use rand::Rng;

use super::agent::{assemble_action, policy_input, AgentSpec};
use crate::env::Simulator;
use crate::error::{LabError, Result};
use crate::harness::{departmental_reward, Scenario};
use crate::nn::Mlp;

/// Transitions of one iteration, stored column-wise.
///
/// Index `k` of every column refers to the same transition; per-agent
/// columns are indexed `[agent][k]` and per-critic columns `[critic][k]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    /// Network input at the pre-decision state.
    pub obs: Vec<Vec<f64>>,
    pub raw_actions: Vec<Vec<Vec<f64>>>,
    /// Log-densities under the collecting policy.
    pub logp: Vec<Vec<f64>>,
    /// Reward seen by each agent.
    pub rewards: Vec<Vec<f64>>,
    pub platform_reward: Vec<f64>,
    /// Critic values at `obs` under the collecting critic.
    pub values: Vec<Vec<f64>>,
    /// True on the last period of an episode.
    pub dones: Vec<bool>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.len();
        let ok = self.platform_reward.len() == n
            && self.dones.len() == n
            && self.raw_actions.iter().all(|c| c.len() == n)
            && self.logp.iter().all(|c| c.len() == n)
            && self.rewards.iter().all(|c| c.len() == n)
            && self.values.iter().all(|c| c.len() == n);
        if ok {
            Ok(())
        } else {
            Err(LabError::Shape("rollout buffer columns have different lengths".into()))
        }
    }
}

/// Runs `episodes` full episodes with stochastic actions from every agent.
///
/// `sim` is reset from `rng` at the start of each episode. Critic `c` is
/// evaluated at every pre-decision state.
pub fn collect_rollouts<R: Rng + ?Sized>(
    sim: &mut Simulator,
    agents: &[AgentSpec],
    critics: &[Mlp],
    scenario: Scenario,
    episodes: usize,
    time_feature: bool,
    rng: &mut R,
) -> Result<RolloutBuffer> {
    let env = sim.config().clone();
    let k = agents.len();
    let cap = episodes * env.horizon;
    let mut buf = RolloutBuffer {
        obs: Vec::with_capacity(cap),
        raw_actions: vec![Vec::with_capacity(cap); k],
        logp: vec![Vec::with_capacity(cap); k],
        rewards: vec![Vec::with_capacity(cap); k],
        platform_reward: Vec::with_capacity(cap),
        values: vec![Vec::with_capacity(cap); critics.len()],
        dones: Vec::with_capacity(cap),
    };
    for _ in 0..episodes {
        sim.reset(rng);
        while !sim.done() {
            let x = policy_input(sim.state(), &env, time_feature);
            let mut actions = Vec::with_capacity(k);
            for (a, agent) in agents.iter().enumerate() {
                let s = agent.policy.sample_and_squash(&x, rng, &agent.squash, false)?;
                buf.raw_actions[a].push(s.raw);
                buf.logp[a].push(s.logp);
                actions.push(s.action);
            }
            for (c, critic) in critics.iter().enumerate() {
                buf.values[c].push(critic.predict(&x)?[0]);
            }
            let joint = assemble_action(&env, agents, &actions)?;
            let out = sim.step(&joint, rng)?;
            for (a, agent) in agents.iter().enumerate() {
                buf.rewards[a].push(departmental_reward(&out, &env.econ, scenario, agent.role)?);
            }
            buf.platform_reward.push(out.reward);
            buf.obs.push(x);
            buf.dones.push(sim.done());
        }
    }
    Ok(buf)
}
