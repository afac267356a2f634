use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agent::{assemble_action, make_critic, make_multi_agent, make_single_agent, policy_input, AgentSpec, PolicyInit};
use super::buffer::{collect_rollouts, RolloutBuffer};
use super::config::{AgentRole, Algorithm, Timescale, TrainerConfig};
use super::gae::{compute_gae, normalize, AdvantageSet};
use super::ppo::{clipped_surrogate_grad, critic_grad, reweight_advantage};
use crate::env::{EnvConfig, Perturbation, Simulator};
use crate::error::{LabError, Result};
use crate::harness::{inventory_cost, marketing_revenue, Scenario};
use crate::nn::{sgd_apply, Mlp};

/// Diagnostics of one training iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    /// Mean undiscounted platform profit of the collected episodes.
    pub rollout_profit: f64,
    /// Mean critic loss over minibatches and critics (scaled rewards).
    pub critic_loss: f64,
    /// Update order drawn for this iteration.
    pub order: Vec<AgentRole>,
    /// Mean clipped share per agent, in agent order.
    pub clipped_fraction: Vec<f64>,
}

/// Per-episode accounting of an evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// `marketing_revenue - inventory_cost`.
    pub total_profit: f64,
    pub inventory_cost: f64,
    pub marketing_revenue: f64,
    /// Sum of environment rewards; equals `total_profit` up to rounding.
    pub reward_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub episodes: Vec<EpisodeMetrics>,
    pub mean_total_profit: f64,
    pub mean_inventory_cost: f64,
    pub mean_marketing_revenue: f64,
}

impl EvalMetrics {
    fn from_episodes(episodes: Vec<EpisodeMetrics>) -> Self {
        let n = episodes.len().max(1) as f64;
        let mean = |f: fn(&EpisodeMetrics) -> f64| episodes.iter().map(f).sum::<f64>() / n;
        let mean_inventory_cost = mean(|e| e.inventory_cost);
        let mean_marketing_revenue = mean(|e| e.marketing_revenue);
        Self {
            mean_total_profit: mean_marketing_revenue - mean_inventory_cost,
            mean_inventory_cost,
            mean_marketing_revenue,
            episodes,
        }
    }
}

/// Runs `episodes` episodes of the joint policy on a fresh environment stream.
///
/// With `deterministic` the squashed mean action is used. Metrics are undiscounted.
pub fn evaluate_policy(
    env: &EnvConfig,
    perturbations: &[Perturbation],
    agents: &[AgentSpec],
    episodes: usize,
    deterministic: bool,
    time_feature: bool,
    seed: u64,
) -> Result<EvalMetrics> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sim = Simulator::new(env.clone(), seed)?.with_perturbations(perturbations.to_vec())?;
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        sim.reset(&mut rng);
        let mut m = EpisodeMetrics {
            total_profit: 0.0,
            inventory_cost: 0.0,
            marketing_revenue: 0.0,
            reward_sum: 0.0,
        };
        while !sim.done() {
            let x = policy_input(sim.state(), env, time_feature);
            let actions = agents
                .iter()
                .map(|a| Ok(a.policy.sample_and_squash(&x, &mut rng, &a.squash, deterministic)?.action))
                .collect::<Result<Vec<_>>>()?;
            let step = sim.step(&assemble_action(env, agents, &actions)?, &mut rng)?;
            m.inventory_cost += inventory_cost(&step, &env.econ);
            m.marketing_revenue += marketing_revenue(&step, &env.econ);
            m.reward_sum += step.reward;
        }
        m.total_profit = m.marketing_revenue - m.inventory_cost;
        out.push(m);
    }
    Ok(EvalMetrics::from_episodes(out))
}

/// Agents, critics and the random streams of one training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    env: EnvConfig,
    cfg: TrainerConfig,
    algorithm: Algorithm,
    scenario: Scenario,
    agents: Vec<AgentSpec>,
    critics: Vec<Mlp>,
    critic_of: Vec<usize>,
    sim: Simulator,
    rng: ChaCha8Rng,
    iteration: usize,
}

fn gather<T: Clone>(col: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&k| col[k].clone()).collect()
}

impl Trainer {
    pub fn new(env: EnvConfig, cfg: TrainerConfig, algorithm: Algorithm, scenario: Scenario, seed: u64) -> Result<Self> {
        env.validate()?;
        cfg.validate()?;
        if algorithm.is_single_agent() && !scenario.is_cooperative() {
            return Err(LabError::config(
                "scenario",
                format!("{algorithm} has a single agent and needs the cooperative scenario"),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = PolicyInit {
            time_feature: cfg.time_feature,
            log_std: cfg.init_log_std,
            order_mean: cfg.init_order_mean,
        };
        let agents = if algorithm.is_single_agent() {
            vec![make_single_agent(&env, &cfg.widths, init, &mut rng)?]
        } else {
            make_multi_agent(&env, &cfg.widths, init, &mut rng)?
        };
        let n_critics = if scenario.is_cooperative() { 1 } else { agents.len() };
        let critics = (0..n_critics)
            .map(|_| make_critic(&env, &cfg.widths.critic, cfg.time_feature, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let critic_of = (0..agents.len()).map(|a| a.min(n_critics - 1)).collect();
        let sim = Simulator::new(env.clone(), seed)?;
        Ok(Self {
            env,
            cfg,
            algorithm,
            scenario,
            agents,
            critics,
            critic_of,
            sim,
            rng,
            iteration: 0,
        })
    }

    pub fn env(&self) -> &EnvConfig {
        &self.env
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.cfg
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn critics(&self) -> &[Mlp] {
        &self.critics
    }

    /// Critic index used by each agent.
    pub fn critic_of(&self) -> &[usize] {
        &self.critic_of
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Replaces the policies (e.g. with a warm start); shapes must match.
    pub fn set_agents(&mut self, agents: Vec<AgentSpec>) -> Result<()> {
        let same = agents.len() == self.agents.len()
            && agents.iter().zip(&self.agents).all(|(a, b)| {
                a.role == b.role && a.squash == b.squash && a.policy.mean.widths() == b.policy.mean.widths()
            });
        if !same {
            return Err(LabError::Shape("warm-start agents do not match the trainer layout".into()));
        }
        self.agents = agents;
        Ok(())
    }

    /// Step size of `role` at the current iteration.
    pub fn step_size(&self, role: AgentRole) -> f64 {
        let sched = match self.algorithm.timescale(role, self.cfg.fast_agent) {
            Timescale::Fast => &self.cfg.fast_schedule,
            Timescale::Slow => &self.cfg.slow_schedule,
        };
        sched.eval(self.iteration)
    }

    pub fn evaluate(&self, episodes: usize, deterministic: bool, seed: u64) -> Result<EvalMetrics> {
        evaluate_policy(&self.env, &[], &self.agents, episodes, deterministic, self.cfg.time_feature, seed)
    }

    /// One pass of collection and updates. On error the parameters of the
    /// previous iteration are restored and the error is returned.
    pub fn train_iteration(&mut self) -> Result<IterationStats> {
        let agents = self.agents.clone();
        let critics = self.critics.clone();
        match self.iterate() {
            Ok(stats) => {
                self.iteration += 1;
                Ok(stats)
            }
            Err(e) => {
                self.agents = agents;
                self.critics = critics;
                Err(e)
            }
        }
    }

    fn advantages(&self, buf: &RolloutBuffer) -> Result<Vec<AdvantageSet>> {
        (0..self.critics.len())
            .map(|c| {
                let values = buf
                    .obs
                    .iter()
                    .map(|x| Ok(self.critics[c].predict(x)?[0]))
                    .collect::<Result<Vec<_>>>()?;
                let rewards: Vec<f64> = buf.rewards[c].iter().map(|r| r * self.cfg.reward_scale).collect();
                compute_gae(&rewards, &values, &buf.dones, self.cfg.discount, self.cfg.gae_lambda)
            })
            .collect()
    }

    fn iterate(&mut self) -> Result<IterationStats> {
        let n = self.iteration;
        let buf = collect_rollouts(
            &mut self.sim,
            &self.agents,
            &self.critics,
            self.scenario,
            self.cfg.episodes_per_iter,
            self.cfg.time_feature,
            &mut self.rng,
        )?;
        buf.check()?;
        let len = buf.len();
        let mut order: Vec<usize> = (0..self.agents.len()).collect();
        order.shuffle(&mut self.rng);
        let steps: Vec<f64> = self.agents.iter().map(|a| self.step_size(a.role)).collect();
        let critic_step = self.cfg.critic_schedule.eval(n);
        let reweight = self.scenario.is_cooperative();

        let mut clipped = vec![0.0; self.agents.len()];
        let mut critic_loss = 0.0;
        for _ in 0..self.cfg.num_minibatches {
            let idx: Vec<usize> = if self.cfg.batch_size >= len {
                (0..len).collect()
            } else {
                rand::seq::index::sample(&mut self.rng, len, self.cfg.batch_size).into_vec()
            };
            let sets = self.advantages(&buf)?;
            let obs = gather(&buf.obs, &idx);
            // Accumulated log-ratio of the agents already updated in this minibatch.
            let mut log_ratio = vec![0.0; idx.len()];
            for &a in &order {
                let raw = gather(&buf.raw_actions[a], &idx);
                let logp_old = gather(&buf.logp[a], &idx);
                let mut adv = gather(&sets[self.critic_of[a]].advantages, &idx);
                if self.cfg.normalize_advantages {
                    normalize(&mut adv);
                }
                if reweight {
                    adv = reweight_advantage(&adv, &vec![0.0; idx.len()], &log_ratio)?;
                }
                let mut sg = clipped_surrogate_grad(&self.agents[a].policy, &obs, &raw, &logp_old, &adv, self.cfg.clip)?;
                if let Some(cap) = self.cfg.max_grad_norm {
                    let norm = sg.grad.norm();
                    if norm > cap {
                        sg.grad.scale(cap / norm);
                    }
                }
                sgd_apply(&mut self.agents[a].policy, &sg.grad, steps[a])?;
                clipped[a] += sg.clipped_fraction;
                if reweight {
                    for (k, lr) in log_ratio.iter_mut().enumerate() {
                        *lr += self.agents[a].policy.logprob(&obs[k], &raw[k])? - logp_old[k];
                    }
                }
            }
            for (c, critic) in self.critics.iter_mut().enumerate() {
                let targets = gather(&sets[c].targets, &idx);
                let (mut g, loss) = critic_grad(critic, &obs, &targets)?;
                if let Some(cap) = self.cfg.max_grad_norm {
                    let norm = g.norm();
                    if norm > cap {
                        g.scale(cap / norm);
                    }
                }
                if !loss.is_finite() {
                    return Err(LabError::Divergence(format!("critic loss {loss} at iteration {n}")));
                }
                critic.apply(&g, -critic_step)?;
                critic_loss += loss;
            }
        }
        let nb = self.cfg.num_minibatches as f64;
        let episodes = self.cfg.episodes_per_iter as f64;
        Ok(IterationStats {
            iteration: n,
            rollout_profit: buf.platform_reward.iter().sum::<f64>() / episodes,
            critic_loss: critic_loss / (nb * self.critics.len() as f64),
            order: order.iter().map(|&a| self.agents[a].role).collect(),
            clipped_fraction: clipped.iter().map(|c| c / nb).collect(),
        })
    }
}
