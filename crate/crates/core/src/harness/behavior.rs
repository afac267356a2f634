//! Behavioral statistics of a policy and its response to periodic shocks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stats::{correlation_matrix, cross_block, pearson, CorrelationMatrix};
use crate::env::{choice_matrix, EnvConfig, Perturbation, PerturbationTarget, Simulator};
use crate::error::{LabError, Result};
use crate::marl::{assemble_action, policy_input, AgentSpec};

/// Decision-time quantities of one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub episode: usize,
    pub t: usize,
    /// `q + I + pipeline - U` per product.
    pub net_inventory: Vec<f64>,
    pub orders: Vec<f64>,
    /// `sum_j alpha[i][j]` per product.
    pub rec_intensity: Vec<f64>,
    /// Willingness `R[i][j]` before the period's update.
    pub willingness: Vec<Vec<f64>>,
    /// Expected demand per product under the pre-update willingness.
    pub expected_demand: Vec<f64>,
    pub demand: Vec<f64>,
}

/// Runs the joint policy for `episodes` episodes and records every period.
pub fn trace_policy(
    env: &EnvConfig,
    perturbations: &[Perturbation],
    agents: &[AgentSpec],
    episodes: usize,
    time_feature: bool,
    deterministic: bool,
    seed: u64,
) -> Result<Vec<PeriodRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sim = Simulator::new(env.clone(), seed)?.with_perturbations(perturbations.to_vec())?;
    let mut out = Vec::with_capacity(episodes * env.horizon);
    for episode in 0..episodes {
        sim.reset(&mut rng);
        while !sim.done() {
            let st = sim.state().clone();
            let x = policy_input(&st, env, time_feature);
            let actions = agents
                .iter()
                .map(|a| Ok(a.policy.sample_and_squash(&x, &mut rng, &a.squash, deterministic)?.action))
                .collect::<Result<Vec<_>>>()?;
            let joint = assemble_action(env, agents, &actions)?;
            let gamma = choice_matrix(&st.willingness);
            let transit = st.in_transit();
            let out_step = sim.step(&joint, &mut rng)?;
            out.push(PeriodRecord {
                episode,
                t: st.t,
                net_inventory: (0..env.num_products)
                    .map(|i| joint.orders[i] + st.on_hand[i] + transit[i] - st.backlog[i])
                    .collect(),
                orders: joint.orders.clone(),
                rec_intensity: (0..env.num_products).map(|i| joint.total_recommendation(i)).collect(),
                willingness: st.willingness.clone(),
                expected_demand: gamma.iter().map(|row| row.iter().sum()).collect(),
                demand: out_step.demand,
            });
        }
    }
    Ok(out)
}

/// Correlation blocks and relative-metric tables of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorReport {
    pub inventory: CorrelationMatrix,
    pub recommendation: CorrelationMatrix,
    /// `[inventory product][recommendation product]`.
    pub inventory_vs_recommendation: Vec<Vec<f64>>,
    /// `rme[k][i][j]` for kept period `k`: mean rival willingness minus own.
    pub rme: Vec<Vec<Vec<f64>>>,
    /// `rmp[k][i]`: `(p+h+b)` times rival minus own expected shortfall.
    pub rmp: Vec<Vec<f64>>,
    pub periods: usize,
}

fn rivals_mean(values: &[f64], own: usize) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    (values.iter().sum::<f64>() - values[own]) / (n - 1) as f64
}

/// Statistics over all periods with `t >= burn_in`.
pub fn behavioral_stats(trace: &[PeriodRecord], env: &EnvConfig, burn_in: usize) -> Result<BehaviorReport> {
    let kept: Vec<&PeriodRecord> = trace.iter().filter(|r| r.t >= burn_in).collect();
    if kept.len() < 2 {
        return Err(LabError::Degenerate(format!(
            "{} periods after burn-in; at least 2 required",
            kept.len()
        )));
    }
    let n = env.num_products;
    let column = |f: &dyn Fn(&PeriodRecord) -> f64| kept.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let inv: Vec<Vec<f64>> = (0..n).map(|i| column(&|r| r.net_inventory[i])).collect();
    let rec: Vec<Vec<f64>> = (0..n).map(|i| column(&|r| r.rec_intensity[i])).collect();
    let labels = |p: &str| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let e = &env.econ;
    let weight = e.sell_price + e.holding_cost + e.backlog_cost;
    let rme = kept
        .iter()
        .map(|r| {
            (0..n)
                .map(|i| {
                    (0..env.num_customers)
                        .map(|j| {
                            let col: Vec<f64> = r.willingness.iter().map(|row| row[j]).collect();
                            rivals_mean(&col, i) - col[i]
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let rmp = kept
        .iter()
        .map(|r| {
            let short: Vec<f64> = (0..n)
                .map(|i| (r.expected_demand[i] - r.net_inventory[i]).max(0.0))
                .collect();
            (0..n).map(|i| weight * (rivals_mean(&short, i) - short[i])).collect()
        })
        .collect();
    Ok(BehaviorReport {
        inventory: correlation_matrix(labels("inv"), &inv)?,
        recommendation: correlation_matrix(labels("rec"), &rec)?,
        inventory_vs_recommendation: cross_block(&inv, &rec)?,
        rme,
        rmp,
        periods: kept.len(),
    })
}

/// Lagged correlations between a shock and the policy's response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub target: PerturbationTarget,
    /// `(lag, correlation)` pooled over products and episodes.
    pub lagged: Vec<(usize, f64)>,
    pub most_negative: f64,
    pub most_positive: f64,
    /// True when the shock or the response was constant.
    pub degenerate: bool,
}

/// Runs trained `agents` under `pert` and correlates the shock with the response.
///
/// Demand shocks are compared with recommendation intensity, willingness shocks
/// with orders, each at lags `0..=lead_time + 2` within an episode. Periods
/// before `burn_in` are discarded.
pub fn perturbation_probe(
    env: &EnvConfig,
    agents: &[AgentSpec],
    pert: &Perturbation,
    episodes: usize,
    burn_in: usize,
    time_feature: bool,
    seed: u64,
) -> Result<ProbeReport> {
    let trace = trace_policy(env, std::slice::from_ref(pert), agents, episodes, time_feature, true, seed)?;
    let max_lag = env.lead_time + 2;
    let mut lagged = Vec::with_capacity(max_lag + 1);
    let mut degenerate = false;
    for lag in 0..=max_lag {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (k, r) in trace.iter().enumerate() {
            if r.t < burn_in || r.t + lag >= env.horizon {
                continue;
            }
            let later = &trace[k + lag];
            debug_assert_eq!(later.episode, r.episode);
            for i in 0..env.num_products {
                xs.push(pert.signal(r.t, i));
                ys.push(match pert.target {
                    PerturbationTarget::Demand => later.rec_intensity[i],
                    PerturbationTarget::Willingness => later.orders[i],
                });
            }
        }
        if xs.len() < 2 {
            continue;
        }
        let c = pearson(&xs, &ys)?;
        degenerate |= c.degenerate;
        lagged.push((lag, c.value));
    }
    if lagged.is_empty() {
        return Err(LabError::Degenerate("burn-in leaves no periods to correlate".into()));
    }
    let most_negative = lagged.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
    let most_positive = lagged.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(ProbeReport {
        target: pert.target,
        lagged,
        most_negative,
        most_positive,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marl::{make_multi_agent, NetworkWidths, PolicyInit};

    fn setup() -> (EnvConfig, Vec<AgentSpec>) {
        let env = EnvConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let agents = make_multi_agent(&env, &NetworkWidths::desk(), PolicyInit::default(), &mut rng).unwrap();
        (env, agents)
    }

    #[test]
    fn zero_amplitude_probe_is_flat() {
        let (env, agents) = setup();
        let pert = Perturbation::staggered(PerturbationTarget::Demand, 0.0, 10, 2);
        let rep = perturbation_probe(&env, &agents, &pert, 2, 20, false, 1).unwrap();
        assert!(rep.degenerate);
        assert!(rep.lagged.iter().all(|l| l.1 == 0.0));
    }

    #[test]
    fn report_structure() {
        let (env, agents) = setup();
        let trace = trace_policy(&env, &[], &agents, 2, false, false, 3).unwrap();
        assert_eq!(trace.len(), 2 * env.horizon);
        let rep = behavioral_stats(&trace, &env, 20).unwrap();
        assert_eq!(rep.periods, 60);
        assert_eq!(rep.rme.len(), 60);
        for r in &rep.rmp {
            // Two products: the relative terms are antisymmetric.
            assert!((r[0] + r[1]).abs() < 1e-12);
        }
        assert!(behavioral_stats(&trace[..1], &env, 0).is_err());
    }
}
