//! Coordination scenarios and the departmental reward split.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{Economics, StepOutcome};
use crate::error::{LabError, Result};
use crate::marl::AgentRole;

/// Which departments are rewarded by the platform profit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Both agents share the platform profit and one critic.
    #[default]
    Cooperative,
    /// Both agents optimize departmental objectives.
    Isolated,
    /// Only the inventory agent is isolated.
    IsolatedReplenishment,
    /// Only the recommendation agent is isolated.
    IsolatedRecommendation,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Cooperative,
        Scenario::Isolated,
        Scenario::IsolatedReplenishment,
        Scenario::IsolatedRecommendation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Cooperative => "cooperative",
            Scenario::Isolated => "isolated",
            Scenario::IsolatedReplenishment => "isolated_replenishment",
            Scenario::IsolatedRecommendation => "isolated_recommendation",
        }
    }

    pub fn is_cooperative(&self) -> bool {
        *self == Scenario::Cooperative
    }

    /// Whether `role` is rewarded by its departmental objective.
    pub fn isolates(&self, role: AgentRole) -> bool {
        matches!(
            (self, role),
            (Scenario::Isolated, AgentRole::Inventory | AgentRole::Recommendation)
                | (Scenario::IsolatedReplenishment, AgentRole::Inventory)
                | (Scenario::IsolatedRecommendation, AgentRole::Recommendation)
        )
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| LabError::config("scenario", format!("unknown scenario {s:?}")))
    }
}

/// `sum_i (p_in q_i + h I_i + b U_i)` for one period.
pub fn inventory_cost(outcome: &StepOutcome, econ: &Economics) -> f64 {
    let st = &outcome.new_state;
    (0..outcome.orders.len())
        .map(|i| {
            econ.buy_price * outcome.orders[i]
                + econ.holding_cost * st.on_hand[i]
                + econ.backlog_cost * st.backlog[i]
        })
        .sum()
}

/// `sum_i p_out S_i - sum C` for one period.
pub fn marketing_revenue(outcome: &StepOutcome, econ: &Economics) -> f64 {
    econ.sell_price * outcome.sales.iter().sum::<f64>() - outcome.rec_cost
}

/// Reward seen by `role` under `scenario`.
///
/// Isolated inventory agents receive `-inventory_cost`, isolated recommendation
/// agents `marketing_revenue`; everyone else the platform reward.
pub fn departmental_reward(outcome: &StepOutcome, econ: &Economics, scenario: Scenario, role: AgentRole) -> Result<f64> {
    if role == AgentRole::Merged && !scenario.is_cooperative() {
        return Err(LabError::config(
            "scenario",
            format!("a merged single agent cannot run the {scenario} scenario"),
        ));
    }
    Ok(if !scenario.isolates(role) {
        outcome.reward
    } else if role == AgentRole::Inventory {
        -inventory_cost(outcome, econ)
    } else {
        marketing_revenue(outcome, econ)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{step, reset, EnvConfig, JointAction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_outcome(rng: &mut ChaCha8Rng) -> (EnvConfig, StepOutcome) {
        let cfg = EnvConfig::default();
        let state = reset(&cfg, rng.random()).unwrap();
        let mut a = JointAction::zeros(&cfg);
        for q in &mut a.orders {
            *q = rng.random_range(0..=5) as f64;
        }
        for row in &mut a.recommendations {
            for x in row.iter_mut() {
                *x = rng.random();
            }
        }
        let out = step(&cfg, &state, &a, rng, &[]).unwrap();
        (cfg, out)
    }

    #[test]
    fn departments_sum_to_platform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (cfg, out) = random_outcome(&mut rng);
            let inv = departmental_reward(&out, &cfg.econ, Scenario::Isolated, AgentRole::Inventory).unwrap();
            let rec = departmental_reward(&out, &cfg.econ, Scenario::Isolated, AgentRole::Recommendation).unwrap();
            assert!((inv + rec - out.reward).abs() < 1e-9);
        }
    }

    #[test]
    fn cooperative_rewards_are_shared() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (cfg, out) = random_outcome(&mut rng);
        for role in [AgentRole::Inventory, AgentRole::Recommendation, AgentRole::Merged] {
            assert_eq!(departmental_reward(&out, &cfg.econ, Scenario::Cooperative, role).unwrap(), out.reward);
        }
        let inv = departmental_reward(&out, &cfg.econ, Scenario::IsolatedRecommendation, AgentRole::Inventory).unwrap();
        assert_eq!(inv, out.reward);
    }

    #[test]
    fn zero_outcome_gives_zero_everywhere() {
        let cfg = EnvConfig::default();
        let state = crate::env::EnvState {
            t: 0,
            on_hand: vec![0.0; 2],
            backlog: vec![0.0; 2],
            pipeline: vec![vec![0.0; 2]; 2],
            willingness: vec![vec![0.0; 5]; 2],
        };
        let out = StepOutcome {
            sales: vec![0.0; 2],
            demand: vec![0.0; 2],
            arrived: vec![0.0; 2],
            orders: vec![0.0; 2],
            per_product_profit: vec![0.0; 2],
            rec_cost: 0.0,
            reward: 0.0,
            new_state: state,
        };
        for sc in Scenario::ALL {
            for role in [AgentRole::Inventory, AgentRole::Recommendation] {
                assert_eq!(departmental_reward(&out, &cfg.econ, sc, role).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.as_str().parse::<Scenario>().unwrap(), sc);
        }
        assert!(matches!("bogus".parse::<Scenario>(), Err(LabError::Config { .. })));
        assert!(departmental_reward(
            &random_outcome(&mut ChaCha8Rng::seed_from_u64(3)).1,
            &Economics::default(),
            Scenario::Isolated,
            AgentRole::Merged
        )
        .is_err());
    }
}
