//! Multi-timescale multi-agent clipped policy optimization.

mod agent;
mod buffer;
mod config;
mod gae;
mod ppo;
mod trainer;

pub use agent::{
    assemble_action, input_len, make_critic, make_multi_agent, make_single_agent, policy_input, AgentSpec,
    PolicyInit,
};
pub use buffer::{collect_rollouts, RolloutBuffer};
pub use config::{AgentRole, Algorithm, NetworkWidths, Timescale, TrainerConfig};
pub use gae::{compute_gae, gae_reference, normalize, td_residuals, AdvantageSet};
pub use ppo::{
    clipped_surrogate_grad, clipped_surrogate_value, critic_grad, critic_loss, reweight_advantage, SurrogateGrad,
    MAX_REWEIGHT,
};
pub use trainer::{evaluate_policy, EvalMetrics, IterationStats, Trainer};
