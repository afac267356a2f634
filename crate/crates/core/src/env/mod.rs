//! Discrete-time simulation of the coupled inventory and recommendation system.
//!
//! Within a period events happen in a fixed order:
//!
//! 1. the order `q_t` enters the pipeline,
//! 2. the oldest pipeline slot arrives (`q_{t-L}`, or `q_t` itself when `L = 0`),
//! 3. willingness advances under the recommendations (plus any willingness shock),
//! 4. demand is sampled (plus any demand shock),
//! 5. demand and backlog are fulfilled from available stock,
//! 6. profit is booked and the period counter advances.

mod config;
mod demand;
mod dynamics;
mod state;
mod trajectory;

pub use config::{
    DemandModel, Economics, EnvConfig, FulfillmentMode, Perturbation, PerturbationTarget,
};
pub use demand::{aggregate, choice_matrix, sample_demand, softmax};
pub use dynamics::{
    advance_willingness, apply_perturbation, fulfill, period_profit, Fulfillment, PeriodProfit,
};
pub use state::{EnvState, JointAction, StepOutcome};
pub use trajectory::{TrajectoryRow, TrajectoryWriter};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};

/// Random initial state: integer stock uniform on `{0, ..., floor(M/2)}`,
/// willingness uniform on `[0, cap/2]`, empty pipeline and backlog.
pub fn reset(config: &EnvConfig, seed: u64) -> Result<EnvState> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(reset_with(config, &mut rng))
}

pub(crate) fn reset_with<R: Rng + ?Sized>(config: &EnvConfig, rng: &mut R) -> EnvState {
    let n = config.num_products;
    let top = config.num_customers / 2;
    let on_hand = (0..n).map(|_| rng.random_range(0..=top) as f64).collect();
    let half_cap = config.willingness_cap / 2.0;
    let willingness = (0..n)
        .map(|_| {
            (0..config.num_customers)
                .map(|_| rng.random::<f64>() * half_cap)
                .collect()
        })
        .collect();
    EnvState {
        t: 0,
        on_hand,
        backlog: vec![0.0; n],
        pipeline: vec![vec![0.0; config.lead_time]; n],
        willingness,
    }
}

/// Advances `state` by one period under `action`.
pub fn step<R: Rng + ?Sized>(
    config: &EnvConfig,
    state: &EnvState,
    action: &JointAction,
    rng: &mut R,
    perturbations: &[Perturbation],
) -> Result<StepOutcome> {
    if state.t >= config.horizon {
        return Err(LabError::Lifecycle(format!(
            "episode already finished at t = {} (horizon {})",
            state.t, config.horizon
        )));
    }
    action.check(config)?;
    let n = config.num_products;
    let lead = config.lead_time;

    // (1)-(2) pipeline shift and arrival.
    let mut pipeline = state.pipeline.clone();
    let mut arrived = vec![0.0; n];
    for i in 0..n {
        if lead == 0 {
            arrived[i] = action.orders[i];
        } else {
            arrived[i] = pipeline[i][lead - 1];
            pipeline[i].rotate_right(1);
            pipeline[i][0] = action.orders[i];
        }
    }

    // (3) willingness.
    let mut willingness = advance_willingness(
        &state.willingness,
        &action.recommendations,
        config.decay,
        config.willingness_cap,
    )?;
    for pert in perturbations
        .iter()
        .filter(|p| p.target == PerturbationTarget::Willingness)
    {
        for (i, row) in willingness.iter_mut().enumerate() {
            for r in row.iter_mut() {
                *r = apply_perturbation(*r, pert, state.t, i, config.willingness_cap);
            }
        }
    }

    // (4) demand.
    let individual = sample_demand(&willingness, &config.demand_model, rng);
    let mut demand = aggregate(&individual);
    for pert in perturbations.iter().filter(|p| p.target == PerturbationTarget::Demand) {
        for (i, d) in demand.iter_mut().enumerate() {
            *d = apply_perturbation(*d, pert, state.t, i, f64::INFINITY);
        }
    }

    // (5) fulfillment.
    let mut filled = fulfill(&state.on_hand, &state.backlog, &arrived, &demand, config.fulfillment)?;
    let cap = config.backlog_cap();
    for u in &mut filled.backlog {
        *u = u.min(cap);
    }

    // (6) profit.
    let profit = period_profit(
        &filled.sales,
        &action.orders,
        &filled.on_hand,
        &filled.backlog,
        &action.recommendations,
        &config.econ,
    );

    Ok(StepOutcome {
        sales: filled.sales,
        demand,
        arrived,
        orders: action.orders.clone(),
        per_product_profit: profit.per_product,
        rec_cost: profit.rec_cost,
        reward: profit.reward,
        new_state: EnvState {
            t: state.t + 1,
            on_hand: filled.on_hand,
            backlog: filled.backlog,
            pipeline,
            willingness,
        },
    })
}

/// Policy input: `[(I - U)/M ; pipeline/M ; R/cap]`, each entry clipped to `[-1, 1]`.
///
/// Layout is product-major within each block: inventory positions for products
/// `0..N`, then pipeline slots `pipeline[0][0..L], pipeline[1][0..L], ...`,
/// then willingness rows `R[0][0..M], R[1][0..M], ...`.
pub fn observe(state: &EnvState, config: &EnvConfig) -> Vec<f64> {
    let scale = config.num_customers as f64;
    let mut obs = Vec::with_capacity(config.observation_len());
    obs.extend(
        state
            .on_hand
            .iter()
            .zip(&state.backlog)
            .map(|(i, u)| ((i - u) / scale).clamp(-1.0, 1.0)),
    );
    for row in &state.pipeline {
        obs.extend(row.iter().map(|q| (q / scale).clamp(-1.0, 1.0)));
    }
    for row in &state.willingness {
        obs.extend(row.iter().map(|r| r / config.willingness_cap));
    }
    obs
}

/// Stateful wrapper holding a configuration, perturbations and the current state.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: EnvConfig,
    perturbations: Vec<Perturbation>,
    state: EnvState,
}

impl Simulator {
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self> {
        let state = reset(&config, seed)?;
        Ok(Self {
            config,
            perturbations: Vec::new(),
            state,
        })
    }

    pub fn with_perturbations(mut self, perturbations: Vec<Perturbation>) -> Result<Self> {
        for p in &perturbations {
            p.validate(self.config.num_products)?;
        }
        self.perturbations = perturbations;
        Ok(self)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn perturbations(&self) -> &[Perturbation] {
        &self.perturbations
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &EnvState {
        self.state = reset_with(&self.config, rng);
        &self.state
    }

    pub fn done(&self) -> bool {
        self.state.t >= self.config.horizon
    }

    pub fn observe(&self) -> Vec<f64> {
        observe(&self.state, &self.config)
    }

    pub fn step<R: Rng + ?Sized>(&mut self, action: &JointAction, rng: &mut R) -> Result<StepOutcome> {
        let outcome = step(&self.config, &self.state, action, rng, &self.perturbations)?;
        self.state = outcome.new_state.clone();
        Ok(outcome)
    }
}
