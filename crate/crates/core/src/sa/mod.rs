//! Projected two-timescale stochastic approximation for the single-period model.
//!
//! Orders move on the fast timescale with pathwise gradients; recommendation
//! intensities move on the slow timescale with likelihood-ratio gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{choice_probs, exact_expected_profit_sp, SinglePeriodInstance};
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `eps * (0.1 N / (n + 0.1 N))^p`.
    #[default]
    Horizon,
    /// `eps / (1 + n)^p`.
    Power,
}

/// Diminishing step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub initial: f64,
    pub exponent: f64,
    pub horizon: usize,
    #[serde(default)]
    pub kind: ScheduleKind,
}

impl StepSchedule {
    pub fn new(initial: f64, exponent: f64, horizon: usize) -> Self {
        Self {
            initial,
            exponent,
            horizon,
            kind: ScheduleKind::Horizon,
        }
    }

    pub fn power(initial: f64, exponent: f64) -> Self {
        Self {
            initial,
            exponent,
            horizon: 1,
            kind: ScheduleKind::Power,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial.is_finite() && self.initial >= 0.0) {
            return Err(LabError::config("schedule.initial", "must be finite and >= 0"));
        }
        if !(self.exponent.is_finite() && self.exponent >= 0.0) {
            return Err(LabError::config("schedule.exponent", "must be finite and >= 0"));
        }
        if self.horizon == 0 {
            return Err(LabError::config("schedule.horizon", "must be positive"));
        }
        Ok(())
    }

    pub fn eval(&self, n: usize) -> f64 {
        let n = n as f64;
        match self.kind {
            ScheduleKind::Horizon => {
                let c = 0.1 * self.horizon as f64;
                self.initial * (c / (n + c)).powf(self.exponent)
            }
            ScheduleKind::Power => self.initial / (1.0 + n).powf(self.exponent),
        }
    }
}

/// Pathwise derivative of the period profit in each order quantity.
/// A tie `D = q` takes the understocked branch.
pub fn pathwise_grad_q(demand: [f64; 2], q: [f64; 2], inst: &SinglePeriodInstance) -> [f64; 2] {
    [0, 1].map(|i| if demand[i] >= q[i] { inst.p + inst.b } else { -inst.h })
}

/// Likelihood-ratio estimate of the derivative in each recommendation intensity.
pub fn lr_grad_alpha(
    demand: [f64; 2],
    gamma: [f64; 2],
    realized_profit: f64,
    inst: &SinglePeriodInstance,
) -> Result<[f64; 2]> {
    for i in 0..2 {
        if demand[i] > 0.0 && gamma[i] <= 0.0 {
            return Err(LabError::Numerical(format!(
                "observed purchase of product {i} with zero probability"
            )));
        }
    }
    Ok([0, 1].map(|i| realized_profit * (demand[i] - gamma[i]) * (inst.rbar - inst.r0[i]) - inst.r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub q_hat: [f64; 2],
    pub a_hat: [f64; 2],
    pub batch: usize,
}

fn realized_profit(inst: &SinglePeriodInstance, q: [f64; 2], demand: [f64; 2]) -> f64 {
    (0..2)
        .map(|i| {
            let s = demand[i].min(q[i]);
            inst.p * s - inst.h * (q[i] - s) - inst.b * (demand[i] - s)
        })
        .sum()
}

/// Draws which product the single customer buys.
pub fn sample_choice<R: Rng + ?Sized>(gamma: [f64; 2], rng: &mut R) -> [f64; 2] {
    if rng.random::<f64>() < gamma[0] {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    }
}

/// Batch-averaged gradient estimate at `(q, alpha)`.
pub fn estimate_gradient<R: Rng + ?Sized>(
    inst: &SinglePeriodInstance,
    q: [f64; 2],
    alpha: [f64; 2],
    batch: usize,
    rng: &mut R,
) -> Result<GradientEstimate> {
    if batch == 0 {
        return Err(LabError::config("batch", "must be positive"));
    }
    let gamma = choice_probs(inst.willingness(alpha));
    let mut est = GradientEstimate {
        q_hat: [0.0; 2],
        a_hat: [0.0; 2],
        batch,
    };
    for _ in 0..batch {
        let d = sample_choice(gamma, rng);
        let gq = pathwise_grad_q(d, q, inst);
        let ga = lr_grad_alpha(d, gamma, realized_profit(inst, q, d), inst)?;
        for i in 0..2 {
            est.q_hat[i] += gq[i];
            est.a_hat[i] += ga[i];
        }
    }
    let k = batch as f64;
    est.q_hat = est.q_hat.map(|g| g / k);
    est.a_hat = est.a_hat.map(|g| g / k);
    Ok(est)
}

/// Exact gradient of the expected objective (one-sided in `q` at kinks).
pub fn exact_gradient(inst: &SinglePeriodInstance, q: [f64; 2], alpha: [f64; 2]) -> GradientEstimate {
    let gamma = choice_probs(inst.willingness(alpha));
    let q_hat = [0, 1].map(|i| {
        if q[i] < 1.0 {
            gamma[i] * (inst.p + inst.b) - (1.0 - gamma[i]) * inst.h
        } else {
            -inst.h
        }
    });
    let outcome = [
        realized_profit(inst, q, [1.0, 0.0]),
        realized_profit(inst, q, [0.0, 1.0]),
    ];
    let mean = gamma[0] * outcome[0] + gamma[1] * outcome[1];
    let a_hat = [0, 1].map(|i| (inst.rbar - inst.r0[i]) * gamma[i] * (outcome[i] - mean) - inst.r);
    GradientEstimate { q_hat, a_hat, batch: 0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaState {
    pub n: usize,
    pub q: [f64; 2],
    pub alpha: [f64; 2],
}

/// One projected update: orders with the fast schedule, intensities with the slow one.
pub fn two_timescale_step(
    state: &SaState,
    est: &GradientEstimate,
    fast: &StepSchedule,
    slow: &StepSchedule,
    qbar: f64,
) -> SaState {
    let (e1, e2) = (fast.eval(state.n), slow.eval(state.n));
    SaState {
        n: state.n + 1,
        q: [0, 1].map(|i| (state.q[i] + e1 * est.q_hat[i]).clamp(0.0, qbar)),
        alpha: [0, 1].map(|i| (state.alpha[i] + e2 * est.a_hat[i]).clamp(0.0, 1.0)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaTraceRow {
    pub n: usize,
    pub q1: f64,
    pub q2: f64,
    pub a1: f64,
    pub a2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub oracle_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaConfig {
    pub fast: StepSchedule,
    pub slow: StepSchedule,
    pub iterations: usize,
    pub batch: usize,
    pub record_every: usize,
    pub init: SaState,
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        self.fast.validate()?;
        self.slow.validate()?;
        if self.iterations == 0 {
            return Err(LabError::config("iterations", "must be at least 1"));
        }
        if self.batch == 0 {
            return Err(LabError::config("batch", "must be positive"));
        }
        if self.record_every == 0 {
            return Err(LabError::config("record_every", "must be positive"));
        }
        if self.fast.exponent >= self.slow.exponent {
            log::warn!(
                "fast exponent {} is not below slow exponent {}; timescales are not separated",
                self.fast.exponent,
                self.slow.exponent
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaRun {
    pub last: SaState,
    pub trace: Vec<SaTraceRow>,
}

/// Runs the recursion with fresh demand draws each step; deterministic given `seed`.
pub fn run_sa(inst: &SinglePeriodInstance, cfg: &SaConfig, seed: u64) -> Result<SaRun> {
    inst.validate()?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SaState {
        n: 0,
        q: cfg.init.q.map(|x| x.clamp(0.0, inst.qbar)),
        alpha: cfg.init.alpha.map(|a| a.clamp(0.0, 1.0)),
    };
    let mut trace = Vec::with_capacity(cfg.iterations / cfg.record_every + 2);
    let record = |s: &SaState, trace: &mut Vec<SaTraceRow>| -> Result<()> {
        trace.push(SaTraceRow {
            n: s.n,
            q1: s.q[0],
            q2: s.q[1],
            a1: s.alpha[0],
            a2: s.alpha[1],
            eps1: cfg.fast.eval(s.n),
            eps2: cfg.slow.eval(s.n),
            oracle_value: exact_expected_profit_sp(inst, s.q, s.alpha)?,
        });
        Ok(())
    };
    record(&state, &mut trace)?;
    for _ in 0..cfg.iterations {
        let est = estimate_gradient(inst, state.q, state.alpha, cfg.batch, &mut rng)?;
        state = two_timescale_step(&state, &est, &cfg.fast, &cfg.slow, inst.qbar);
        if state.n % cfg.record_every == 0 {
            record(&state, &mut trace)?;
        }
    }
    if trace.last().map(|r| r.n) != Some(state.n) {
        record(&state, &mut trace)?;
    }
    Ok(SaRun { last: state, trace })
}

/// Interior benchmark instance used by the convergence check: the optimum
/// orders one unit of product 1 and recommends it with intensity near 0.48.
pub fn interior_fixture() -> SinglePeriodInstance {
    SinglePeriodInstance {
        p: 2.0,
        h: 1.5,
        b: 0.5,
        r: 1.0,
        rbar: 2.0,
        r0: [0.0, -0.8],
        qbar: 1.0,
    }
}

/// Default schedules for the fixture over `iterations` steps.
pub fn default_config(iterations: usize) -> SaConfig {
    SaConfig {
        fast: StepSchedule::new(0.01, 0.55, iterations),
        slow: StepSchedule::new(0.003, 0.9, iterations),
        iterations,
        batch: 16,
        record_every: 100,
        init: SaState {
            n: 0,
            q: [0.5, 0.5],
            alpha: [0.0, 0.0],
        },
    }
}
