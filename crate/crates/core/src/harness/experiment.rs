use std::collections::BTreeSet;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::stats::{aggregate_ci, Interval};
use crate::env::{EnvConfig, Perturbation};
use crate::error::{LabError, Result};
use crate::marl::{AgentSpec, Algorithm, EvalMetrics, Trainer, TrainerConfig};

/// One scenario/algorithm pair replicated over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub scenario: Scenario,
    pub algorithm: Algorithm,
    pub env: EnvConfig,
    pub trainer: TrainerConfig,
    /// Shocks applied during periodic evaluation.
    #[serde(default)]
    pub perturbations: Vec<Perturbation>,
    pub seeds: Vec<u64>,
    /// Seed of the evaluation environment stream, shared by all replications.
    #[serde(default = "default_eval_seed")]
    pub eval_seed: u64,
    /// Evaluation points averaged for the early and final summaries.
    #[serde(default = "default_window")]
    pub window: usize,
    /// Directory of policy checkpoints to start from.
    #[serde(default)]
    pub warm_start: Option<PathBuf>,
}

fn default_eval_seed() -> u64 {
    0x5EED
}

fn default_window() -> usize {
    10
}

impl ExperimentSpec {
    /// Desk-scale defaults for `scenario` and `algorithm` over `seeds`.
    pub fn desk(scenario: Scenario, algorithm: Algorithm, seeds: Vec<u64>) -> Self {
        Self {
            name: format!("{scenario}_{algorithm}"),
            scenario,
            algorithm,
            env: EnvConfig::default(),
            trainer: TrainerConfig::desk(),
            perturbations: Vec::new(),
            seeds,
            eval_seed: default_eval_seed(),
            window: default_window(),
            warm_start: None,
        }
    }

    pub fn run_id(&self) -> String {
        format!("{}:{}:{}", self.name, self.scenario, self.algorithm)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.trainer.validate()?;
        for p in &self.perturbations {
            p.validate(self.env.num_products)?;
        }
        if self.algorithm.is_single_agent() && !self.scenario.is_cooperative() {
            return Err(LabError::config(
                "experiment.scenario",
                format!("{} requires the cooperative scenario", self.algorithm),
            ));
        }
        if self.seeds.is_empty() {
            return Err(LabError::config("experiment.seeds", "at least one seed is required"));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(LabError::config("experiment.seeds", "seeds must be distinct"));
        }
        if self.window == 0 {
            return Err(LabError::config("experiment.window", "must be positive"));
        }
        Ok(())
    }

    /// Iterations after which an evaluation is recorded: every `eval_every`,
    /// plus the first and last `window` iterations.
    pub fn eval_points(&self) -> Vec<usize> {
        let total = self.trainer.iterations;
        (0..=total)
            .filter(|&n| n % self.trainer.eval_every == 0 || n < self.window || n + self.window > total)
            .collect()
    }
}

/// Final-window metrics of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_id: String,
    pub seed: u64,
    pub scenario: Scenario,
    pub algorithm: Algorithm,
    /// Iteration count reached (short of the budget after a divergence).
    pub iteration: usize,
    #[serde(serialize_with = "super::export::sig12")]
    pub total_profit: f64,
    #[serde(serialize_with = "super::export::sig12")]
    pub inventory_cost: f64,
    #[serde(serialize_with = "super::export::sig12")]
    pub marketing_revenue: f64,
}

/// One evaluation point of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningPoint {
    pub run_id: String,
    pub seed: u64,
    pub iteration: usize,
    #[serde(serialize_with = "super::export::sig12")]
    pub mean_eval_profit: f64,
    #[serde(serialize_with = "super::export::sig12")]
    pub ci_low: f64,
    #[serde(serialize_with = "super::export::sig12")]
    pub ci_high: f64,
    #[serde(serialize_with = "super::export::sig12")]
    pub inventory_cost: f64,
    #[serde(serialize_with = "super::export::sig12")]
    pub marketing_revenue: f64,
}

#[derive(Debug, Clone)]
pub struct Replication {
    pub seed: u64,
    pub curve: Vec<LearningPoint>,
    pub final_row: MetricsRow,
    /// Mean evaluation profit over the first `window` points.
    pub early_profit: f64,
    pub agents: Vec<AgentSpec>,
    /// Error message when training stopped early.
    pub divergence: Option<String>,
}

/// Aggregates over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub scenario: Scenario,
    pub algorithm: Algorithm,
    pub replications: usize,
    pub total_profit: Interval,
    pub inventory_cost: Interval,
    pub marketing_revenue: Interval,
    /// Seeds whose training diverged; they are included in the aggregates.
    pub diverged: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    /// In seed order of the spec.
    pub replications: Vec<Replication>,
    pub summary: RunSummary,
}

impl ExperimentResult {
    pub fn metrics_rows(&self) -> Vec<MetricsRow> {
        self.replications.iter().map(|r| r.final_row.clone()).collect()
    }

    pub fn learning_curve(&self) -> Vec<LearningPoint> {
        self.replications.iter().flat_map(|r| r.curve.iter().cloned()).collect()
    }
}

fn point(spec: &ExperimentSpec, seed: u64, iteration: usize, m: &EvalMetrics) -> Result<LearningPoint> {
    let profits: Vec<f64> = m.episodes.iter().map(|e| e.total_profit).collect();
    let ci = aggregate_ci(&profits)?;
    Ok(LearningPoint {
        run_id: spec.run_id(),
        seed,
        iteration,
        mean_eval_profit: m.mean_total_profit,
        ci_low: ci.low,
        ci_high: ci.high,
        inventory_cost: m.mean_inventory_cost,
        marketing_revenue: m.mean_marketing_revenue,
    })
}

fn window_mean(points: &[&LearningPoint], f: fn(&LearningPoint) -> f64) -> f64 {
    points.iter().map(|p| f(p)).sum::<f64>() / points.len() as f64
}

/// Trains one seed, evaluating deterministically at [`ExperimentSpec::eval_points`].
pub fn run_replication(spec: &ExperimentSpec, seed: u64) -> Result<Replication> {
    let mut trainer = Trainer::new(spec.env.clone(), spec.trainer.clone(), spec.algorithm, spec.scenario, seed)?;
    if let Some(dir) = &spec.warm_start {
        let agents = super::export::load_agents(dir, trainer.agents())?;
        trainer.set_agents(agents)?;
    }
    let cfg = &spec.trainer;
    let evaluate = |t: &Trainer| {
        crate::marl::evaluate_policy(
            &spec.env,
            &spec.perturbations,
            t.agents(),
            cfg.eval_episodes,
            true,
            cfg.time_feature,
            spec.eval_seed,
        )
    };
    let points = spec.eval_points();
    let mut curve = Vec::with_capacity(points.len());
    let mut divergence = None;
    let mut next = points.iter().peekable();
    loop {
        let n = trainer.iteration();
        if next.peek() == Some(&&n) {
            next.next();
            curve.push(point(spec, seed, n, &evaluate(&trainer)?)?);
        }
        if n >= cfg.iterations {
            break;
        }
        match trainer.train_iteration() {
            Ok(_) => {}
            Err(e @ (LabError::Divergence(_) | LabError::Numerical(_))) => {
                log::warn!("seed {seed} diverged at iteration {n}: {e}");
                divergence = Some(e.to_string());
                if curve.last().map(|p| p.iteration) != Some(n) {
                    curve.push(point(spec, seed, n, &evaluate(&trainer)?)?);
                }
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let reached = trainer.iteration();
    let tail: Vec<&LearningPoint> = curve.iter().rev().take(spec.window).collect();
    let head: Vec<&LearningPoint> = curve.iter().take(spec.window).collect();
    let inventory_cost = window_mean(&tail, |p| p.inventory_cost);
    let marketing_revenue = window_mean(&tail, |p| p.marketing_revenue);
    Ok(Replication {
        seed,
        early_profit: window_mean(&head, |p| p.mean_eval_profit),
        final_row: MetricsRow {
            run_id: spec.run_id(),
            seed,
            scenario: spec.scenario,
            algorithm: spec.algorithm,
            iteration: reached,
            total_profit: marketing_revenue - inventory_cost,
            inventory_cost,
            marketing_revenue,
        },
        curve,
        agents: trainer.agents().to_vec(),
        divergence,
    })
}

/// Worker count from `COORDLAB_WORKERS`, defaulting to the available parallelism.
pub fn worker_count() -> usize {
    std::env::var("COORDLAB_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Aggregates rows in the order given.
pub fn summarize(spec: &ExperimentSpec, reps: &[Replication]) -> Result<RunSummary> {
    let col = |f: fn(&MetricsRow) -> f64| reps.iter().map(|r| f(&r.final_row)).collect::<Vec<_>>();
    Ok(RunSummary {
        run_id: spec.run_id(),
        scenario: spec.scenario,
        algorithm: spec.algorithm,
        replications: reps.len(),
        total_profit: aggregate_ci(&col(|r| r.total_profit))?,
        inventory_cost: aggregate_ci(&col(|r| r.inventory_cost))?,
        marketing_revenue: aggregate_ci(&col(|r| r.marketing_revenue))?,
        diverged: reps.iter().filter(|r| r.divergence.is_some()).map(|r| r.seed).collect(),
    })
}

/// Runs every seed (in parallel) and aggregates in seed-index order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| LabError::Usage(format!("cannot start worker pool: {e}")))?;
    let replications = pool.install(|| {
        spec.seeds
            .par_iter()
            .map(|&seed| run_replication(spec, seed))
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = summarize(spec, &replications)?;
    Ok(ExperimentResult {
        spec: spec.clone(),
        replications,
        summary,
    })
}
