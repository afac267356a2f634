//! Command-line front end.
//!
//! Exit codes: 0 success, 1 error, 2 failed directional check, 3 divergence only.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coordlab_core::analytic::{
    exact_expected_profit_sp, optimal_alpha_given_q, optimal_q_given_alpha, regime_map, SinglePeriodInstance,
};
use coordlab_core::config::LabConfig;
use coordlab_core::env::{JointAction, Perturbation, PerturbationTarget, Simulator, TrajectoryRow, TrajectoryWriter};
use coordlab_core::harness::{
    behavioral_stats, load_agents, perturbation_probe, run_experiment, to_csv, trace_policy, write_experiment,
    ExperimentResult, Scenario,
};
use coordlab_core::marl::{evaluate_policy, Algorithm, Trainer};
use coordlab_core::sa::{default_config, interior_fixture, run_sa, StepSchedule};
use coordlab_core::{LabError, Result};

#[derive(Parser)]
#[command(name = "coordlab", version, about = "Inventory and recommendation coordination laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate episodes under constant actions and dump the trajectory.
    Simulate(SimulateArgs),
    /// Closed-form single-period optimum, or a regime map.
    Analytic(AnalyticArgs),
    /// Two-timescale stochastic approximation on a single-period instance.
    Sa(SaArgs),
    /// Train one seed.
    Train(TrainArgs),
    /// Evaluate saved policies.
    Eval(EvalArgs),
    /// Replicate over seeds, scenarios and algorithms.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// TOML configuration; the desk preset when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<LabConfig> {
        match &self.config {
            Some(p) => LabConfig::load(p),
            None => LabConfig::from_toml_str(""),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    /// Order placed for every product each period.
    #[arg(long, default_value_t = 2.0)]
    order: f64,
    /// Recommendation intensity for every pair each period.
    #[arg(long, default_value_t = 0.0)]
    rec: f64,
    /// Trajectory CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 1.5)]
    h: f64,
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 2.0)]
    rbar: f64,
    #[arg(long, default_value_t = 0.0)]
    r0_1: f64,
    #[arg(long, default_value_t = -0.8, allow_hyphen_values = true)]
    r0_2: f64,
    #[arg(long, default_value_t = 1.0)]
    qbar: f64,
}

impl InstanceArgs {
    fn instance(&self) -> Result<SinglePeriodInstance> {
        let inst = SinglePeriodInstance {
            p: self.p,
            h: self.h,
            b: self.b,
            r: self.r,
            rbar: self.rbar,
            r0: [self.r0_1, self.r0_2],
            qbar: self.qbar,
        };
        inst.validate()?;
        Ok(inst)
    }
}

#[derive(Args)]
struct AnalyticArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Fixed order quantities `q1,q2`; alternates best responses from zero otherwise.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    q: Option<Vec<f64>>,
    /// Write a regime map over RME x RMP lattices to this CSV.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long, default_value_t = 21)]
    map_points: usize,
}

#[derive(Args)]
struct SaArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 20_000)]
    iterations: usize,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long)]
    fast_initial: Option<f64>,
    #[arg(long)]
    fast_exponent: Option<f64>,
    #[arg(long)]
    slow_initial: Option<f64>,
    #[arg(long)]
    slow_exponent: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Directory holding `<role>.policy.bin` files.
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long, default_value_t = 20)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample actions instead of using the mean.
    #[arg(long)]
    stochastic: bool,
    /// Also run a shock probe (`demand` or `willingness`) and the correlation report.
    #[arg(long)]
    probe: Option<String>,
    #[arg(long, default_value_t = 2.0)]
    probe_amplitude: f64,
    #[arg(long, default_value_t = 10)]
    probe_period: usize,
    #[arg(long, default_value_t = 20)]
    burn_in: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Comma-separated scenarios; the configured one when omitted.
    #[arg(long, value_delimiter = ',')]
    scenarios: Vec<Scenario>,
    /// Comma-separated algorithms; the configured one when omitted.
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<Algorithm>,
    /// Number of seeds `0..n`; the configured list when omitted.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Check directional orderings between the runs (exit 2 on failure).
    #[arg(long)]
    check: bool,
}

fn write_or_print(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => Ok(fs::write(p, bytes)?),
        None => {
            print!("{}", String::from_utf8_lossy(bytes));
            Ok(())
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let cfg = a.config.load()?;
    let env = cfg.env;
    let mut action = JointAction::zeros(&env);
    action.orders.iter_mut().for_each(|q| *q = a.order);
    action.recommendations.iter_mut().flatten().for_each(|x| *x = a.rec);
    action.check(&env)?;
    let mut sim = Simulator::new(env.clone(), a.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut w = TrajectoryWriter::new(Vec::new());
    for ep in 0..a.episodes {
        sim.reset(&mut rng);
        while !sim.done() {
            let prev = sim.state().clone();
            let out = sim.step(&action, &mut rng)?;
            w.write_all(&TrajectoryRow::from_step(a.seed, ep, &prev, &action, &out))?;
        }
    }
    write_or_print(a.out.as_deref(), &w.finish()?)?;
    Ok(ExitCode::SUCCESS)
}

fn analytic(a: AnalyticArgs) -> Result<ExitCode> {
    let inst = a.instance.instance()?;
    if let Some(path) = &a.map {
        let k = a.map_points.max(2);
        let span = |lo: f64, hi: f64| (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect::<Vec<_>>();
        let total = inst.p + inst.h + inst.b;
        let rows = regime_map(&inst, &span(-inst.rbar, inst.rbar), &span(-total, total))?;
        fs::write(path, to_csv(&rows)?)?;
        eprintln!("wrote {} cells to {}", rows.len(), path.display());
        return Ok(ExitCode::SUCCESS);
    }
    let (q, alpha, regime) = match &a.q {
        Some(q) => {
            let q = [q[0], q[1]];
            let (alpha, regime) = optimal_alpha_given_q(&inst, q)?;
            (q, alpha, regime)
        }
        None => {
            let mut alpha = [0.0, 0.0];
            let mut q = optimal_q_given_alpha(&inst, alpha)?;
            let mut regime = optimal_alpha_given_q(&inst, q)?.1;
            for _ in 0..20 {
                let (next_alpha, next_regime) = optimal_alpha_given_q(&inst, q)?;
                let next_q = optimal_q_given_alpha(&inst, next_alpha)?;
                let settled = next_alpha == alpha && next_q == q;
                (alpha, q, regime) = (next_alpha, next_q, next_regime);
                if settled {
                    break;
                }
            }
            (q, alpha, regime)
        }
    };
    let value = exact_expected_profit_sp(&inst, q, alpha)?;
    let report = serde_json::json!({
        "q": q, "alpha": alpha, "regime": regime.as_str(), "expected_profit": value,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn sa(a: SaArgs) -> Result<ExitCode> {
    let inst = if a.instance.instance()? == interior_fixture() {
        interior_fixture()
    } else {
        a.instance.instance()?
    };
    let mut cfg = default_config(a.iterations);
    cfg.batch = a.batch;
    let pick = |base: StepSchedule, init: Option<f64>, exp: Option<f64>| {
        StepSchedule::new(init.unwrap_or(base.initial), exp.unwrap_or(base.exponent), a.iterations)
    };
    cfg.fast = pick(cfg.fast, a.fast_initial, a.fast_exponent);
    cfg.slow = pick(cfg.slow, a.slow_initial, a.slow_exponent);
    let run = run_sa(&inst, &cfg, a.seed)?;
    write_or_print(a.out.as_deref(), &to_csv(&run.trace)?)?;
    eprintln!("final q = {:?}, alpha = {:?}", run.last.q, run.last.alpha);
    Ok(ExitCode::SUCCESS)
}

fn train(a: TrainArgs) -> Result<ExitCode> {
    let cfg = a.config.load()?;
    let mut spec = cfg.spec();
    spec.seeds = vec![a.seed];
    if let Some(s) = a.scenario {
        spec.scenario = s;
    }
    if let Some(al) = a.algorithm {
        spec.algorithm = al;
    }
    let started = Instant::now();
    let result = run_experiment(&spec)?;
    let manifest = write_experiment(&a.out, &result, started.elapsed().as_secs_f64())?;
    fs::write(a.out.join("config.toml"), cfg.to_toml_string()?)?;
    let row = &result.replications[0].final_row;
    eprintln!(
        "{}: final profit {:.3} (inventory cost {:.3}, marketing revenue {:.3}) in {:.1}s",
        manifest.run_id, row.total_profit, row.inventory_cost, row.marketing_revenue, manifest.wall_time_s
    );
    Ok(if result.summary.diverged.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn eval(a: EvalArgs) -> Result<ExitCode> {
    let cfg = a.config.load()?;
    let algorithm = a.algorithm.unwrap_or(cfg.experiment.algorithm);
    let template = Trainer::new(cfg.env.clone(), cfg.trainer.clone(), algorithm, Scenario::Cooperative, 0)?;
    let agents = load_agents(&a.checkpoint, template.agents())?;
    let tf = cfg.trainer.time_feature;
    let metrics = evaluate_policy(&cfg.env, &[], &agents, a.episodes, !a.stochastic, tf, a.seed)?;
    let mut report = serde_json::json!({
        "mean_total_profit": metrics.mean_total_profit,
        "mean_inventory_cost": metrics.mean_inventory_cost,
        "mean_marketing_revenue": metrics.mean_marketing_revenue,
        "episodes": metrics.episodes.len(),
    });
    if let Some(kind) = &a.probe {
        let target = match kind.as_str() {
            "demand" => PerturbationTarget::Demand,
            "willingness" => PerturbationTarget::Willingness,
            other => return Err(LabError::Usage(format!("unknown probe {other:?}"))),
        };
        let pert = Perturbation::staggered(target, a.probe_amplitude, a.probe_period, cfg.env.num_products);
        let probe = perturbation_probe(&cfg.env, &agents, &pert, a.episodes, a.burn_in, tf, a.seed)?;
        let trace = trace_policy(&cfg.env, &[], &agents, a.episodes, tf, true, a.seed)?;
        let stats = behavioral_stats(&trace, &cfg.env, a.burn_in)?;
        report["probe"] = serde_json::to_value(&probe)?;
        report["correlations"] = serde_json::json!({
            "inventory": stats.inventory,
            "recommendation": stats.recommendation,
            "inventory_vs_recommendation": stats.inventory_vs_recommendation,
        });
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

/// Directional orderings among completed runs; returns failure messages.
fn directional_checks(results: &[ExperimentResult]) -> Vec<String> {
    let find = |sc: Scenario, al: Algorithm| {
        results
            .iter()
            .find(|r| r.spec.scenario == sc && r.spec.algorithm == al)
    };
    let mut failures = Vec::new();
    for al in Algorithm::ALL {
        if let (Some(c), Some(i)) = (find(Scenario::Cooperative, al), find(Scenario::Isolated, al)) {
            let (cm, im) = (c.summary.total_profit.mean, i.summary.total_profit.mean);
            if cm <= im {
                failures.push(format!("{al}: cooperative mean {cm:.3} does not exceed isolated {im:.3}"));
            }
        }
    }
    for sc in Scenario::ALL {
        if let (Some(m), Some(s)) = (find(sc, Algorithm::Mtma), find(sc, Algorithm::StmaS)) {
            let wins = m
                .replications
                .iter()
                .zip(&s.replications)
                .filter(|(a, b)| a.final_row.total_profit >= b.final_row.total_profit)
                .count();
            let n = m.replications.len();
            if 5 * wins < 4 * n {
                failures.push(format!("{sc}: MTMA beats STMA_S in only {wins}/{n} seeds"));
            }
        }
    }
    failures
}

fn sweep(a: SweepArgs) -> Result<ExitCode> {
    let cfg = a.config.load()?;
    let base = cfg.spec();
    let scenarios = if a.scenarios.is_empty() { vec![base.scenario] } else { a.scenarios.clone() };
    let algorithms = if a.algorithms.is_empty() { vec![base.algorithm] } else { a.algorithms.clone() };
    let mut results = Vec::new();
    for &sc in &scenarios {
        for &al in &algorithms {
            if al.is_single_agent() && !sc.is_cooperative() {
                eprintln!("skipping {al} under {sc}: single agents run cooperatively only");
                continue;
            }
            let mut spec = base.clone();
            spec.scenario = sc;
            spec.algorithm = al;
            if let Some(n) = a.seeds {
                spec.seeds = (0..n).collect();
            }
            let started = Instant::now();
            let result = run_experiment(&spec)?;
            let dir = a.out.join(format!("{}_{}", sc, al));
            write_experiment(&dir, &result, started.elapsed().as_secs_f64())?;
            let t = result.summary.total_profit;
            eprintln!("{sc} {al}: total profit {:.3} [{:.3}, {:.3}] over {} seeds", t.mean, t.low, t.high, t.n);
            results.push(result);
        }
    }
    let summaries: Vec<_> = results.iter().map(|r| &r.summary).collect();
    fs::write(a.out.join("summaries.json"), serde_json::to_vec_pretty(&summaries)?)?;
    if a.check {
        let failures = directional_checks(&results);
        if !failures.is_empty() {
            for f in &failures {
                eprintln!("check failed: {f}");
            }
            return Ok(ExitCode::from(2));
        }
    }
    if summaries.iter().any(|s| !s.diverged.is_empty()) {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analytic(a) => analytic(a),
        Command::Sa(a) => sa(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
