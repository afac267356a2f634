use coordlab_core::env::{EnvConfig, Simulator};
use coordlab_core::harness::Scenario;
use coordlab_core::marl::*;
use coordlab_core::nn::{GaussianHead, GradBuffer, Mlp};
use coordlab_core::sa::StepSchedule;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_trajectory(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let n = rng.random_range(1..60);
    let r = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    let v = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut d: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.1).collect();
    d[n - 1] = true;
    (r, v, d)
}

fn return_to_go(r: &[f64], d: &[bool], iota: f64, k: usize) -> f64 {
    let mut g = 0.0;
    let mut w = 1.0;
    for l in k..r.len() {
        g += w * r[l];
        if d[l] {
            break;
        }
        w *= iota;
    }
    g
}

#[test]
fn gae_identities_on_random_trajectories() {
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    for _ in 0..100 {
        let (r, v, d) = random_trajectory(&mut rng);
        let iota = rng.random_range(0.5..1.0);
        let lambda = rng.random_range(0.0..1.0);

        let a0 = compute_gae(&r, &v, &d, iota, 0.0).unwrap().advantages;
        assert_eq!(a0, td_residuals(&r, &v, &d, iota).unwrap());

        let a1 = compute_gae(&r, &v, &d, iota, 1.0).unwrap().advantages;
        for k in 0..r.len() {
            let expect = return_to_go(&r, &d, iota, k) - v[k];
            assert!((a1[k] - expect).abs() <= 1e-12 * (1.0 + expect.abs()), "{} vs {expect}", a1[k]);
        }

        let set = compute_gae(&r, &v, &d, iota, lambda).unwrap();
        let reference = gae_reference(&r, &v, &d, iota, lambda).unwrap();
        for k in 0..r.len() {
            assert!((set.advantages[k] - reference[k]).abs() <= 1e-12);
            assert_eq!(set.targets[k], set.advantages[k] + v[k]);
        }
    }
}

fn head_and_batch(seed: u64, b: usize) -> (GaussianHead, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let head = GaussianHead::new(&[3, 6, 2], &mut rng).unwrap();
    let obs: Vec<Vec<f64>> = (0..b).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let raw: Vec<Vec<f64>> = (0..b).map(|_| (0..2).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
    let adv = (0..b).map(|_| rng.random_range(-2.0..2.0)).collect();
    (head, obs, raw, adv)
}

#[test]
fn surrogate_at_old_parameters_is_the_score_gradient() {
    let (head, obs, raw, adv) = head_and_batch(800, 16);
    let old: Vec<f64> = obs.iter().zip(&raw).map(|(x, a)| head.logprob(x, a).unwrap()).collect();
    let sg = clipped_surrogate_grad(&head, &obs, &raw, &old, &adv, 0.2).unwrap();
    assert_eq!(sg.clipped_fraction, 0.0);
    let mut vanilla = GradBuffer::zeros_like(&head);
    for k in 0..obs.len() {
        let (_, g) = head.logprob_and_grad(&obs[k], &raw[k]).unwrap();
        vanilla.add_scaled(&g, adv[k] / obs.len() as f64).unwrap();
    }
    for (a, b) in sg.grad.mean.flat().iter().zip(vanilla.mean.flat()) {
        assert!((a - b).abs() <= 1e-10);
    }
    for (a, b) in sg.grad.log_std.iter().zip(&vanilla.log_std) {
        assert!((a - b).abs() <= 1e-10);
    }
}

#[test]
fn clipped_samples_contribute_nothing() {
    let (head, obs, raw, _) = head_and_batch(801, 1);
    let lp = head.logprob(&obs[0], &raw[0]).unwrap();
    let zero = |g: &GradBuffer| g.mean.flat().iter().all(|&x| x == 0.0) && g.log_std.iter().all(|&x| x == 0.0);
    // rho = 1.5 with positive advantage, and rho = 0.5 with negative advantage.
    for (shift, adv, cut) in [(1.5f64, 1.0, true), (0.5, -1.0, true), (1.5, -1.0, false), (0.5, 1.0, false), (1.1, 1.0, false)] {
        let old = lp - shift.ln();
        let sg = clipped_surrogate_grad(&head, &obs, &raw, &[old], &[adv], 0.2).unwrap();
        assert_eq!(zero(&sg.grad), cut, "rho {shift}, adv {adv}");
        assert_eq!(sg.clipped_fraction, if cut { 1.0 } else { 0.0 });
    }
}

#[test]
fn surrogate_gradient_matches_finite_differences() {
    let (mut head, obs, raw, adv) = head_and_batch(802, 8);
    let old: Vec<f64> = obs
        .iter()
        .zip(&raw)
        .map(|(x, a)| head.logprob(x, a).unwrap() + 0.05)
        .collect();
    let sg = clipped_surrogate_grad(&head, &obs, &raw, &old, &adv, 0.2).unwrap();
    let analytic = sg.grad.mean.flat();
    let theta = head.mean.flat();
    let h = 1e-6;
    for k in 0..theta.len() {
        let mut t = theta.clone();
        t[k] += h;
        head.mean.set_flat(&t).unwrap();
        let up = clipped_surrogate_value(&head, &obs, &raw, &old, &adv, 0.2).unwrap();
        t[k] -= 2.0 * h;
        head.mean.set_flat(&t).unwrap();
        let dn = clipped_surrogate_value(&head, &obs, &raw, &old, &adv, 0.2).unwrap();
        head.mean.set_flat(&theta).unwrap();
        let fd = (up - dn) / (2.0 * h);
        assert!((analytic[k] - fd).abs() <= 1e-4 * analytic[k].abs().max(fd.abs()) + 1e-8, "{k}: {} vs {fd}", analytic[k]);
    }
}

#[test]
fn unchanged_first_agent_leaves_second_update_bitwise_equal() {
    let (head, obs, raw, adv) = head_and_batch(803, 12);
    let old: Vec<f64> = obs.iter().zip(&raw).map(|(x, a)| head.logprob(x, a).unwrap()).collect();
    let first_old: Vec<f64> = (0..12).map(|k| -1.0 - 0.1 * k as f64).collect();
    let reweighted = reweight_advantage(&adv, &first_old, &first_old).unwrap();
    assert_eq!(reweighted, adv);
    let a = clipped_surrogate_grad(&head, &obs, &raw, &old, &adv, 0.2).unwrap();
    let b = clipped_surrogate_grad(&head, &obs, &raw, &old, &reweighted, 0.2).unwrap();
    assert_eq!(a, b);
}

#[test]
fn critic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(804);
    let mut critic = Mlp::new(&[4, 7, 1], &mut rng).unwrap();
    let obs: Vec<Vec<f64>> = (0..10).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let targets: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
    let (g, _) = critic_grad(&critic, &obs, &targets).unwrap();
    let analytic = g.flat();
    let theta = critic.flat();
    let h = 1e-5;
    for k in 0..theta.len() {
        let mut t = theta.clone();
        t[k] += h;
        critic.set_flat(&t).unwrap();
        let up = critic_loss(&critic, &obs, &targets).unwrap();
        t[k] -= 2.0 * h;
        critic.set_flat(&t).unwrap();
        let dn = critic_loss(&critic, &obs, &targets).unwrap();
        critic.set_flat(&theta).unwrap();
        let fd = (up - dn) / (2.0 * h);
        assert!((analytic[k] - fd).abs() <= 1e-4 * analytic[k].abs().max(fd.abs()) + 1e-9);
    }
}

fn tiny_env() -> EnvConfig {
    EnvConfig {
        horizon: 5,
        ..EnvConfig::default()
    }
}

fn tiny_trainer_config() -> TrainerConfig {
    TrainerConfig {
        episodes_per_iter: 2,
        batch_size: 4,
        num_minibatches: 2,
        ..TrainerConfig::desk()
    }
    .with_iterations(4)
}

#[test]
fn rollout_bookkeeping() {
    let env = tiny_env();
    let mut rng = ChaCha8Rng::seed_from_u64(805);
    let init = PolicyInit {
        time_feature: true,
        ..PolicyInit::default()
    };
    let agents = make_multi_agent(&env, &NetworkWidths::desk(), init, &mut rng).unwrap();
    let critic = make_critic(&env, &[8], true, &mut rng).unwrap();
    let mut sim = Simulator::new(env.clone(), 1).unwrap();
    let buf = collect_rollouts(&mut sim, &agents, &[critic], Scenario::Cooperative, 1, true, &mut rng).unwrap();
    assert_eq!(buf.len(), 5);
    assert_eq!(buf.dones.iter().filter(|&&d| d).count(), 1);
    assert!(buf.dones[4]);
    buf.check().unwrap();
    for (a, agent) in agents.iter().enumerate() {
        for k in 0..buf.len() {
            let lp = agent.policy.logprob(&buf.obs[k], &buf.raw_actions[a][k]).unwrap();
            assert!((lp - buf.logp[a][k]).abs() <= 1e-12);
        }
        assert_eq!(buf.rewards[a], buf.platform_reward);
    }
}

#[test]
fn zero_schedules_leave_parameters_unchanged() {
    let mut cfg = tiny_trainer_config();
    for s in [&mut cfg.critic_schedule, &mut cfg.fast_schedule, &mut cfg.slow_schedule] {
        s.initial = 0.0;
    }
    let mut tr = Trainer::new(tiny_env(), cfg, Algorithm::Mtma, Scenario::Cooperative, 3).unwrap();
    let before: Vec<Vec<f64>> = tr.agents().iter().map(|a| a.policy.mean.flat()).collect();
    let critic_before = tr.critics()[0].flat();
    tr.train_iteration().unwrap();
    let after: Vec<Vec<f64>> = tr.agents().iter().map(|a| a.policy.mean.flat()).collect();
    assert_eq!(before, after);
    assert_eq!(critic_before, tr.critics()[0].flat());
    assert_eq!(tr.iteration(), 1);
}

#[test]
fn training_is_deterministic_per_seed() {
    let run = |seed| {
        let mut tr = Trainer::new(tiny_env(), tiny_trainer_config(), Algorithm::Mtma, Scenario::Cooperative, seed).unwrap();
        for _ in 0..4 {
            tr.train_iteration().unwrap();
        }
        tr.agents().iter().map(|a| a.policy.mean.flat()).collect::<Vec<_>>()
    };
    assert_eq!(run(11), run(11));
    assert_ne!(run(11), run(12));
}

#[test]
fn schedule_assignment_follows_the_algorithm() {
    let cfg = TrainerConfig {
        fast_schedule: StepSchedule::new(0.5, 0.75, 10),
        slow_schedule: StepSchedule::new(0.01, 0.99, 10),
        ..tiny_trainer_config()
    };
    let tr = Trainer::new(tiny_env(), cfg.clone(), Algorithm::Mtma, Scenario::Cooperative, 0).unwrap();
    assert_eq!(tr.step_size(AgentRole::Inventory), 0.5);
    assert_eq!(tr.step_size(AgentRole::Recommendation), 0.01);
    let tr = Trainer::new(tiny_env(), cfg.clone(), Algorithm::StmaS, Scenario::Cooperative, 0).unwrap();
    assert_eq!(tr.step_size(AgentRole::Inventory), 0.01);
    let tr = Trainer::new(tiny_env(), cfg, Algorithm::StsaF, Scenario::Cooperative, 0).unwrap();
    assert_eq!(tr.agents().len(), 1);
    assert_eq!(tr.agents()[0].action_dim(), 2 + 10);
    assert_eq!(tr.step_size(AgentRole::Merged), 0.5);
}

#[test]
fn isolated_scenarios_use_separate_critics() {
    for sc in Scenario::ALL {
        let tr = Trainer::new(tiny_env(), tiny_trainer_config(), Algorithm::Mtma, sc, 0).unwrap();
        if sc.is_cooperative() {
            assert_eq!(tr.critics().len(), 1);
            assert_eq!(tr.critic_of(), &[0, 0]);
        } else {
            assert_eq!(tr.critics().len(), 2);
            assert_eq!(tr.critic_of(), &[0, 1]);
        }
    }
    assert!(Trainer::new(tiny_env(), tiny_trainer_config(), Algorithm::StsaS, Scenario::Isolated, 0).is_err());
}

#[test]
fn evaluation_metrics_reconcile() {
    let tr = Trainer::new(tiny_env(), tiny_trainer_config(), Algorithm::Mtma, Scenario::Cooperative, 5).unwrap();
    for det in [true, false] {
        let m = tr.evaluate(6, det, 42).unwrap();
        for e in &m.episodes {
            assert_eq!(e.total_profit, e.marketing_revenue - e.inventory_cost);
            assert!((e.total_profit - e.reward_sum).abs() <= 1e-9);
        }
        assert!((m.mean_total_profit - (m.mean_marketing_revenue - m.mean_inventory_cost)).abs() == 0.0);
    }
    assert_eq!(tr.evaluate(3, false, 42).unwrap(), tr.evaluate(3, false, 42).unwrap());
}

#[test]
fn zero_policy_with_zero_demand_scores_zero() {
    use coordlab_core::env::{DemandModel, Economics};
    let env = EnvConfig {
        horizon: 5,
        demand_model: DemandModel::Poisson { scale: 0.0 },
        econ: Economics {
            holding_cost: 0.0,
            ..Economics::default()
        },
        ..EnvConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut agents = make_multi_agent(&env, &NetworkWidths::desk(), PolicyInit::default(), &mut rng).unwrap();
    for a in &mut agents {
        let zeros = vec![0.0; a.policy.mean.num_params()];
        a.policy.mean.set_flat(&zeros).unwrap();
        if a.role == AgentRole::Recommendation {
            for k in 0..a.action_dim() {
                a.policy.mean.set_output_bias(k, -40.0).unwrap();
            }
        }
    }
    let m = evaluate_policy(&env, &[], &agents, 3, true, false, 1).unwrap();
    for e in &m.episodes {
        assert_eq!((e.total_profit, e.inventory_cost, e.marketing_revenue), (0.0, 0.0, 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reweighting_matches_elementwise_products(
        rows in proptest::collection::vec((-5.0f64..5.0, -3.0f64..3.0, -3.0f64..3.0), 1..40)
    ) {
        let adv: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let old: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let new: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let out = reweight_advantage(&adv, &old, &new).unwrap();
        for k in 0..rows.len() {
            prop_assert_eq!(out[k], (new[k] - old[k]).exp() * adv[k]);
        }
    }

    #[test]
    fn gae_is_linear_in_rewards(seed in 0u64..1000, c in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r, v, d) = random_trajectory(&mut rng);
        let zero_v = vec![0.0; v.len()];
        let scaled: Vec<f64> = r.iter().map(|x| c * x).collect();
        let a = compute_gae(&r, &zero_v, &d, 0.9, 0.8).unwrap().advantages;
        let b = compute_gae(&scaled, &zero_v, &d, 0.9, 0.8).unwrap().advantages;
        for k in 0..a.len() {
            prop_assert!((c * a[k] - b[k]).abs() <= 1e-9);
        }
    }
}
