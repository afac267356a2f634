//! Helpers shared by integration test targets.
#![allow(dead_code)]

use coordlab_core::env::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_config(rng: &mut ChaCha8Rng) -> EnvConfig {
    let demand_model = match rng.random_range(0..4) {
        0 => DemandModel::SoftmaxCategorical,
        1 => DemandModel::Multinomial { trials: rng.random_range(1..4) },
        2 => DemandModel::Poisson { scale: rng.random_range(0.0..3.0) },
        _ => DemandModel::Exponential { scale: rng.random_range(0.0..3.0) },
    };
    EnvConfig {
        num_products: rng.random_range(1..=4),
        num_customers: rng.random_range(1..=8),
        horizon: rng.random_range(5..=40),
        lead_time: rng.random_range(0..=3),
        decay: rng.random_range(0.05..0.99),
        willingness_cap: rng.random_range(0.5..6.0),
        demand_model,
        fulfillment: if rng.random::<f64>() < 0.5 { FulfillmentMode::Backlog } else { FulfillmentMode::LostSales },
        ..EnvConfig::default()
    }
}

pub fn random_action(cfg: &EnvConfig, rng: &mut ChaCha8Rng) -> JointAction {
    let mut a = JointAction::zeros(cfg);
    let cap = cfg.order_cap();
    for q in &mut a.orders {
        // Mix boundary values with interior ones.
        *q = match rng.random_range(0..4) {
            0 => 0.0,
            1 => cap,
            _ => rng.random_range(0.0..=cap),
        };
    }
    for row in &mut a.recommendations {
        for x in row.iter_mut() {
            *x = if rng.random::<f64>() < 0.2 { rng.random_range(0..=1) as f64 } else { rng.random() };
        }
    }
    a
}

/// Runs `steps` random transitions and checks every invariant on each.
pub fn check_invariants(steps: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    while done < steps {
        let cfg = random_config(&mut rng);
        let perts = if rng.random::<f64>() < 0.3 {
            let target = if rng.random::<f64>() < 0.5 { PerturbationTarget::Demand } else { PerturbationTarget::Willingness };
            vec![Perturbation::staggered(target, rng.random_range(-2.0..2.0), rng.random_range(1..6), cfg.num_products)]
        } else {
            vec![]
        };
        let mut state = reset(&cfg, rng.random()).unwrap();
        let mut placed: Vec<Vec<f64>> = Vec::new();
        while state.t < cfg.horizon && done < steps {
            let action = random_action(&cfg, &mut rng);
            let out = step(&cfg, &state, &action, &mut rng, &perts).unwrap();
            let next = &out.new_state;
            next.check(&cfg).unwrap();
            placed.push(action.orders.clone());
            let n = cfg.num_products;

            // Softmax probabilities sum to one per customer.
            let gamma = choice_matrix(&next.willingness);
            for j in 0..cfg.num_customers {
                let s: f64 = (0..n).map(|i| gamma[i][j]).sum();
                assert!((s - 1.0).abs() <= 1e-12, "choice column sums to {s}");
            }
            if cfg.demand_model == DemandModel::SoftmaxCategorical && perts.iter().all(|p| p.target != PerturbationTarget::Demand) {
                let total: f64 = out.demand.iter().sum();
                assert_eq!(total, cfg.num_customers as f64);
            }

            for i in 0..n {
                let (inv, u) = (next.on_hand[i], next.backlog[i]);
                assert!(inv >= 0.0 && u >= 0.0 && inv * u == 0.0, "complementarity: I={inv} U={u}");
                for r in &next.willingness[i] {
                    assert!((0.0..=cfg.willingness_cap).contains(r), "willingness {r}");
                }
                let expect_arrival = if cfg.lead_time == 0 {
                    action.orders[i]
                } else if placed.len() > cfg.lead_time {
                    placed[placed.len() - 1 - cfg.lead_time][i]
                } else {
                    0.0
                };
                assert_eq!(out.arrived[i], expect_arrival);
                let d = out.demand[i];
                assert!(d >= 0.0);
                let tol = 1e-9 * (1.0 + inv + u + d + state.on_hand[i] + state.backlog[i]);
                match cfg.fulfillment {
                    FulfillmentMode::Backlog => {
                        if u < cfg.backlog_cap() {
                            let lhs = inv - u;
                            let rhs = state.on_hand[i] - state.backlog[i] + out.arrived[i] - d;
                            assert!((lhs - rhs).abs() <= tol, "net inventory {lhs} vs {rhs}");
                        }
                        assert!(out.sales[i] <= d + state.backlog[i] + tol);
                    }
                    FulfillmentMode::LostSales => {
                        assert_eq!(u, 0.0);
                        let avail = state.on_hand[i] + out.arrived[i];
                        assert!((out.sales[i] - d.min(avail)).abs() <= tol);
                        assert!((inv - (avail - out.sales[i])).abs() <= tol);
                    }
                }
            }
            state = out.new_state;
            done += 1;
        }
    }
    done
}
