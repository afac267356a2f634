use coordlab_core::analytic::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_sp_instance(rng: &mut ChaCha8Rng) -> SinglePeriodInstance {
    let rbar = rng.random_range(1.0..5.0);
    SinglePeriodInstance {
        p: rng.random_range(0.5..3.0),
        h: rng.random_range(0.0..1.0),
        b: rng.random_range(0.0..1.0),
        r: rng.random_range(0.05..1.5),
        rbar,
        r0: [rng.random_range(-2.0..rbar - 0.1), rng.random_range(-2.0..rbar)],
        qbar: 1.0,
    }
}

/// Best intensity pair on two axis grids; the other intensity held at zero.
fn grid_argmax(inst: &SinglePeriodInstance, q: [f64; 2], step: f64) -> ([f64; 2], f64) {
    let k = (1.0 / step).round() as usize;
    let mut best = ([0.0, 0.0], f64::NEG_INFINITY);
    for axis in 0..2 {
        for i in 0..=k {
            let mut a = [0.0, 0.0];
            a[axis] = i as f64 * step;
            let v = exact_expected_profit_sp(inst, q, a).unwrap();
            if v > best.1 {
                best = (a, v);
            }
        }
    }
    best
}

#[test]
fn closed_form_alpha_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut regimes = std::collections::HashMap::new();
    for _ in 0..200 {
        let inst = random_sp_instance(&mut rng);
        let q = [rng.random_range(0.0..1.0f64).round(), rng.random_range(0.0..1.0f64).round()];
        let (alpha, regime) = optimal_alpha_given_q(&inst, q).unwrap();
        *regimes.entry(regime).or_insert(0) += 1;
        let (grid, _) = grid_argmax(&inst, q, 1e-3);
        for i in 0..2 {
            assert!(
                (alpha[i] - grid[i]).abs() <= 1e-3 + 1e-12,
                "{inst:?} q={q:?}: closed form {alpha:?} vs grid {grid:?} ({regime})"
            );
        }
        let m = relative_metrics(&inst, q).unwrap();
        if m.rmp >= 0.0 && m.rmp <= 4.0 * m.zeta {
            assert_eq!(alpha, [0.0, 0.0]);
        }
    }
    println!("regime counts: {regimes:?}");
}

#[test]
fn wedge_instances_match_grid_search() {
    // Product 2 starts far ahead, so a small push on product 1 is wasted.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut seen = 0;
    for _ in 0..2000 {
        let rbar = rng.random_range(2.0..6.0);
        let inst = SinglePeriodInstance {
            p: rng.random_range(1.0..4.0),
            h: rng.random_range(0.0..0.5),
            b: rng.random_range(0.0..1.0),
            r: rng.random_range(0.01..0.5),
            rbar,
            r0: [rng.random_range(-3.0..0.0), rng.random_range(1.0..rbar)],
            qbar: 1.0,
        };
        let (alpha, regime) = optimal_alpha_given_q(&inst, [1.0, 0.0]).unwrap();
        if regime != RegimeLabel::BoundaryNumeric {
            continue;
        }
        seen += 1;
        let (grid, _) = grid_argmax(&inst, [1.0, 0.0], 1e-3);
        assert!((alpha[0] - grid[0]).abs() <= 1e-3 + 1e-12, "{inst:?}: {alpha:?} vs {grid:?}");
        assert_eq!(grid[1], 0.0);
    }
    assert!(seen > 20, "only {seen} wedge instances generated");
}

#[test]
fn fractile_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let mut inst = random_sp_instance(&mut rng);
        inst.h = rng.random_range(0.01..1.0);
        let alpha = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let q = optimal_q_given_alpha(&inst, alpha).unwrap();
        let mut best = ([0.0, 0.0], f64::NEG_INFINITY);
        for q1 in [0.0, 1.0] {
            for q2 in [0.0, 1.0] {
                let v = exact_expected_profit_sp(&inst, [q1, q2], alpha).unwrap();
                // Ties go to the larger order, so compare with >=.
                if v >= best.1 - 1e-15 {
                    best = ([q1, q2], v);
                }
            }
        }
        assert_eq!(q, best.0, "{inst:?} alpha={alpha:?}");
    }
}

pub fn random_tp_instance(rng: &mut ChaCha8Rng) -> TwoPeriodInstance {
    let rbar = rng.random_range(0.5..4.0);
    TwoPeriodInstance {
        p: rng.random_range(0.0..3.0),
        h: rng.random_range(0.0..1.0),
        b: rng.random_range(0.0..1.0),
        r: rng.random_range(0.0..1.0),
        eta: rng.random_range(0.05..0.95),
        rbar,
        r0: rng.random_range(-3.0..rbar),
    }
}

#[test]
fn indicator_form_equals_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let inst = random_tp_instance(&mut rng);
        let q = ORDER_PLANS[rng.random_range(0..ORDER_PLANS.len())];
        let alpha = [rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0)];
        let a = two_period_expected_profit(&inst, q, alpha).unwrap();
        let b = two_period_enumerated(&inst, q, alpha).unwrap();
        assert!((a - b).abs() <= 1e-10, "{inst:?} {q:?} {alpha:?}");
    }
}

#[test]
fn free_recommendation_is_monotone_with_full_stock() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let inst = TwoPeriodInstance {
            r: 0.0,
            ..random_tp_instance(&mut rng)
        };
        for i in 0..=20 {
            for j in 0..20 {
                let (a, b) = (i as f64 / 20.0, j as f64 / 20.0);
                let base = two_period_expected_profit(&inst, [1, 1], [a, b]).unwrap();
                let up2 = two_period_expected_profit(&inst, [1, 1], [a, b + 0.05]).unwrap();
                assert!(up2 >= base - 1e-12);
                let up1 = two_period_expected_profit(&inst, [1, 1], [b, a]).unwrap();
                let up1b = two_period_expected_profit(&inst, [1, 1], [b + 0.05, a]).unwrap();
                assert!(up1b >= up1 - 1e-12);
            }
        }
    }
}

#[test]
fn finer_grid_never_lowers_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let inst = random_tp_instance(&mut rng);
        let coarse = two_period_optimum(&inst, 0.1).unwrap();
        let fine = two_period_optimum(&inst, 0.05).unwrap();
        assert!(fine.value >= coarse.value);
    }
}

#[test]
fn optimum_agrees_with_monte_carlo() {
    let inst = TwoPeriodInstance {
        p: 2.0,
        h: 0.2,
        b: 0.6,
        r: 0.3,
        eta: 0.8,
        rbar: 2.5,
        r0: 0.2,
    };
    let opt = two_period_optimum(&inst, 0.05).unwrap();
    let gamma = inst.purchase_probs(opt.alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 200_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    let (q1, q2) = (opt.q[0] as f64, opt.q[1] as f64);
    for _ in 0..n {
        let d1 = (rng.random::<f64>() < gamma[0]) as u8 as f64;
        let d2 = (rng.random::<f64>() < gamma[1]) as u8 as f64;
        let s1 = d1.min(q1);
        let (i1, u1) = (q1 - s1, d1 - s1);
        let s2 = (d2 + u1).min(i1 + q2);
        let (i2, u2) = (i1 + q2 - s2, d2 + u1 - s2);
        let v = inst.p * (s1 + s2) - inst.h * (i1 + i2) - inst.b * (u1 + u2) - inst.r * (opt.alpha[0] + opt.alpha[1]);
        sum += v;
        sq += v * v;
    }
    let mean = sum / n as f64;
    let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - opt.value).abs() <= 3.0 * se, "{mean} vs {} (se {se})", opt.value);
}

pub fn smoothing_instance(rng: &mut ChaCha8Rng) -> TwoPeriodInstance {
    let rbar = rng.random_range(0.5..3.0);
    let b = rng.random_range(0.0..0.5);
    let h = rng.random_range(0.0..1.0);
    TwoPeriodInstance {
        p: (b * f64::exp(rbar) - h).max(0.0) + rng.random_range(0.0..3.0),
        h,
        b,
        r: rng.random_range(0.01..1.0),
        eta: rng.random_range(0.5..0.95),
        rbar,
        r0: rng.random_range(-3.0..rbar),
    }
}

#[test]
fn demand_smoothing_holds_under_its_condition() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..200 {
        let inst = smoothing_instance(&mut rng);
        for budget in [1, 2] {
            let rep = smoothing_monotonicity_check(&inst, budget, 0.01).unwrap();
            assert!(rep.precondition_met);
            assert!(rep.passed, "{inst:?} budget {budget}: {:?}", rep.witnesses);
        }
    }
}

pub fn ordering_instance(rng: &mut ChaCha8Rng) -> (TwoPeriodInstance, f64) {
    let h = rng.random_range(0.05..1.0);
    let b = rng.random_range(0.0..1.0);
    let inst = TwoPeriodInstance {
        p: h + b * b / h + rng.random_range(0.0..3.0),
        h,
        b,
        r: 0.0,
        eta: 0.9,
        rbar: 5.0,
        r0: 0.0,
    };
    let rp = ordering_threshold(inst.p, inst.h, inst.b).unwrap();
    (inst, 2.0 * rp.max(0.0) + rng.random_range(0.0..4.0))
}

#[test]
fn adaptive_ordering_holds_under_its_condition() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..200 {
        let (inst, sum) = ordering_instance(&mut rng);
        let rep = adaptive_ordering_check(&inst, sum, 10.0, 401).unwrap();
        assert!(rep.precondition_met);
        assert!(rep.passed, "{inst:?} sum {sum}: {:?}", rep.path);
    }
}

#[test]
fn ordering_precondition_guard() {
    let inst = TwoPeriodInstance {
        p: 2.0,
        h: 0.0,
        b: 0.5,
        r: 0.0,
        eta: 0.9,
        rbar: 5.0,
        r0: 0.0,
    };
    assert!(!adaptive_ordering_check(&inst, 3.0, 5.0, 11).unwrap().precondition_met);
}

#[test]
fn early_willingness_orders_first() {
    let inst = TwoPeriodInstance {
        p: 2.0,
        h: 0.2,
        b: 0.4,
        r: 0.0,
        eta: 0.9,
        rbar: 5.0,
        r0: 0.0,
    };
    let q = best_plan_given_willingness(&inst, [8.0, -8.0]);
    assert_eq!(q[0], 1);
}

proptest! {
    #[test]
    fn recommendations_are_exclusive(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_sp_instance(&mut rng);
        let q = [rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0)];
        let (alpha, _) = optimal_alpha_given_q(&inst, q).unwrap();
        prop_assert_eq!(alpha[0] * alpha[1], 0.0);
    }

    #[test]
    fn swap_symmetry(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inst = random_sp_instance(&mut rng);
        inst.r0[1] = inst.r0[1].min(inst.rbar - 0.1);
        let q = [rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0)];
        let a = [rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0)];
        let v = exact_expected_profit_sp(&inst, q, a).unwrap();
        let w = exact_expected_profit_sp(&inst.swapped(), [q[1], q[0]], [a[1], a[0]]).unwrap();
        prop_assert!((v - w).abs() < 1e-12);
        let (x, _) = optimal_alpha_given_q(&inst, q).unwrap();
        let (y, _) = optimal_alpha_given_q(&inst.swapped(), [q[1], q[0]]).unwrap();
        prop_assert!((x[0] - y[1]).abs() < 1e-12 && (x[1] - y[0]).abs() < 1e-12);
    }

    #[test]
    fn alpha_increases_with_rmp_and_rme(seed in 0u64..10_000, q1 in 0.0f64..1.0, dq in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_sp_instance(&mut rng);
        // Larger first-product order raises RMP.
        let lo = optimal_alpha_given_q(&inst, [q1, 0.0]).unwrap().0[0];
        let hi = optimal_alpha_given_q(&inst, [(q1 + dq).min(1.0), 0.0]).unwrap().0[0];
        prop_assert!(hi >= lo - 1e-12);
    }

    #[test]
    fn replenishment_follows_recommendation(seed in 0u64..10_000, a in 0.0f64..1.0, da in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_sp_instance(&mut rng);
        let a2 = (a + da).min(1.0);
        let base = optimal_q_given_alpha(&inst, [a, 0.3]).unwrap();
        let more_own = optimal_q_given_alpha(&inst, [a2, 0.3]).unwrap();
        let more_rival = optimal_q_given_alpha(&inst, [0.3, a2]).unwrap();
        let base_rival = optimal_q_given_alpha(&inst, [0.3, a]).unwrap();
        prop_assert!(more_own[0] >= base[0]);
        prop_assert!(more_rival[0] <= base_rival[0]);
    }
}
