//! One product, one customer, two periods, immediate delivery.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPeriodInstance {
    pub p: f64,
    pub h: f64,
    pub b: f64,
    pub r: f64,
    pub eta: f64,
    pub rbar: f64,
    pub r0: f64,
}

/// Admissible integer order plans.
pub const ORDER_PLANS: [[u32; 2]; 5] = [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1]];

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl TwoPeriodInstance {
    /// Willingness in both periods under recommendations `alpha`.
    pub fn willingness(&self, alpha: [f64; 2]) -> [f64; 2] {
        let r1 = self.eta * self.r0 + (self.rbar - self.eta * self.r0) * alpha[0];
        let r2 = self.eta * r1 + (self.rbar - self.eta * r1) * alpha[1];
        [r1, r2]
    }

    pub fn purchase_probs(&self, alpha: [f64; 2]) -> [f64; 2] {
        self.willingness(alpha).map(sigmoid)
    }
}

fn check_plan(q: [u32; 2], alpha: [f64; 2]) -> Result<()> {
    if !ORDER_PLANS.contains(&q) {
        return Err(LabError::Domain(format!("order plan {q:?} is not admissible")));
    }
    if alpha.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
        return Err(LabError::Domain(format!("recommendation {alpha:?} outside [0, 1]")));
    }
    Ok(())
}

/// Indicator-form expected profit given purchase probabilities (no recommendation cost).
pub fn two_period_profit_given_probs(inst: &TwoPeriodInstance, q: [u32; 2], gamma: [f64; 2]) -> f64 {
    let TwoPeriodInstance { p, h, b, .. } = *inst;
    let ind = |c: bool| c as u8 as f64;
    let none = ind(q[0] + q[1] == 0);
    let one = ind(q[0] + q[1] == 1);
    let (g1, g2) = (gamma[0], gamma[1]);
    g1 * (p + 2.0 * h - (h + b) * ind(q[0] == 0) - (p + h + b) * none)
        + g2 * ((p + h) - (p + h + b) * none)
        - g1 * g2 * (p + h + b) * one
        - 2.0 * h * q[0] as f64
        - h * q[1] as f64
}

/// Expected two-period profit in indicator form.
pub fn two_period_expected_profit(inst: &TwoPeriodInstance, q: [u32; 2], alpha: [f64; 2]) -> Result<f64> {
    check_plan(q, alpha)?;
    let gamma = inst.purchase_probs(alpha);
    Ok(two_period_profit_given_probs(inst, q, gamma) - inst.r * (alpha[0] + alpha[1]))
}

/// Same quantity by enumerating the four demand outcomes with full backlog accounting.
pub fn two_period_enumerated(inst: &TwoPeriodInstance, q: [u32; 2], alpha: [f64; 2]) -> Result<f64> {
    check_plan(q, alpha)?;
    let gamma = inst.purchase_probs(alpha);
    let (q1, q2) = (q[0] as f64, q[1] as f64);
    let mut value = 0.0;
    for d1 in [0.0, 1.0] {
        for d2 in [0.0, 1.0] {
            let prob = (if d1 == 1.0 { gamma[0] } else { 1.0 - gamma[0] })
                * (if d2 == 1.0 { gamma[1] } else { 1.0 - gamma[1] });
            let s1 = f64::min(d1, q1);
            let (i1, u1) = (q1 - s1, d1 - s1);
            let p1 = inst.p * s1 - inst.h * i1 - inst.b * u1;
            let s2 = f64::min(d2 + u1, i1 + q2);
            let (i2, u2) = (i1 + q2 - s2, d2 + u1 - s2);
            let p2 = inst.p * s2 - inst.h * i2 - inst.b * u2;
            value += prob * (p1 + p2);
        }
    }
    Ok(value - inst.r * (alpha[0] + alpha[1]))
}

fn alpha_grid(step: f64) -> Vec<f64> {
    let k = (1.0 / step).round() as usize;
    let mut g: Vec<f64> = (0..=k).map(|i| (i as f64 * step).min(1.0)).collect();
    if *g.last().unwrap() < 1.0 {
        g.push(1.0);
    }
    g
}

/// Best recommendation pair for a fixed order plan on a grid (ties toward smaller alpha).
pub fn best_alpha_for_plan(inst: &TwoPeriodInstance, q: [u32; 2], step: f64) -> Result<([f64; 2], f64)> {
    let grid = alpha_grid(step);
    let mut best = ([0.0, 0.0], f64::NEG_INFINITY);
    for &a1 in &grid {
        for &a2 in &grid {
            let v = two_period_expected_profit(inst, q, [a1, a2])?;
            if v > best.1 {
                best = ([a1, a2], v);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPeriodOptimum {
    pub q: [u32; 2],
    pub alpha: [f64; 2],
    pub value: f64,
}

/// Exhaustive search over admissible plans and an intensity grid.
pub fn two_period_optimum(inst: &TwoPeriodInstance, step: f64) -> Result<TwoPeriodOptimum> {
    if !(step > 0.0 && step <= 0.1) {
        return Err(LabError::config("alpha_grid_step", "must lie in (0, 0.1]"));
    }
    let mut best = TwoPeriodOptimum {
        q: [0, 0],
        alpha: [0.0, 0.0],
        value: f64::NEG_INFINITY,
    };
    for q in ORDER_PLANS {
        let (alpha, value) = best_alpha_for_plan(inst, q, step)?;
        if value > best.value {
            best = TwoPeriodOptimum { q, alpha, value };
        }
    }
    Ok(best)
}

/// `a / b` with the conventions `0/x = 0`, `x/0 = inf`, `0/0 = 1`.
pub fn safe_ratio(a: f64, b: f64) -> f64 {
    match (a == 0.0, b == 0.0) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        (false, true) => f64::INFINITY,
        (false, false) => a / b,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub precondition_met: bool,
    pub passed: bool,
    /// `(plan, optimal alpha, ratio alpha_1/alpha_2)` in increasing first-period order.
    pub witnesses: Vec<([u32; 2], [f64; 2], f64)>,
}

/// Demand smoothing: for a fixed total order, moving stock to the first period
/// should not lower the ratio of first- to second-period recommendation.
///
/// Requires `p >= b e^rbar - h`.
pub fn smoothing_monotonicity_check(inst: &TwoPeriodInstance, budget: u32, step: f64) -> Result<SmoothingReport> {
    let plans: [[u32; 2]; 2] = match budget {
        1 => [[0, 1], [1, 0]],
        2 => [[0, 2], [1, 1]],
        _ => return Err(LabError::Usage(format!("budget must be 1 or 2, got {budget}"))),
    };
    let precondition_met = inst.p >= inst.b * inst.rbar.exp() - inst.h;
    if !precondition_met {
        return Ok(SmoothingReport {
            precondition_met,
            passed: true,
            witnesses: Vec::new(),
        });
    }
    let mut witnesses = Vec::with_capacity(2);
    for q in plans {
        let (alpha, _) = best_alpha_for_plan(inst, q, step)?;
        witnesses.push((q, alpha, safe_ratio(alpha[0], alpha[1])));
    }
    let passed = witnesses[0].2 <= witnesses[1].2;
    Ok(SmoothingReport {
        precondition_met,
        passed,
        witnesses,
    })
}

/// Log-odds threshold above which a purchase is likely enough to justify holding stock.
pub fn ordering_threshold(p: f64, h: f64, b: f64) -> Option<f64> {
    if !(h > 0.0) {
        return None;
    }
    let root = ((p + h + b) / h).sqrt() - 1.0;
    (root > 0.0).then(|| -root.ln())
}

/// Order plan maximizing profit at fixed willingness (ties toward the smallest plan).
pub fn best_plan_given_willingness(inst: &TwoPeriodInstance, willingness: [f64; 2]) -> [u32; 2] {
    let gamma = willingness.map(sigmoid);
    let mut best = (ORDER_PLANS[0], f64::NEG_INFINITY);
    for q in ORDER_PLANS {
        let v = two_period_profit_given_probs(inst, q, gamma);
        if v > best.1 {
            best = (q, v);
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub precondition_met: bool,
    pub passed: bool,
    /// `(R_1, plan, ratio q_1/q_2)` along the sweep.
    pub path: Vec<(f64, [u32; 2], f64)>,
}

/// Adaptive ordering: along `R_1 + R_2 = willingness_sum`, the ratio of
/// first- to second-period orders is non-decreasing in `R_1`.
///
/// Requires `h > 0`, `p >= h + b^2/h` and `willingness_sum >= 2 R+`.
pub fn adaptive_ordering_check(
    inst: &TwoPeriodInstance,
    willingness_sum: f64,
    span: f64,
    points: usize,
) -> Result<OrderingReport> {
    if points < 2 {
        return Err(LabError::Usage("sweep needs at least two points".into()));
    }
    let threshold = ordering_threshold(inst.p, inst.h, inst.b);
    let precondition_met = match threshold {
        Some(rp) => inst.p >= inst.h + inst.b * inst.b / inst.h && willingness_sum >= 2.0 * rp,
        None => false,
    };
    if !precondition_met {
        return Ok(OrderingReport {
            precondition_met,
            passed: true,
            path: Vec::new(),
        });
    }
    let mid = willingness_sum / 2.0;
    let mut path = Vec::with_capacity(points);
    for k in 0..points {
        let r1 = mid - span + 2.0 * span * k as f64 / (points - 1) as f64;
        let q = best_plan_given_willingness(inst, [r1, willingness_sum - r1]);
        path.push((r1, q, safe_ratio(q[0] as f64, q[1] as f64)));
    }
    let passed = path.windows(2).all(|w| w[0].2 <= w[1].2);
    Ok(OrderingReport {
        precondition_met,
        passed,
        path,
    })
}
