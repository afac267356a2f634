//! One customer, two products, one period.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Parameters of the single-period coordination model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinglePeriodInstance {
    /// Selling price (underage margin).
    pub p: f64,
    pub h: f64,
    pub b: f64,
    /// Cost per unit of recommendation intensity.
    pub r: f64,
    pub rbar: f64,
    pub r0: [f64; 2],
    pub qbar: f64,
}

impl SinglePeriodInstance {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("h", self.h), ("b", self.b), ("r", self.r)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(LabError::config(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.rbar.is_finite() && self.rbar > 0.0) {
            return Err(LabError::config("rbar", "must be positive"));
        }
        if !(self.qbar.is_finite() && self.qbar > 0.0) {
            return Err(LabError::config("qbar", "must be positive"));
        }
        if self.r0.iter().any(|&x| !x.is_finite() || x > self.rbar) {
            return Err(LabError::config("r0", "initial willingness must be finite and <= rbar"));
        }
        Ok(())
    }

    /// The same instance with products relabeled.
    pub fn swapped(&self) -> Self {
        Self {
            r0: [self.r0[1], self.r0[0]],
            ..*self
        }
    }

    /// Willingness after recommendation `alpha`.
    pub fn willingness(&self, alpha: [f64; 2]) -> [f64; 2] {
        [0, 1].map(|i| self.r0[i] + (self.rbar - self.r0[i]) * alpha[i])
    }

    fn check_decision(&self, q: [f64; 2], alpha: [f64; 2]) -> Result<()> {
        if q.iter().any(|&x| !(0.0..=self.qbar).contains(&x)) {
            return Err(LabError::Domain(format!("order {q:?} outside [0, {}]", self.qbar)));
        }
        if alpha.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
            return Err(LabError::Domain(format!("recommendation {alpha:?} outside [0, 1]")));
        }
        Ok(())
    }
}

/// Two-product logit choice probabilities.
pub fn choice_probs(r: [f64; 2]) -> [f64; 2] {
    let m = r[0].max(r[1]);
    let e = [(r[0] - m).exp(), (r[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

/// Profit of one product given its order and realized unit demand `d`.
fn product_profit(inst: &SinglePeriodInstance, q: f64, d: f64) -> f64 {
    let s = d.min(q);
    inst.p * s - inst.h * (q - s) - inst.b * (d - s)
}

/// Exact expected profit, enumerating which product the customer buys.
pub fn exact_expected_profit_sp(inst: &SinglePeriodInstance, q: [f64; 2], alpha: [f64; 2]) -> Result<f64> {
    inst.check_decision(q, alpha)?;
    let gamma = choice_probs(inst.willingness(alpha));
    let mut value = 0.0;
    for (k, g) in gamma.iter().enumerate() {
        let d = [(k == 0) as u8 as f64, (k == 1) as u8 as f64];
        value += g * (product_profit(inst, q[0], d[0]) + product_profit(inst, q[1], d[1]));
    }
    Ok(value - inst.r * (alpha[0] + alpha[1]))
}

/// Fractile-optimal orders given recommendations. Ties go to the larger quantity.
pub fn optimal_q_given_alpha(inst: &SinglePeriodInstance, alpha: [f64; 2]) -> Result<[f64; 2]> {
    let total = inst.p + inst.h + inst.b;
    if total <= 0.0 {
        return Err(LabError::Degenerate("p + h + b = 0".into()));
    }
    let gamma = choice_probs(inst.willingness(alpha));
    let fractile = inst.h / total;
    Ok(gamma.map(|g| {
        if inst.h == 0.0 {
            inst.qbar
        } else if g >= fractile {
            inst.qbar.min(1.0)
        } else {
            0.0
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeMetrics {
    pub rme: f64,
    pub rmp: f64,
    pub zeta: f64,
}

pub fn relative_metrics(inst: &SinglePeriodInstance, q: [f64; 2]) -> Result<RelativeMetrics> {
    let gap = inst.rbar - inst.r0[0];
    if gap <= 0.0 {
        return Err(LabError::Degenerate(
            "initial willingness of product 1 already at the cap".into(),
        ));
    }
    let short = |x: f64| (1.0 - x).max(0.0);
    Ok(RelativeMetrics {
        rme: inst.r0[1] - inst.r0[0],
        rmp: (inst.p + inst.h + inst.b) * (short(q[1]) - short(q[0])),
        zeta: inst.r / gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeLabel {
    NoRecInsufficientRmp,
    NoRecInefficient,
    RecProduct1,
    RecProduct2,
    BoundaryNumeric,
}

impl RegimeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeLabel::NoRecInsufficientRmp => "no_rec_insufficient_rmp",
            RegimeLabel::NoRecInefficient => "no_rec_inefficient",
            RegimeLabel::RecProduct1 => "rec_product_1",
            RegimeLabel::RecProduct2 => "rec_product_2",
            RegimeLabel::BoundaryNumeric => "boundary_numeric",
        }
    }
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `0.5 ln((1+x)/(1-x))` with the argument clipped below one.
pub fn artanh(x: f64) -> f64 {
    let x = x.clamp(-(1.0 - 1e-15), 1.0 - 1e-15);
    0.5 * ((1.0 + x) / (1.0 - x)).ln()
}

/// Optimal intensity on the focus product when RMP > 0.
///
/// The objective in the focus intensity is `RMP * sigma(x) - r * alpha` with
/// `x = gap * alpha - RME`; it rises exactly on `|x| < x*`.
fn focus_intensity(rme: f64, rmp: f64, zeta: f64, gap: f64, r: f64) -> (f64, RegimeLabel) {
    if rmp <= 4.0 * zeta {
        return (0.0, RegimeLabel::NoRecInsufficientRmp);
    }
    let x_star = 2.0 * artanh((1.0 - 4.0 * zeta / rmp).sqrt());
    let candidate = ((x_star + rme) / gap).min(1.0);
    let x0 = -rme;
    if x0 >= x_star {
        return (0.0, RegimeLabel::NoRecInefficient);
    }
    if x0 > -x_star {
        return (candidate, RegimeLabel::RecProduct1);
    }
    // Profit first falls, then rises, then falls again: compare both local maxima.
    let value = |a: f64| {
        let x = gap * a - rme;
        rmp / (1.0 + (-x).exp()) - r * a
    };
    let alpha = if value(candidate) > value(0.0) { candidate } else { 0.0 };
    (alpha, RegimeLabel::BoundaryNumeric)
}

/// Closed-form optimal recommendation given orders, with its regime.
pub fn optimal_alpha_given_q(inst: &SinglePeriodInstance, q: [f64; 2]) -> Result<([f64; 2], RegimeLabel)> {
    inst.validate()?;
    let m = relative_metrics(inst, q)?;
    if m.rmp >= 0.0 {
        let (a, regime) = focus_intensity(m.rme, m.rmp, m.zeta, inst.rbar - inst.r0[0], inst.r);
        return Ok(([a, 0.0], regime));
    }
    let gap = inst.rbar - inst.r0[1];
    if gap <= 0.0 {
        return Ok(([0.0, 0.0], RegimeLabel::NoRecInefficient));
    }
    let (a, regime) = focus_intensity(-m.rme, -m.rmp, inst.r / gap, gap, inst.r);
    let regime = match regime {
        RegimeLabel::RecProduct1 => RegimeLabel::RecProduct2,
        other => other,
    };
    Ok(([0.0, a], regime))
}
