use serde::{Deserialize, Serialize};

use super::single::{exact_expected_profit_sp, optimal_alpha_given_q, relative_metrics, SinglePeriodInstance};
use crate::error::Result;

/// One cell of a regime map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub p: f64,
    pub h: f64,
    pub b: f64,
    pub r: f64,
    pub rbar: f64,
    pub r0_1: f64,
    pub r0_2: f64,
    pub q1: f64,
    pub q2: f64,
    pub rme: f64,
    pub rmp: f64,
    pub zeta: f64,
    pub regime: String,
    pub alpha_star_1: f64,
    pub alpha_star_2: f64,
    pub oracle_value: f64,
}

/// Classifies every `(RME, RMP)` pair on the lattice.
///
/// RME is realized by shifting the second product's initial willingness and
/// RMP by a fractional first-product order (second-product order when negative).
/// Cells that cannot be realized under `base` are skipped.
pub fn regime_map(base: &SinglePeriodInstance, rmes: &[f64], rmps: &[f64]) -> Result<Vec<RegimeRow>> {
    base.validate()?;
    let total = base.p + base.h + base.b;
    let mut rows = Vec::new();
    for &rme in rmes {
        let r0_2 = base.r0[0] + rme;
        if r0_2 > base.rbar {
            continue;
        }
        for &rmp in rmps {
            let frac = rmp.abs() / total;
            if frac > 1.0 || frac > base.qbar {
                continue;
            }
            let q = if rmp >= 0.0 { [frac, 0.0] } else { [0.0, frac] };
            let inst = SinglePeriodInstance {
                r0: [base.r0[0], r0_2],
                ..*base
            };
            let m = relative_metrics(&inst, q)?;
            let (alpha, regime) = optimal_alpha_given_q(&inst, q)?;
            rows.push(RegimeRow {
                p: inst.p,
                h: inst.h,
                b: inst.b,
                r: inst.r,
                rbar: inst.rbar,
                r0_1: inst.r0[0],
                r0_2: inst.r0[1],
                q1: q[0],
                q2: q[1],
                rme: m.rme,
                rmp: m.rmp,
                zeta: m.zeta,
                regime: regime.to_string(),
                alpha_star_1: alpha[0],
                alpha_star_2: alpha[1],
                oracle_value: exact_expected_profit_sp(&inst, q, alpha)?,
            });
        }
    }
    Ok(rows)
}
