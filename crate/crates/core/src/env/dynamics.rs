//! Per-period transition primitives: willingness update, fulfillment and profit.

use super::config::{Economics, FulfillmentMode, Perturbation, PerturbationTarget};
use crate::error::{LabError, Result};

/// `R' = eta * R + (cap - eta * R) * alpha`, elementwise.
pub fn advance_willingness(
    willingness: &[Vec<f64>],
    recommendations: &[Vec<f64>],
    decay: f64,
    cap: f64,
) -> Result<Vec<Vec<f64>>> {
    if willingness.len() != recommendations.len() {
        return Err(LabError::Shape("willingness and recommendation rows differ".into()));
    }
    willingness
        .iter()
        .zip(recommendations)
        .map(|(r_row, a_row)| {
            if r_row.len() != a_row.len() {
                return Err(LabError::Shape("willingness and recommendation columns differ".into()));
            }
            r_row
                .iter()
                .zip(a_row)
                .map(|(&r, &a)| {
                    if !(0.0..=1.0).contains(&a) {
                        return Err(LabError::Domain(format!("recommendation {a} outside [0, 1]")));
                    }
                    let retained = decay * r;
                    Ok((retained + (cap - retained) * a).clamp(0.0, cap))
                })
                .collect()
        })
        .collect()
}

/// Sales, end inventory and end backlog for one period.
#[derive(Debug, Clone, PartialEq)]
pub struct Fulfillment {
    pub sales: Vec<f64>,
    pub on_hand: Vec<f64>,
    pub backlog: Vec<f64>,
}

/// Matches available stock against current demand plus carried backlog.
///
/// Sales are the smaller of demand-plus-backlog and stock-plus-arrivals, which
/// is the positive-part form `D + U - [D + U - I - arrived]^+` evaluated without
/// cancellation so that stock and backlog are never both positive.
pub fn fulfill(
    on_hand: &[f64],
    backlog: &[f64],
    arrived: &[f64],
    demand: &[f64],
    mode: FulfillmentMode,
) -> Result<Fulfillment> {
    let n = on_hand.len();
    if backlog.len() != n || arrived.len() != n || demand.len() != n {
        return Err(LabError::Shape("fulfill inputs have different lengths".into()));
    }
    let mut out = Fulfillment {
        sales: Vec::with_capacity(n),
        on_hand: Vec::with_capacity(n),
        backlog: Vec::with_capacity(n),
    };
    for i in 0..n {
        let (inv, carried, arr, d) = (on_hand[i], backlog[i], arrived[i], demand[i]);
        if inv < 0.0 || carried < 0.0 || arr < 0.0 || d < 0.0 {
            return Err(LabError::Domain(format!("negative fulfillment input for product {i}")));
        }
        let available = inv + arr;
        let wanted = match mode {
            FulfillmentMode::Backlog => d + carried,
            FulfillmentMode::LostSales => d,
        };
        let (sold, left, short) = if wanted <= available {
            (wanted, available - wanted, 0.0)
        } else {
            (available, 0.0, wanted - available)
        };
        out.sales.push(sold);
        out.on_hand.push(left);
        out.backlog.push(match mode {
            FulfillmentMode::Backlog => short,
            FulfillmentMode::LostSales => 0.0,
        });
    }
    Ok(out)
}

/// Per-product profit, total recommendation cost and the period reward.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodProfit {
    pub per_product: Vec<f64>,
    pub rec_cost: f64,
    pub reward: f64,
}

pub fn period_profit(
    sales: &[f64],
    orders: &[f64],
    on_hand: &[f64],
    backlog: &[f64],
    recommendations: &[Vec<f64>],
    econ: &Economics,
) -> PeriodProfit {
    let per_product: Vec<f64> = (0..sales.len())
        .map(|i| {
            econ.sell_price * sales[i]
                - econ.buy_price * orders[i]
                - econ.holding_cost * on_hand[i]
                - econ.backlog_cost * backlog[i]
        })
        .collect();
    let intensity: f64 = recommendations.iter().flat_map(|row| row.iter()).sum();
    let rec_cost = econ.rec_unit_cost * intensity;
    let reward = per_product.iter().sum::<f64>() - rec_cost;
    PeriodProfit {
        per_product,
        rec_cost,
        reward,
    }
}

/// Shifts `base` by the periodic shock for product `product` at period `t`.
///
/// Demand shocks are rounded when the perturbation asks for it and clipped at
/// zero; willingness shocks are clipped to `[0, upper]`.
pub fn apply_perturbation(base: f64, pert: &Perturbation, t: usize, product: usize, upper: f64) -> f64 {
    if pert.amplitude == 0.0 {
        return base;
    }
    let shifted = base + pert.signal(t, product);
    match pert.target {
        PerturbationTarget::Demand => {
            let v = if pert.round { shifted.round() } else { shifted };
            v.max(0.0)
        }
        PerturbationTarget::Willingness => shifted.clamp(0.0, upper),
    }
}
