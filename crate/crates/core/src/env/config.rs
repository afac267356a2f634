use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Unit prices and costs of the platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Economics {
    /// Selling price per unit sold.
    pub sell_price: f64,
    /// Procurement price per unit ordered.
    pub buy_price: f64,
    /// Holding cost per unit of end-of-period stock.
    pub holding_cost: f64,
    /// Backlog penalty per unit of unmet demand carried forward.
    pub backlog_cost: f64,
    /// Cost per unit of recommendation intensity.
    pub rec_unit_cost: f64,
}

impl Default for Economics {
    fn default() -> Self {
        Self {
            sell_price: 2.0,
            buy_price: 1.0,
            holding_cost: 0.1,
            backlog_cost: 0.5,
            rec_unit_cost: 0.025,
        }
    }
}

impl Economics {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("econ.sell_price", self.sell_price),
            ("econ.buy_price", self.buy_price),
            ("econ.holding_cost", self.holding_cost),
            ("econ.backlog_cost", self.backlog_cost),
            ("econ.rec_unit_cost", self.rec_unit_cost),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(LabError::config(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if self.sell_price <= self.buy_price {
            log::warn!(
                "sell price {} does not exceed buy price {}; no order is ever profitable",
                self.sell_price,
                self.buy_price
            );
        }
        Ok(())
    }
}

/// How individual customer demands are generated from willingness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandModel {
    /// Each customer buys exactly one unit of one product, chosen with softmax
    /// probabilities over their willingness.
    #[default]
    SoftmaxCategorical,
    /// Each customer makes `trials` independent softmax choices.
    Multinomial { trials: u32 },
    /// Independent Poisson demand with mean `scale * gamma`.
    Poisson { scale: f64 },
    /// Independent exponential demand with mean `scale * gamma` (continuous).
    Exponential { scale: f64 },
}

impl DemandModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DemandModel::Poisson { scale } | DemandModel::Exponential { scale } => {
                if !(scale.is_finite() && scale >= 0.0) {
                    return Err(LabError::config(
                        "demand_model.scale",
                        format!("must be finite and >= 0, got {scale}"),
                    ));
                }
            }
            DemandModel::SoftmaxCategorical | DemandModel::Multinomial { .. } => {}
        }
        Ok(())
    }

    /// Whether demands are integer valued (orders are rounded to integers).
    pub fn is_discrete(&self) -> bool {
        !matches!(self, DemandModel::Exponential { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FulfillmentMode {
    #[default]
    Backlog,
    LostSales,
}

/// Full parameterization of the simulated platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub num_products: usize,
    pub num_customers: usize,
    pub horizon: usize,
    pub lead_time: usize,
    /// Upper bound accepted for `lead_time`.
    pub max_lead_time: usize,
    /// Willingness retention factor in (0, 1).
    pub decay: f64,
    pub willingness_cap: f64,
    pub econ: Economics,
    pub demand_model: DemandModel,
    pub fulfillment: FulfillmentMode,
    /// Per-product order cap; `None` means one unit per customer.
    pub capacity: Option<f64>,
    pub discount: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            num_products: 2,
            num_customers: 5,
            horizon: 50,
            lead_time: 2,
            max_lead_time: 10,
            decay: 0.9,
            willingness_cap: 5.0,
            econ: Economics::default(),
            demand_model: DemandModel::default(),
            fulfillment: FulfillmentMode::default(),
            capacity: None,
            discount: 0.99,
        }
    }
}

impl EnvConfig {
    /// Scale used by the experiments of the original study (5 products, 20 customers).
    pub fn full_scale() -> Self {
        Self {
            num_products: 5,
            num_customers: 20,
            horizon: 100,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_products == 0 {
            return Err(LabError::config("num_products", "must be positive"));
        }
        if self.num_customers == 0 {
            return Err(LabError::config("num_customers", "must be positive"));
        }
        if self.horizon == 0 {
            return Err(LabError::config("horizon", "must be positive"));
        }
        if self.lead_time > self.max_lead_time {
            return Err(LabError::config(
                "lead_time",
                format!("{} exceeds max_lead_time {}", self.lead_time, self.max_lead_time),
            ));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(LabError::config("decay", format!("must lie in (0,1), got {}", self.decay)));
        }
        if !(self.willingness_cap.is_finite() && self.willingness_cap > 0.0) {
            return Err(LabError::config(
                "willingness_cap",
                format!("must be positive, got {}", self.willingness_cap),
            ));
        }
        if let Some(cap) = self.capacity {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(LabError::config("capacity", format!("must be positive, got {cap}")));
            }
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(LabError::config(
                "discount",
                format!("must lie in (0,1], got {}", self.discount),
            ));
        }
        self.econ.validate()?;
        self.demand_model.validate()?;
        Ok(())
    }

    /// Effective per-product order cap.
    pub fn order_cap(&self) -> f64 {
        self.capacity.unwrap_or(self.num_customers as f64)
    }

    /// Backlog is clipped here so that observations stay bounded.
    pub fn backlog_cap(&self) -> f64 {
        (self.num_customers * self.horizon) as f64
    }

    /// Length of the vector produced by [`crate::env::observe`].
    pub fn observation_len(&self) -> usize {
        let n = self.num_products;
        n + n * self.lead_time + n * self.num_customers
    }
}

/// Which state quantity a perturbation shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationTarget {
    Demand,
    Willingness,
}

/// Periodic exogenous shock `amplitude * sin(2*pi*(t + phase_i) / period_len)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub target: PerturbationTarget,
    pub amplitude: f64,
    pub period_len: usize,
    pub phases: Vec<f64>,
    #[serde(default = "default_true")]
    pub round: bool,
}

fn default_true() -> bool {
    true
}

impl Perturbation {
    /// Shared period with phases staggered evenly across products.
    pub fn staggered(target: PerturbationTarget, amplitude: f64, period_len: usize, n: usize) -> Self {
        let phases = (0..n)
            .map(|i| (i as f64) * period_len as f64 / n as f64)
            .collect();
        Self {
            target,
            amplitude,
            period_len,
            phases,
            round: true,
        }
    }

    pub fn validate(&self, num_products: usize) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(LabError::config("perturbation.amplitude", "must be >= 0"));
        }
        if self.period_len == 0 {
            return Err(LabError::config("perturbation.period_len", "must be positive"));
        }
        if self.phases.len() != num_products {
            return Err(LabError::config(
                "perturbation.phases",
                format!("expected {num_products} phases, got {}", self.phases.len()),
            ));
        }
        let p = self.period_len as f64;
        if self.phases.iter().any(|&ph| !(0.0..p).contains(&ph)) {
            return Err(LabError::config("perturbation.phases", "phases must lie in [0, period_len)"));
        }
        Ok(())
    }

    /// Raw shock (before rounding and clipping) at period `t` for product `i`.
    pub fn signal(&self, t: usize, product: usize) -> f64 {
        let arg = 2.0 * std::f64::consts::PI * (t as f64 + self.phases[product]) / self.period_len as f64;
        self.amplitude * arg.sin()
    }
}
