use serde::{Deserialize, Serialize};

use super::config::EnvConfig;
use crate::error::{LabError, Result};

/// System state at a period boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub t: usize,
    pub on_hand: Vec<f64>,
    pub backlog: Vec<f64>,
    /// `pipeline[i][l]` is the order for product `i` placed `l + 1` periods ago.
    pub pipeline: Vec<Vec<f64>>,
    /// `willingness[i][j]`: product `i`, customer `j`.
    pub willingness: Vec<Vec<f64>>,
}

impl EnvState {
    pub fn num_products(&self) -> usize {
        self.on_hand.len()
    }

    /// Checks the structural invariants of a state produced under `config`.
    pub fn check(&self, config: &EnvConfig) -> Result<()> {
        let n = config.num_products;
        if self.on_hand.len() != n || self.backlog.len() != n || self.pipeline.len() != n || self.willingness.len() != n {
            return Err(LabError::Shape(format!("state does not have {n} products")));
        }
        for i in 0..n {
            if self.pipeline[i].len() != config.lead_time {
                return Err(LabError::Shape(format!("pipeline row {i} has wrong length")));
            }
            if self.willingness[i].len() != config.num_customers {
                return Err(LabError::Shape(format!("willingness row {i} has wrong length")));
            }
            if self.on_hand[i] < 0.0 || self.backlog[i] < 0.0 {
                return Err(LabError::Domain(format!("negative stock or backlog for product {i}")));
            }
            if self.on_hand[i] * self.backlog[i] != 0.0 {
                return Err(LabError::Domain(format!("product {i} holds stock and backlog at once")));
            }
            if self.willingness[i]
                .iter()
                .any(|&r| !(0.0..=config.willingness_cap).contains(&r))
            {
                return Err(LabError::Domain(format!("willingness of product {i} out of range")));
            }
        }
        Ok(())
    }

    /// Units in transit per product.
    pub fn in_transit(&self) -> Vec<f64> {
        self.pipeline.iter().map(|row| row.iter().sum()).collect()
    }
}

/// Replenishment orders and recommendation intensities for one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointAction {
    pub orders: Vec<f64>,
    /// `recommendations[i][j]`: intensity of product `i` shown to customer `j`.
    pub recommendations: Vec<Vec<f64>>,
}

impl JointAction {
    pub fn zeros(config: &EnvConfig) -> Self {
        Self {
            orders: vec![0.0; config.num_products],
            recommendations: vec![vec![0.0; config.num_customers]; config.num_products],
        }
    }

    /// Projects every component into its admissible box.
    pub fn clamp_to(mut self, config: &EnvConfig) -> Self {
        let cap = config.order_cap();
        for q in &mut self.orders {
            *q = q.clamp(0.0, cap);
        }
        for row in &mut self.recommendations {
            for a in row.iter_mut() {
                *a = a.clamp(0.0, 1.0);
            }
        }
        self
    }

    pub fn check(&self, config: &EnvConfig) -> Result<()> {
        if self.orders.len() != config.num_products || self.recommendations.len() != config.num_products {
            return Err(LabError::Shape("action has wrong number of products".into()));
        }
        let cap = config.order_cap();
        if let Some(q) = self.orders.iter().find(|q| !(0.0..=cap).contains(*q)) {
            return Err(LabError::Domain(format!("order {q} outside [0, {cap}]")));
        }
        for row in &self.recommendations {
            if row.len() != config.num_customers {
                return Err(LabError::Shape("recommendation row has wrong length".into()));
            }
            if let Some(a) = row.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(LabError::Domain(format!("recommendation {a} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn total_recommendation(&self, product: usize) -> f64 {
        self.recommendations[product].iter().sum()
    }
}

/// Everything that happened during one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub sales: Vec<f64>,
    pub demand: Vec<f64>,
    pub arrived: Vec<f64>,
    pub orders: Vec<f64>,
    pub per_product_profit: Vec<f64>,
    pub rec_cost: f64,
    pub reward: f64,
    pub new_state: EnvState,
}
