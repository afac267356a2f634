use std::io::Write;

use serde::{Deserialize, Serialize};

use super::state::{EnvState, JointAction, StepOutcome};
use crate::error::Result;

/// One row of a trajectory dump: a single product in a single period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub seed: u64,
    pub episode: usize,
    pub t: usize,
    pub product: usize,
    #[serde(rename = "I")]
    pub on_hand: f64,
    #[serde(rename = "U")]
    pub backlog: f64,
    pub arrived: f64,
    #[serde(rename = "D")]
    pub demand: f64,
    #[serde(rename = "S")]
    pub sales: f64,
    pub sum_alpha: f64,
    #[serde(rename = "P")]
    pub profit: f64,
    pub reward: f64,
}

impl TrajectoryRow {
    /// Rows for every product of one period. `t` is the period index before the step.
    pub fn from_step(seed: u64, episode: usize, prev: &EnvState, action: &JointAction, out: &StepOutcome) -> Vec<Self> {
        (0..out.sales.len())
            .map(|i| TrajectoryRow {
                seed,
                episode,
                t: prev.t,
                product: i,
                on_hand: out.new_state.on_hand[i],
                backlog: out.new_state.backlog[i],
                arrived: out.arrived[i],
                demand: out.demand[i],
                sales: out.sales[i],
                sum_alpha: action.total_recommendation(i),
                profit: out.per_product_profit[i],
                reward: out.reward,
            })
            .collect()
    }
}

/// CSV sink for trajectory rows.
pub struct TrajectoryWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(sink: W) -> Self {
        Self {
            inner: csv::Writer::from_writer(sink),
        }
    }

    pub fn write(&mut self, row: &TrajectoryRow) -> Result<()> {
        self.inner.serialize(row)?;
        Ok(())
    }

    pub fn write_all(&mut self, rows: &[TrajectoryRow]) -> Result<()> {
        for r in rows {
            self.write(r)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| crate::error::LabError::Io(e.into_error()))
    }
}
