use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Advantages and critic targets, one per transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageSet {
    pub advantages: Vec<f64>,
    /// `advantages + values`.
    pub targets: Vec<f64>,
}

fn check_lengths(rewards: &[f64], values: &[f64], dones: &[bool]) -> Result<()> {
    if rewards.len() != values.len() || rewards.len() != dones.len() {
        return Err(LabError::Shape(format!(
            "gae inputs: {} rewards, {} values, {} flags",
            rewards.len(),
            values.len(),
            dones.len()
        )));
    }
    Ok(())
}

/// TD residuals `r_k + iota v_{k+1} (1 - done_k) - v_k`.
///
/// `values[k]` is the critic at the state in which action `k` was taken; the
/// successor value is `values[k + 1]`. The end of the buffer counts as terminal.
pub fn td_residuals(rewards: &[f64], values: &[f64], dones: &[bool], iota: f64) -> Result<Vec<f64>> {
    check_lengths(rewards, values, dones)?;
    let n = rewards.len();
    Ok((0..n)
        .map(|k| {
            let next = if dones[k] || k + 1 == n { 0.0 } else { values[k + 1] };
            rewards[k] + iota * next - values[k]
        })
        .collect())
}

/// `A_k = sum_l (iota lambda)^l delta_{k+l}`, restarted at every episode boundary.
pub fn compute_gae(rewards: &[f64], values: &[f64], dones: &[bool], iota: f64, lambda: f64) -> Result<AdvantageSet> {
    let delta = td_residuals(rewards, values, dones, iota)?;
    let n = delta.len();
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for k in (0..n).rev() {
        if dones[k] {
            acc = 0.0;
        }
        acc = delta[k] + iota * lambda * acc;
        adv[k] = acc;
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok(AdvantageSet { advantages: adv, targets })
}

/// Quadratic-time evaluation of the same sum, for testing.
pub fn gae_reference(rewards: &[f64], values: &[f64], dones: &[bool], iota: f64, lambda: f64) -> Result<Vec<f64>> {
    let delta = td_residuals(rewards, values, dones, iota)?;
    let n = delta.len();
    let mut adv = vec![0.0; n];
    for k in 0..n {
        let mut w = 1.0;
        for l in k..n {
            adv[k] += w * delta[l];
            if dones[l] {
                break;
            }
            w *= iota * lambda;
        }
    }
    Ok(adv)
}

/// Zero mean, unit variance (population) rescaling; constant input maps to zeros.
pub fn normalize(adv: &mut [f64]) {
    let n = adv.len() as f64;
    if n == 0.0 {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    for a in adv.iter_mut() {
        *a = if sd > 1e-12 { (*a - mean) / sd } else { 0.0 };
    }
}
