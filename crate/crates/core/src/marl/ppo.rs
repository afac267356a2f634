//! Clipped surrogate, advantage reweighting and critic regression.

use crate::error::{LabError, Result};
use crate::nn::{GaussianHead, GradBuffer, Mlp, MlpGrad};

/// Upper bound on the reweighting ratio.
pub const MAX_REWEIGHT: f64 = 22_026.465_794_806_718; // e^10

/// Gradient of the clipped surrogate with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateGrad {
    pub grad: GradBuffer,
    /// Value of the surrogate at the evaluation point.
    pub objective: f64,
    /// Share of samples whose gradient was cut by the clip.
    pub clipped_fraction: f64,
}

fn check_batch(obs: &[Vec<f64>], raw: &[Vec<f64>], logp_old: &[f64], adv: &[f64]) -> Result<()> {
    let n = obs.len();
    if n == 0 {
        return Err(LabError::Shape("empty minibatch".into()));
    }
    if raw.len() != n || logp_old.len() != n || adv.len() != n {
        return Err(LabError::Shape("minibatch columns have different lengths".into()));
    }
    Ok(())
}

fn ratio(logp: f64, logp_old: f64, index: usize) -> Result<f64> {
    let rho = (logp - logp_old).exp();
    if !rho.is_finite() {
        return Err(LabError::Numerical(format!(
            "non-finite policy ratio at transition {index} (logp {logp}, old {logp_old})"
        )));
    }
    Ok(rho)
}

fn clipped_term(rho: f64, adv: f64, eps: f64) -> (f64, bool) {
    let unclipped = rho * adv;
    let clipped = rho.clamp(1.0 - eps, 1.0 + eps) * adv;
    if clipped < unclipped {
        (clipped, true)
    } else {
        (unclipped, false)
    }
}

/// `(1/B) sum min(rho A, clip(rho, 1-eps, 1+eps) A)`.
pub fn clipped_surrogate_value(
    head: &GaussianHead,
    obs: &[Vec<f64>],
    raw: &[Vec<f64>],
    logp_old: &[f64],
    adv: &[f64],
    eps: f64,
) -> Result<f64> {
    check_batch(obs, raw, logp_old, adv)?;
    let mut total = 0.0;
    for k in 0..obs.len() {
        let rho = ratio(head.logprob(&obs[k], &raw[k])?, logp_old[k], k)?;
        total += clipped_term(rho, adv[k], eps).0;
    }
    Ok(total / obs.len() as f64)
}

/// Gradient of [`clipped_surrogate_value`] in the head's parameters.
///
/// A sample contributes `A rho grad log pi` unless the clipped branch is the
/// strictly smaller one, in which case it contributes nothing.
pub fn clipped_surrogate_grad(
    head: &GaussianHead,
    obs: &[Vec<f64>],
    raw: &[Vec<f64>],
    logp_old: &[f64],
    adv: &[f64],
    eps: f64,
) -> Result<SurrogateGrad> {
    check_batch(obs, raw, logp_old, adv)?;
    let b = obs.len() as f64;
    let mut grad = GradBuffer::zeros_like(head);
    let mut objective = 0.0;
    let mut n_clipped = 0usize;
    for k in 0..obs.len() {
        let (logp, g) = head.logprob_and_grad(&obs[k], &raw[k])?;
        let rho = ratio(logp, logp_old[k], k)?;
        let (term, cut) = clipped_term(rho, adv[k], eps);
        objective += term;
        if cut {
            n_clipped += 1;
        } else {
            grad.add_scaled(&g, adv[k] * rho / b)?;
        }
    }
    Ok(SurrogateGrad {
        grad,
        objective: objective / b,
        clipped_fraction: n_clipped as f64 / b,
    })
}

/// `A'_k = min(exp(new_k - old_k), e^10) A_k`.
pub fn reweight_advantage(adv: &[f64], logp_old_first: &[f64], logp_new_first: &[f64]) -> Result<Vec<f64>> {
    if adv.len() != logp_old_first.len() || adv.len() != logp_new_first.len() {
        return Err(LabError::Shape("reweighting inputs have different lengths".into()));
    }
    Ok(adv
        .iter()
        .zip(logp_old_first.iter().zip(logp_new_first))
        .map(|(&a, (&old, &new))| {
            (new - old).exp().min(MAX_REWEIGHT) * a
        })
        .collect())
}

/// `(1/B) sum (v(s) - target)^2`.
pub fn critic_loss(critic: &Mlp, obs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    if obs.len() != targets.len() || obs.is_empty() {
        return Err(LabError::Shape("critic batch is empty or ragged".into()));
    }
    let mut total = 0.0;
    for (x, &t) in obs.iter().zip(targets) {
        total += (critic.predict(x)?[0] - t).powi(2);
    }
    Ok(total / obs.len() as f64)
}

/// Gradient of [`critic_loss`]; returns the loss alongside.
pub fn critic_grad(critic: &Mlp, obs: &[Vec<f64>], targets: &[f64]) -> Result<(MlpGrad, f64)> {
    if obs.len() != targets.len() || obs.is_empty() {
        return Err(LabError::Shape("critic batch is empty or ragged".into()));
    }
    let b = obs.len() as f64;
    let mut grad = MlpGrad::zeros_like(critic);
    let mut loss = 0.0;
    for (x, &t) in obs.iter().zip(targets) {
        let (v, cache) = critic.forward(x)?;
        let err = v[0] - t;
        loss += err * err;
        let (g, _) = critic.backward(&cache, &[2.0 * err / b])?;
        grad.add_scaled(&g, 1.0)?;
    }
    Ok((grad, loss / b))
}
