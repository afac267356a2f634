use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, MlpGrad};
use crate::error::{LabError, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
pub const LOG_STD_INIT: f64 = -0.5;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Diagonal Gaussian policy with a state-independent standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianHead {
    pub mean: Mlp,
    pub log_std: Vec<f64>,
}

/// Gradient with respect to a [`GaussianHead`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradBuffer {
    pub mean: MlpGrad,
    pub log_std: Vec<f64>,
}

impl GradBuffer {
    pub fn zeros_like(head: &GaussianHead) -> Self {
        Self {
            mean: MlpGrad::zeros_like(&head.mean),
            log_std: vec![0.0; head.log_std.len()],
        }
    }

    pub fn add_scaled(&mut self, other: &GradBuffer, scale: f64) -> Result<()> {
        if self.log_std.len() != other.log_std.len() {
            return Err(LabError::Shape("log-std gradient lengths differ".into()));
        }
        self.mean.add_scaled(&other.mean, scale)?;
        self.log_std.iter_mut().zip(&other.log_std).for_each(|(a, b)| *a += scale * b);
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        self.mean.scale(s);
        self.log_std.iter_mut().for_each(|x| *x *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.mean.is_finite() && self.log_std.iter().all(|x| x.is_finite())
    }

    /// Euclidean norm over all components.
    pub fn norm(&self) -> f64 {
        (self.mean.norm().powi(2) + self.log_std.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }
}

/// Map from the raw Gaussian sample to a feasible action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SquashKind {
    /// `(tanh(raw) + 1) / 2`.
    RecUnitInterval,
    /// `round(clip(raw, 0, cap))`.
    OrderIntegerBox { cap: f64 },
    /// `clip(raw, 0, cap)`, for continuous demand.
    OrderContinuousBox { cap: f64 },
}

impl SquashKind {
    pub fn apply(&self, raw: f64) -> f64 {
        match *self {
            SquashKind::RecUnitInterval => 0.5 * (raw.tanh() + 1.0),
            SquashKind::OrderIntegerBox { cap } => raw.clamp(0.0, cap).round().min(cap.floor()),
            SquashKind::OrderContinuousBox { cap } => raw.clamp(0.0, cap),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySample {
    pub raw: Vec<f64>,
    pub action: Vec<f64>,
    pub logp: f64,
}

/// Log-density of `raw` under `N(mean, exp(log_std)^2)`.
pub fn diag_gaussian_logprob(mean: &[f64], log_std: &[f64], raw: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(raw)
        .map(|((&m, &ls), &a)| {
            let z = (a - m) * (-ls).exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

impl GaussianHead {
    pub fn new<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Result<Self> {
        let mean = Mlp::new(widths, rng)?;
        let d = mean.output_len();
        Ok(Self {
            mean,
            log_std: vec![LOG_STD_INIT; d],
        })
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    fn check_action(&self, raw: &[f64]) -> Result<()> {
        if raw.len() != self.action_dim() {
            return Err(LabError::Shape(format!(
                "action has length {}, head emits {}",
                raw.len(),
                self.action_dim()
            )));
        }
        Ok(())
    }

    pub fn logprob(&self, x: &[f64], raw: &[f64]) -> Result<f64> {
        self.check_action(raw)?;
        let mu = self.mean.predict(x)?;
        Ok(diag_gaussian_logprob(&mu, &self.log_std, raw))
    }

    /// Log-density of `raw` and its gradient with respect to all head parameters.
    pub fn logprob_and_grad(&self, x: &[f64], raw: &[f64]) -> Result<(f64, GradBuffer)> {
        self.check_action(raw)?;
        let (mu, cache) = self.mean.forward(x)?;
        let logp = diag_gaussian_logprob(&mu, &self.log_std, raw);
        let mut d_mu = Vec::with_capacity(mu.len());
        let mut d_ls = Vec::with_capacity(mu.len());
        for ((&m, &ls), &a) in mu.iter().zip(&self.log_std).zip(raw) {
            let inv_var = (-2.0 * ls).exp();
            let diff = a - m;
            d_mu.push(diff * inv_var);
            d_ls.push(diff * diff * inv_var - 1.0);
        }
        let (mean, _) = self.mean.backward(&cache, &d_mu)?;
        Ok((logp, GradBuffer { mean, log_std: d_ls }))
    }

    /// Samples a raw action (or takes the mean when `deterministic`) and squashes it.
    ///
    /// `kinds` assigns a squash to each output; a single entry is broadcast.
    pub fn sample_and_squash<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        rng: &mut R,
        kinds: &[SquashKind],
        deterministic: bool,
    ) -> Result<PolicySample> {
        let d = self.action_dim();
        if kinds.len() != 1 && kinds.len() != d {
            return Err(LabError::Shape(format!("{} squash kinds for {d} outputs", kinds.len())));
        }
        let mu = self.mean.predict(x)?;
        let raw: Vec<f64> = if deterministic {
            mu.clone()
        } else {
            mu.iter()
                .zip(&self.log_std)
                .map(|(&m, &ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let action = raw
            .iter()
            .enumerate()
            .map(|(k, &r)| kinds[if kinds.len() == 1 { 0 } else { k }].apply(r))
            .collect();
        let logp = diag_gaussian_logprob(&mu, &self.log_std, &raw);
        Ok(PolicySample { raw, action, logp })
    }

    /// Plain gradient step `theta += step * grad`, then clamps the log-std.
    pub fn apply(&mut self, grad: &GradBuffer, step: f64) -> Result<()> {
        sgd_apply(self, grad, step)
    }
}

/// `theta += step * grad` on a Gaussian head (use a negative step for descent).
pub fn sgd_apply(head: &mut GaussianHead, grad: &GradBuffer, step: f64) -> Result<()> {
    if !grad.is_finite() || !step.is_finite() {
        return Err(LabError::Divergence(format!(
            "non-finite policy gradient (step {step})"
        )));
    }
    if grad.log_std.len() != head.log_std.len() {
        return Err(LabError::Shape("log-std gradient length mismatch".into()));
    }
    head.mean.apply(&grad.mean, step)?;
    for (ls, g) in head.log_std.iter_mut().zip(&grad.log_std) {
        *ls = (*ls + step * g).clamp(LOG_STD_MIN, LOG_STD_MAX);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn logprob_at_mean_with_unit_scale() {
        let mut head = GaussianHead {
            mean: Mlp::zeros(&[2, 3]).unwrap(),
            log_std: vec![0.0; 3],
        };
        let lp = head.logprob(&[0.4, 0.1], &[0.0; 3]).unwrap();
        assert!((lp + 1.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
        head.log_std = vec![LOG_STD_INIT; 3];
        assert!(head.logprob(&[0.0, 0.0], &[0.0; 2]).is_err());
    }

    #[test]
    fn squash_codomains() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let raw: f64 = rng.random_range(-20.0..20.0);
            let a = SquashKind::RecUnitInterval.apply(raw);
            assert!((0.0..=1.0).contains(&a));
            let q = SquashKind::OrderIntegerBox { cap: 5.0 }.apply(raw);
            assert!((0.0..=5.0).contains(&q) && q.fract() == 0.0);
            let q = SquashKind::OrderContinuousBox { cap: 2.5 }.apply(raw);
            assert!((0.0..=2.5).contains(&q));
        }
    }

    #[test]
    fn deterministic_mode_returns_squashed_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let head = GaussianHead::new(&[3, 4, 2], &mut rng).unwrap();
        let x = [0.2, -0.4, 0.9];
        let mu = head.mean.predict(&x).unwrap();
        let s = head
            .sample_and_squash(&x, &mut rng, &[SquashKind::RecUnitInterval], true)
            .unwrap();
        assert_eq!(s.raw, mu);
        assert_eq!(s.action, mu.iter().map(|&m| 0.5 * (m.tanh() + 1.0)).collect::<Vec<_>>());
    }

    #[test]
    fn zero_step_leaves_head_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut head = GaussianHead::new(&[2, 3, 1], &mut rng).unwrap();
        let before = head.clone();
        let (_, g) = head.logprob_and_grad(&[0.1, 0.2], &[0.7]).unwrap();
        head.apply(&g, 0.0).unwrap();
        assert_eq!(head.mean.flat(), before.mean.flat());
        assert_eq!(head.log_std, before.log_std);
    }

    #[test]
    fn log_std_is_clamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut head = GaussianHead::new(&[2, 1], &mut rng).unwrap();
        let mut g = GradBuffer::zeros_like(&head);
        g.log_std = vec![1e6];
        head.apply(&g, 1.0).unwrap();
        assert_eq!(head.log_std, vec![LOG_STD_MAX]);
        head.apply(&g, -1.0).unwrap();
        assert_eq!(head.log_std, vec![LOG_STD_MIN]);
    }
}
