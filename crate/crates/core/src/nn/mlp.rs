use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Fully connected network: tanh on hidden layers, identity on the output.
///
/// Weights of layer `k` are stored row-major with shape `widths[k+1] x widths[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    widths: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    #[serde(skip)]
    version: u64,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each layer (`inputs[0]` is the network input).
    inputs: Vec<Vec<f64>>,
    version: u64,
}

/// Gradient (or any other tensor) with the shapes of an [`Mlp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpGrad {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGrad {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn same_shape(&self, other: &MlpGrad) -> bool {
        self.weights.len() == other.weights.len()
            && self.weights.iter().zip(&other.weights).all(|(a, b)| a.len() == b.len())
            && self.biases.iter().zip(&other.biases).all(|(a, b)| a.len() == b.len())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &MlpGrad, scale: f64) -> Result<()> {
        if !self.same_shape(other) {
            return Err(LabError::Shape("gradient shapes differ".into()));
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        self.weights.iter_mut().flatten().for_each(|x| *x *= s);
        self.biases.iter_mut().flatten().for_each(|x| *x *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().flatten().chain(self.biases.iter().flatten()).all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .flatten()
            .chain(self.biases.iter().flatten())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

impl Mlp {
    /// Uniform weights in `±1/sqrt(fan_in)`, zero biases.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(widths)?;
        for (k, w) in net.weights.iter_mut().enumerate() {
            let bound = 1.0 / (widths[k] as f64).sqrt();
            for x in w.iter_mut() {
                *x = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn zeros(widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(LabError::Shape(format!("invalid layer widths {widths:?}")));
        }
        Ok(Self {
            widths: widths.to_vec(),
            weights: widths.windows(2).map(|p| vec![0.0; p[0] * p[1]]).collect(),
            biases: widths[1..].iter().map(|&n| vec![0.0; n]).collect(),
            version: 0,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_len(&self) -> usize {
        self.widths[0]
    }

    pub fn output_len(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    /// Mutation counter; caches from older versions are rejected by `backward`.
    pub fn version(&self) -> u64 {
        self.version
    }

    /// Sets the bias of output unit `k`.
    pub fn set_output_bias(&mut self, k: usize, value: f64) -> Result<()> {
        let last = self.biases.len() - 1;
        let slot = self.biases[last]
            .get_mut(k)
            .ok_or_else(|| LabError::Shape(format!("output unit {k} out of range")))?;
        *slot = value;
        self.version += 1;
        Ok(())
    }

    /// Multiplies the output layer by `factor`.
    pub fn scale_output(&mut self, factor: f64) {
        let last = self.weights.len() - 1;
        self.weights[last].iter_mut().for_each(|x| *x *= factor);
        self.biases[last].iter_mut().for_each(|x| *x *= factor);
        self.version += 1;
    }

    /// All parameters as `[W0, b0, W1, b1, ...]`.
    pub fn flat(&self) -> Vec<f64> {
        MlpGrad {
            weights: self.weights.clone(),
            biases: self.biases.clone(),
        }
        .flat()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(LabError::Shape(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                values.len()
            )));
        }
        let mut it = values.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().chain(b.iter_mut()).for_each(|x| *x = it.next().unwrap());
        }
        self.version += 1;
        Ok(())
    }

    fn layer(&self, k: usize, x: &[f64], out: &mut Vec<f64>) {
        let (n_in, n_out) = (self.widths[k], self.widths[k + 1]);
        let w = &self.weights[k];
        out.clear();
        out.extend(self.biases[k].iter().enumerate().map(|(o, &b)| {
            let row = &w[o * n_in..(o + 1) * n_in];
            b + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        }));
        debug_assert_eq!(out.len(), n_out);
        if k + 1 < self.num_layers() {
            out.iter_mut().for_each(|v| *v = v.tanh());
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_len() {
            return Err(LabError::Shape(format!(
                "input has length {}, network expects {}",
                x.len(),
                self.input_len()
            )));
        }
        Ok(())
    }

    /// Output only.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for k in 0..self.num_layers() {
            self.layer(k, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Output plus the cache needed by [`Mlp::backward`].
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.num_layers());
        inputs.push(x.to_vec());
        let mut out = Vec::new();
        for k in 0..self.num_layers() {
            self.layer(k, &inputs[k], &mut out);
            if k + 1 < self.num_layers() {
                inputs.push(out.clone());
            }
        }
        Ok((
            out,
            MlpCache {
                inputs,
                version: self.version,
            },
        ))
    }

    /// Gradient of a scalar loss with respect to parameters and input, given `dL/dy`.
    pub fn backward(&self, cache: &MlpCache, dy: &[f64]) -> Result<(MlpGrad, Vec<f64>)> {
        if cache.version != self.version || cache.inputs.len() != self.num_layers() {
            return Err(LabError::Usage("backward called with a stale forward cache".into()));
        }
        if dy.len() != self.output_len() {
            return Err(LabError::Shape(format!(
                "output gradient has length {}, network outputs {}",
                dy.len(),
                self.output_len()
            )));
        }
        let mut grad = MlpGrad::zeros_like(self);
        let mut delta = dy.to_vec();
        for k in (0..self.num_layers()).rev() {
            let n_in = self.widths[k];
            let x = &cache.inputs[k];
            let gw = &mut grad.weights[k];
            for (o, &d) in delta.iter().enumerate() {
                grad.biases[k][o] = d;
                let row = &mut gw[o * n_in..(o + 1) * n_in];
                row.iter_mut().zip(x).for_each(|(g, &xi)| *g = d * xi);
            }
            let w = &self.weights[k];
            let mut prev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                prev.iter_mut().zip(row).for_each(|(p, &wi)| *p += d * wi);
            }
            if k > 0 {
                // Layer input is tanh(pre); d tanh = 1 - tanh^2.
                prev.iter_mut().zip(x).for_each(|(p, &a)| *p *= 1.0 - a * a);
            }
            delta = prev;
        }
        Ok((grad, delta))
    }

    /// `theta += step * grad`; fails without modifying anything on non-finite input.
    pub fn apply(&mut self, grad: &MlpGrad, step: f64) -> Result<()> {
        if !grad.is_finite() || !step.is_finite() {
            return Err(LabError::Divergence("non-finite gradient in network update".into()));
        }
        let mut view = MlpGrad {
            weights: std::mem::take(&mut self.weights),
            biases: std::mem::take(&mut self.biases),
        };
        let res = view.add_scaled(grad, step);
        self.weights = view.weights;
        self.biases = view.biases;
        res?;
        self.version += 1;
        Ok(())
    }

    pub(crate) fn from_parts(widths: Vec<usize>, weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>) -> Result<Self> {
        let mut net = Self::zeros(&widths)?;
        if weights.len() != net.weights.len()
            || weights.iter().zip(&net.weights).any(|(a, b)| a.len() != b.len())
            || biases.iter().zip(&net.biases).any(|(a, b)| a.len() != b.len())
        {
            return Err(LabError::Shape("parameter arrays do not match widths".into()));
        }
        net.weights = weights;
        net.biases = biases;
        Ok(net)
    }
}
