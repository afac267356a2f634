use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

use super::config::DemandModel;

/// Softmax of `scores`, computed with max subtraction.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Purchase probabilities `gamma[i][j]`: softmax over products for each customer.
pub fn choice_matrix(willingness: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = willingness.len();
    let m = willingness.first().map_or(0, Vec::len);
    let mut gamma = vec![vec![0.0; m]; n];
    let mut column = vec![0.0; n];
    for j in 0..m {
        for i in 0..n {
            column[i] = willingness[i][j];
        }
        for (i, g) in softmax(&column).into_iter().enumerate() {
            gamma[i][j] = g;
        }
    }
    gamma
}

fn categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Individual demands `d[i][j]` drawn from `model` given willingness.
pub fn sample_demand<R: Rng + ?Sized>(willingness: &[Vec<f64>], model: &DemandModel, rng: &mut R) -> Vec<Vec<f64>> {
    let gamma = choice_matrix(willingness);
    let n = gamma.len();
    let m = gamma.first().map_or(0, Vec::len);
    let mut d = vec![vec![0.0; m]; n];
    let mut column = vec![0.0; n];
    for j in 0..m {
        for i in 0..n {
            column[i] = gamma[i][j];
        }
        match *model {
            DemandModel::SoftmaxCategorical => {
                d[categorical(&column, rng)][j] = 1.0;
            }
            DemandModel::Multinomial { trials } => {
                for _ in 0..trials {
                    d[categorical(&column, rng)][j] += 1.0;
                }
            }
            DemandModel::Poisson { scale } => {
                for i in 0..n {
                    let mean = scale * column[i];
                    if mean > 0.0 {
                        // Poisson::new only fails for non-positive or non-finite means.
                        d[i][j] = Poisson::new(mean).expect("positive finite mean").sample(rng);
                    }
                }
            }
            DemandModel::Exponential { scale } => {
                for i in 0..n {
                    let mean = scale * column[i];
                    if mean > 0.0 {
                        d[i][j] = Exp::new(1.0 / mean).expect("positive rate").sample(rng);
                    }
                }
            }
        }
    }
    d
}

/// Aggregate demand per product.
pub fn aggregate(individual: &[Vec<f64>]) -> Vec<f64> {
    individual.iter().map(|row| row.iter().sum()).collect()
}
