use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
    pub n: usize,
}

/// `mean +- 1.96 sd / sqrt(n)` with the sample standard deviation.
///
/// A single value gives a zero-width interval at that value.
pub fn aggregate_ci(values: &[f64]) -> Result<Interval> {
    if values.is_empty() {
        return Err(LabError::Degenerate("cannot aggregate an empty sample".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let half = if n == 1 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        1.96 * var.sqrt() / (n as f64).sqrt()
    };
    Ok(Interval {
        mean,
        low: mean - half,
        high: mean + half,
        n,
    })
}

/// Pearson correlation; `degenerate` marks a constant input reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub value: f64,
    pub degenerate: bool,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(LabError::Shape(format!("series of length {} and {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(LabError::Degenerate("correlation needs at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // Variance lost to rounding counts as constant.
    let flat = |ss: f64, m: f64| ss <= 1e-24 * n * (1.0 + m * m);
    if flat(sxx, mx) || flat(syy, my) {
        return Ok(Correlation {
            value: 0.0,
            degenerate: true,
        });
    }
    let scale = (sxx * syy).sqrt();
    Ok(Correlation {
        value: (sxy / scale).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Symmetric matrix of pairwise correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Pairs involving a constant series.
    pub degenerate: Vec<(usize, usize)>,
}

pub fn correlation_matrix(labels: Vec<String>, series: &[Vec<f64>]) -> Result<CorrelationMatrix> {
    if labels.len() != series.len() {
        return Err(LabError::Shape("one label per series required".into()));
    }
    let k = series.len();
    let mut values = vec![vec![0.0; k]; k];
    let mut degenerate = Vec::new();
    for a in 0..k {
        values[a][a] = 1.0;
        for b in a + 1..k {
            let c = pearson(&series[a], &series[b])?;
            if c.degenerate {
                degenerate.push((a, b));
            }
            values[a][b] = c.value;
            values[b][a] = c.value;
        }
    }
    Ok(CorrelationMatrix {
        labels,
        values,
        degenerate,
    })
}

/// Rectangular correlations between two groups of series.
pub fn cross_block(rows: &[Vec<f64>], cols: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| cols.iter().map(|c| Ok(pearson(r, c)?.value)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_examples() {
        let ci = aggregate_ci(&[0.0, 2.0]).unwrap();
        assert_eq!(ci.mean, 1.0);
        assert!((ci.high - ci.mean - 1.96).abs() < 1e-12);
        assert!((ci.mean - ci.low - 1.96).abs() < 1e-12);
        let c = aggregate_ci(&[3.5; 7]).unwrap();
        assert_eq!((c.low, c.mean, c.high), (3.5, 3.5, 3.5));
        let one = aggregate_ci(&[4.0]).unwrap();
        assert_eq!((one.low, one.high, one.n), (4.0, 4.0, 1));
        assert!(aggregate_ci(&[]).is_err());
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 4.0, 3.0];
        assert!((pearson(&x, &x).unwrap().value - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -2.0 * v).collect();
        assert!((pearson(&x, &neg).unwrap().value + 1.0).abs() < 1e-15);
        let flat = pearson(&x, &[2.0; 4]).unwrap();
        assert!(flat.degenerate && flat.value == 0.0);
    }

    #[test]
    fn matrix_shape() {
        let s = vec![vec![1.0, 2.0, 3.0], vec![3.0, 1.0, 2.0], vec![0.0, 0.0, 0.0]];
        let m = correlation_matrix(vec!["a".into(), "b".into(), "c".into()], &s).unwrap();
        for i in 0..3 {
            assert_eq!(m.values[i][i], 1.0);
            for j in 0..3 {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }
        assert_eq!(m.degenerate, vec![(0, 2), (1, 2)]);
    }
}
