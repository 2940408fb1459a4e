//! Checks of a simulated series against the one-step conditional mean
//! `E[M_{i,t+1} | M_t] = (F - G) M_{i,t} + G M` and the stationary pair law.
//!
//! Standard errors use non-overlapping batch means in time, which absorbs the
//! serial dependence of the series.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::ObservationSeries;

/// A point estimate with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchEstimate {
    pub value: f64,
    pub se: f64,
    pub batches: usize,
}

impl BatchEstimate {
    /// `|value - target|` in units of `se`.
    pub fn z(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.se
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionFit {
    pub slope: BatchEstimate,
    pub intercept: BatchEstimate,
}

#[derive(Default, Clone, Copy)]
struct Moments2 {
    k: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
}

impl Moments2 {
    fn push(&mut self, x: f64, y: f64) {
        self.k += 1.0;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.sxy += x * y;
    }

    fn merge(&mut self, o: &Moments2) {
        self.k += o.k;
        self.sx += o.sx;
        self.sy += o.sy;
        self.sxx += o.sxx;
        self.sxy += o.sxy;
    }

    fn fit(&self) -> Option<(f64, f64)> {
        let vx = self.sxx - self.sx * self.sx / self.k;
        if !(vx > 0.0) {
            return None;
        }
        let slope = (self.sxy - self.sx * self.sy / self.k) / vx;
        Some((slope, (self.sy - slope * self.sx) / self.k))
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

fn batch_bounds(len: usize, batches: usize) -> Result<Vec<(usize, usize)>> {
    if batches < 2 || len < 2 * batches {
        return Err(Error::InsufficientSamples { needed: 2 * batches.max(2), got: len });
    }
    Ok((0..batches).map(|b| (b * len / batches, (b + 1) * len / batches)).collect())
}

/// Pooled least-squares fit of `M_{i,t+1}` on `M_{i,t}` over all vertices
/// and transitions. The point estimate uses every transition; the standard
/// error comes from the spread of the per-batch fits.
pub fn lag1_regression(series: &ObservationSeries, batches: usize) -> Result<RegressionFit> {
    let transitions = series.len().saturating_sub(1);
    let bounds = batch_bounds(transitions, batches)?;
    let mut per_batch = Vec::with_capacity(batches);
    for &(a, b) in &bounds {
        let mut m = Moments2::default();
        for t in a..b {
            for (&x, &y) in series.row(t).iter().zip(series.row(t + 1)) {
                m.push(x as f64, y as f64);
            }
        }
        per_batch.push(m);
    }
    let mut all = Moments2::default();
    per_batch.iter().for_each(|m| all.merge(m));
    let degenerate = || Error::Degenerate("counts never vary; regression undefined".into());
    let (slope, intercept) = all.fit().ok_or_else(degenerate)?;
    let fits = per_batch.iter().map(|m| m.fit().ok_or_else(degenerate)).collect::<Result<Vec<_>>>()?;
    let slopes: Vec<f64> = fits.iter().map(|f| f.0).collect();
    let intercepts: Vec<f64> = fits.iter().map(|f| f.1).collect();
    let root = (batches as f64).sqrt();
    Ok(RegressionFit {
        slope: BatchEstimate { value: slope, se: mean_sd(&slopes).1 / root, batches },
        intercept: BatchEstimate { value: intercept, se: mean_sd(&intercepts).1 / root, batches },
    })
}

/// Batch-means estimate of the per-row mean of `f(row)`.
pub fn row_mean(series: &ObservationSeries, batches: usize, f: impl Fn(&[u32]) -> f64) -> Result<BatchEstimate> {
    let bounds = batch_bounds(series.len(), batches)?;
    let means: Vec<f64> =
        bounds.iter().map(|&(a, b)| (a..b).map(|t| f(series.row(t))).sum::<f64>() / (b - a) as f64).collect();
    let total = (0..series.len()).map(|t| f(series.row(t))).sum::<f64>() / series.len() as f64;
    Ok(BatchEstimate { value: total, se: mean_sd(&means).1 / (batches as f64).sqrt(), batches })
}

/// Fraction of ordered walker pairs sharing a vertex, `sum_i M_i (M_i - 1) / (M (M - 1))`,
/// averaged over rows. In stationarity this equals `n` times the same-vertex
/// probability of a fixed pair.
pub fn coincidence_rate(series: &ObservationSeries, batches: usize) -> Result<BatchEstimate> {
    let m = series.dims().m() as f64;
    if m < 2.0 {
        return Err(Error::Domain("coincidence needs at least two walkers".into()));
    }
    row_mean(series, batches, |row| row.iter().map(|&v| v as f64 * (v as f64 - 1.0)).sum::<f64>() / (m * (m - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::ModelDims;

    fn series(n: usize, m: usize, rows: &[Vec<u32>]) -> ObservationSeries {
        ObservationSeries::from_rows(ModelDims::new(n, m).unwrap(), rows).unwrap()
    }

    #[test]
    fn exact_linear_relation_is_recovered() {
        // x_{t+1} = 3 - x_t on each vertex
        let rows: Vec<Vec<u32>> = (0..41).map(|t| if t % 2 == 0 { vec![0, 3] } else { vec![3, 0] }).collect();
        let fit = lag1_regression(&series(2, 3, &rows), 4).unwrap();
        assert!((fit.slope.value + 1.0).abs() < 1e-12);
        assert!((fit.intercept.value - 3.0).abs() < 1e-12);
        assert!(fit.slope.se < 1e-12);
    }

    #[test]
    fn constant_counts_are_degenerate() {
        let rows = vec![vec![1, 1]; 20];
        assert!(matches!(lag1_regression(&series(2, 2, &rows), 4), Err(Error::Degenerate(_))));
    }

    #[test]
    fn too_few_rows_for_batches() {
        let rows = vec![vec![2, 0]; 5];
        assert!(matches!(row_mean(&series(2, 2, &rows), 4, |r| r[0] as f64), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn coincidence_of_stacked_walkers_is_one() {
        let rows = vec![vec![0, 4, 0]; 10];
        let est = coincidence_rate(&series(3, 4, &rows), 2).unwrap();
        assert_eq!(est.value, 1.0);
    }
}
