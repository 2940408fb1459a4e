//! Empirical statistics of an occupancy series and the two point estimators.
//!
//! Lag-1 products `M_{i,t} M_{i,t+1}` and squares `M_{i,t}^2` are averaged
//! over `t = 1..T-1` with divisor `T - 1`; the per-vertex means use all `T`
//! rows with divisor `T`.
//!
//! The method-of-moments estimator assumes the series is stationary. Series
//! read from outside the simulator carry no burn-in record, and callers are
//! responsible for discarding any transient themselves. The least-squares
//! estimator has no such requirement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invert::{invert_monotone_decreasing, Clamp};
use crate::moments::{lag1_cov_raw, slope_raw, ModelDims, P_MIN};
use crate::sim::ObservationSeries;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Bracket `[P_MIN, 1]` used for the method-of-moments inversion.
pub const DEFAULT_BRACKET: (f64, f64) = (P_MIN, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub dims: ModelDims,
    pub t: usize,
    /// Per-vertex means over all `T` rows.
    pub mean_counts: Vec<f64>,
    /// Per-vertex means of `M_{i,t} M_{i,t+1}` over `t = 1..T-1`.
    pub lag1_products: Vec<f64>,
    /// Per-vertex means of `M_{i,t}^2` over `t = 1..T-1`.
    pub squares: Vec<f64>,
    /// Empirical lag-1 covariance with the sample mean.
    pub c_hat: f64,
    /// Empirical lag-1 covariance with the known mean `M/n`.
    pub c_hat_known_mean: f64,
    pub burn_in: Option<usize>,
}

pub fn summarize(series: &ObservationSeries) -> Result<SummaryStats> {
    let t = series.len();
    if t < 2 {
        return Err(Error::Domain(format!("need at least 2 observations, got {t}")));
    }
    let dims = series.dims();
    let n = dims.n();
    let mut sums = vec![0u64; n];
    let mut prods = vec![0u64; n];
    let mut sq = vec![0u64; n];
    let mut prev: Option<&[u32]> = None;
    for row in series.rows() {
        for i in 0..n {
            sums[i] += row[i] as u64;
        }
        if let Some(before) = prev {
            for i in 0..n {
                let b = before[i] as u64;
                prods[i] += b * row[i] as u64;
                sq[i] += b * b;
            }
        }
        prev = Some(row);
    }

    let tf = t as f64;
    let pairs = (t - 1) as f64;
    let mean_counts: Vec<f64> = sums.iter().map(|&s| s as f64 / tf).collect();
    let lag1_products: Vec<f64> = prods.iter().map(|&s| s as f64 / pairs).collect();
    let squares: Vec<f64> = sq.iter().map(|&s| s as f64 / pairs).collect();

    let nf = n as f64;
    let known = dims.m() as f64 / nf;
    let c_hat = lag1_products.iter().zip(&mean_counts).map(|(v, u)| v - u * u).sum::<f64>() / nf;
    let c_hat_known_mean = lag1_products.iter().map(|v| v - known * known).sum::<f64>() / nf;

    Ok(SummaryStats {
        dims,
        t,
        mean_counts,
        lag1_products,
        squares,
        c_hat,
        c_hat_known_mean,
        burn_in: series.burn_in(),
    })
}

impl SummaryStats {
    /// `(n * sum(lag1_products) - M^2) / (n * sum(squares) - M^2)`, the
    /// statistic inverted by the least-squares estimator.
    pub fn ls_ratio(&self) -> Result<f64> {
        let nf = self.dims.n() as f64;
        let m2 = (self.dims.m() as f64).powi(2);
        let num = nf * self.lag1_products.iter().sum::<f64>() - m2;
        let den = nf * self.squares.iter().sum::<f64>() - m2;
        if den <= 1e-12 * m2 {
            return Err(Error::Degenerate(
                "counts are uniform and constant over the window; p is not identifiable".into(),
            ));
        }
        Ok(num / den)
    }
}

/// Which estimator produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "mom")]
    Mom,
    #[serde(rename = "mom-known-mean")]
    MomKnownMean,
    #[serde(rename = "ls")]
    Ls,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Mom, Method::MomKnownMean, Method::Ls];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mom => "mom",
            Method::MomKnownMean => "mom-known-mean",
            Method::Ls => "ls",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mom" => Ok(Method::Mom),
            "mom-known-mean" => Ok(Method::MomKnownMean),
            "ls" => Ok(Method::Ls),
            other => Err(Error::Parse(format!("unknown method {other:?} (mom, mom-known-mean, ls)"))),
        }
    }
}

/// Which mean the method-of-moments covariance subtracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomVariant {
    SampleMean,
    KnownMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub method: Method,
    pub p_hat: f64,
    /// The inverted scalar: `c_hat` for the moment methods, the ratio for least squares.
    pub statistic: f64,
    pub clamped: Clamp,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
}

/// Solves `c(p) = statistic` on `bracket`.
pub fn estimate_mom_statistic(
    dims: ModelDims,
    statistic: f64,
    method: Method,
    bracket: (f64, f64),
    tol: f64,
) -> Result<EstimationReport> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi <= 1.0) {
        return Err(Error::Domain(format!("moment bracket must lie in (0, 1], got [{lo}, {hi}]")));
    }
    let inv = invert_monotone_decreasing(statistic, |p| lag1_cov_raw(dims, p).unwrap_or(f64::NAN), lo, hi, tol)?;
    Ok(EstimationReport {
        method,
        p_hat: inv.p,
        statistic,
        clamped: inv.clamped,
        bracket_lo: lo,
        bracket_hi: hi,
        tol,
        burn_in: None,
    })
}

/// Method-of-moments estimate `c^{-1}(c_hat)`.
pub fn estimate_mom(
    stats: &SummaryStats,
    variant: MomVariant,
    bracket: (f64, f64),
    tol: f64,
) -> Result<EstimationReport> {
    let (statistic, method) = match variant {
        MomVariant::SampleMean => (stats.c_hat, Method::Mom),
        MomVariant::KnownMean => (stats.c_hat_known_mean, Method::MomKnownMean),
    };
    let mut report = estimate_mom_statistic(stats.dims, statistic, method, bracket, tol)?;
    report.burn_in = stats.burn_in;
    Ok(report)
}

/// Solves `I(p) = ratio` on `[0, 1]`. Ratios outside `[0, 1]` clamp to an end.
pub fn estimate_ls_ratio(n: usize, ratio: f64, tol: f64) -> Result<EstimationReport> {
    let inv = invert_monotone_decreasing(ratio, |p| slope_raw(n, p), 0.0, 1.0, tol)?;
    Ok(EstimationReport {
        method: Method::Ls,
        p_hat: inv.p,
        statistic: ratio,
        clamped: inv.clamped,
        bracket_lo: 0.0,
        bracket_hi: 1.0,
        tol,
        burn_in: None,
    })
}

/// Least-squares estimate `I^{-1}(ratio)`.
pub fn estimate_ls(stats: &SummaryStats, tol: f64) -> Result<EstimationReport> {
    let mut report = estimate_ls_ratio(stats.dims.n(), stats.ls_ratio()?, tol)?;
    report.burn_in = stats.burn_in;
    Ok(report)
}

/// Runs `method` with the default bracket.
pub fn estimate(stats: &SummaryStats, method: Method, tol: f64) -> Result<EstimationReport> {
    match method {
        Method::Mom => estimate_mom(stats, MomVariant::SampleMean, DEFAULT_BRACKET, tol),
        Method::MomKnownMean => estimate_mom(stats, MomVariant::KnownMean, DEFAULT_BRACKET, tol),
        Method::Ls => estimate_ls(stats, tol),
    }
}
