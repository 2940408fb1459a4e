//! Monte Carlo replication studies.
//!
//! Replication `r` (1-based) at every grid point uses seed
//! [`replication_seed`]`(base_seed, r)`, so any row of a table can be
//! regenerated on its own. Replications run on the rayon pool and are merged
//! by `(p, method, rep)`, which makes the output independent of scheduling.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimate::{estimate, summarize, Method, DEFAULT_TOL};
use crate::invert::Clamp;
use crate::moments::{deriv, deriv_analytic, EdgeProb, ModelDims, Quantity, DEFAULT_FD_STEP};
use crate::sim::{replication_seed, simulate, SimConfig, DEFAULT_BURN_IN};

/// Fewest unclamped replications accepted by [`empirical_sigmas`].
pub const MIN_SIGMA_SAMPLES: usize = 30;
/// Fewest samples accepted by [`qq_data`].
pub const MIN_QQ_SAMPLES: usize = 50;
/// Fewest replications accepted by [`sensitivity_curves`].
pub const MIN_CURVE_REPS: usize = 100;

/// Formats a float with 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|e| Error::Parse(format!("number {s:?}: {e}")))
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e| Error::Parse(format!("integer {s:?}: {e}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub dims: ModelDims,
    pub t: usize,
    pub burn_in: usize,
    pub reps: usize,
    pub p_grid: Vec<f64>,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub fd_step: f64,
    pub tol: f64,
}

/// Grid of the sensitivity curves, `0.1, 0.2, ..., 0.9`.
pub fn curve_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

impl StudyConfig {
    /// `n = 7, M = 14, T = 4000, R = 2000` at `p = 0.25, 0.5, 0.75`.
    pub fn reference_study() -> Self {
        Self {
            dims: ModelDims::new(7, 14).expect("valid dims"),
            t: 4000,
            burn_in: DEFAULT_BURN_IN,
            reps: 2000,
            p_grid: vec![0.25, 0.5, 0.75],
            base_seed: 1,
            methods: Method::ALL.to_vec(),
            fd_step: DEFAULT_FD_STEP,
            tol: DEFAULT_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::Domain(format!("need R >= 2 replications, got {}", self.reps)));
        }
        if self.t < 2 {
            return Err(Error::Domain(format!("observation length T must be >= 2, got {}", self.t)));
        }
        if self.p_grid.is_empty() {
            return Err(Error::Domain("empty p grid".into()));
        }
        if let Some(p) = self.p_grid.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::Domain(format!("grid values must lie in (0, 1], got {p}")));
        }
        if self.methods.is_empty() {
            return Err(Error::Domain("no estimation methods requested".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRow {
    pub p_true: f64,
    pub method: Method,
    pub rep: u64,
    pub seed: u64,
    pub p_hat: f64,
    pub statistic: f64,
    pub clamped: Clamp,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplicationTable {
    pub rows: Vec<ReplicationRow>,
}

pub const TABLE_HEADER: [&str; 7] = ["p_true", "method", "rep", "seed", "p_hat", "statistic", "clamped"];

impl ReplicationTable {
    pub fn rows_for(&self, p: f64, method: Method) -> impl Iterator<Item = &ReplicationRow> + '_ {
        self.rows.iter().filter(move |r| r.p_true == p && r.method == method)
    }

    pub fn estimates(&self, p: f64, method: Method, skip_clamped: bool) -> Vec<f64> {
        self.rows_for(p, method).filter(|r| !(skip_clamped && r.clamped.is_clamped())).map(|r| r.p_hat).collect()
    }

    pub fn clamped_count(&self, p: f64, method: Method) -> usize {
        self.rows_for(p, method).filter(|r| r.clamped.is_clamped()).count()
    }

    /// Mean, sd and RMSE of all estimates at `(p, method)`, clamped ones included.
    pub fn summary(&self, p: f64, method: Method) -> EstimateSummary {
        EstimateSummary::from_estimates(p, &self.estimates(p, method, false), self.clamped_count(p, method))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TABLE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                fmt_f64(r.p_true),
                r.method.as_str().to_string(),
                r.rep.to_string(),
                r.seed.to_string(),
                fmt_f64(r.p_hat),
                fmt_f64(r.statistic),
                r.clamped.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        if r.headers()?.iter().ne(TABLE_HEADER) {
            return Err(Error::Parse(format!("replication table header must be {}", TABLE_HEADER.join(","))));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != TABLE_HEADER.len() {
                return Err(Error::Parse(format!("row with {} fields", rec.len())));
            }
            rows.push(ReplicationRow {
                p_true: parse_f64(&rec[0])?,
                method: rec[1].parse()?,
                rep: parse_int(&rec[2])?,
                seed: parse_int(&rec[3])?,
                p_hat: parse_f64(&rec[4])?,
                statistic: parse_f64(&rec[5])?,
                clamped: rec[6].trim().parse()?,
            });
        }
        Ok(Self { rows })
    }
}

/// Location and spread of a set of estimates of a known `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    /// Standard error of the mean.
    pub se: f64,
    pub rmse: f64,
    pub n_clamped: usize,
}

impl EstimateSummary {
    pub fn from_estimates(p: f64, xs: &[f64], n_clamped: usize) -> Self {
        let count = xs.len();
        let nf = count as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let sd = sample_sd(xs);
        let rmse = (xs.iter().map(|x| (x - p).powi(2)).sum::<f64>() / nf).sqrt();
        Self { count, mean, sd, se: sd / nf.sqrt(), rmse, n_clamped }
    }
}

fn sample_sd(xs: &[f64]) -> f64 {
    let nf = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt()
}

/// How replications are scheduled. Output does not depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

fn run_cell(cfg: &StudyConfig, p: f64, rep: u64) -> Result<Vec<ReplicationRow>> {
    let seed = replication_seed(cfg.base_seed, rep);
    let inner = || -> Result<Vec<ReplicationRow>> {
        let sim = SimConfig::new(cfg.dims, EdgeProb::new(p)?, cfg.t, seed)?.with_burn_in(cfg.burn_in);
        let stats = summarize(&simulate(&sim)?)?;
        cfg.methods
            .iter()
            .map(|&method| {
                let rep_out = estimate(&stats, method, cfg.tol)?;
                Ok(ReplicationRow {
                    p_true: p,
                    method,
                    rep,
                    seed,
                    p_hat: rep_out.p_hat,
                    statistic: rep_out.statistic,
                    clamped: rep_out.clamped,
                })
            })
            .collect()
    };
    inner().map_err(|e| Error::Cell { p, rep, source: Box::new(e) })
}

/// Simulates `R` series per grid point and applies every requested estimator
/// to each.
pub fn run_replications(cfg: &StudyConfig) -> Result<ReplicationTable> {
    run_replications_with(cfg, Execution::Parallel)
}

pub fn run_replications_with(cfg: &StudyConfig, exec: Execution) -> Result<ReplicationTable> {
    cfg.validate()?;
    let cells: Vec<(usize, u64)> =
        (0..cfg.p_grid.len()).flat_map(|k| (1..=cfg.reps as u64).map(move |r| (k, r))).collect();
    let work = |&(k, r): &(usize, u64)| run_cell(cfg, cfg.p_grid[k], r);
    let results: Vec<Vec<ReplicationRow>> = match exec {
        Execution::Serial => cells.iter().map(work).collect::<Result<_>>()?,
        Execution::Parallel => cells.par_iter().map(work).collect::<Result<_>>()?,
    };

    // results are ordered by (p, rep); regroup as (p, method, rep).
    let per_p = cfg.reps;
    let mut rows = Vec::with_capacity(results.len() * cfg.methods.len());
    for chunk in results.chunks(per_p) {
        for m in 0..cfg.methods.len() {
            rows.extend(chunk.iter().map(|cell| cell[m].clone()));
        }
    }
    Ok(ReplicationTable { rows })
}

/// Empirical asymptotic scales at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sigmas {
    /// `|c'(p)| * sd(sqrt(T) * p_hat)`.
    pub sigma_c: f64,
    /// `|I'(p)| * sd(sqrt(T) * p_bar)`.
    pub sigma_i: f64,
    pub sd_mom: f64,
    pub sd_ls: f64,
    pub n_clamped_mom: usize,
    pub n_clamped_ls: usize,
}

/// Inverts the asymptotic variances of the two estimators into estimates of
/// the statistic-level scales, using the `mom` and `ls` rows at `p`.
/// Clamped replications are left out and counted.
pub fn empirical_sigmas(table: &ReplicationTable, dims: ModelDims, p: f64, t: usize, fd_step: f64) -> Result<Sigmas> {
    let mom = table.estimates(p, Method::Mom, true);
    let ls = table.estimates(p, Method::Ls, true);
    for xs in [&mom, &ls] {
        if xs.len() < MIN_SIGMA_SAMPLES {
            return Err(Error::InsufficientSamples { needed: MIN_SIGMA_SAMPLES, got: xs.len() });
        }
    }
    let c_prime = deriv(Quantity::Cov, dims, p, fd_step)?;
    let i_prime = deriv_analytic(Quantity::Slope, dims.n(), EdgeProb::new(p)?)?;
    let (sd_mom, sd_ls) = (sample_sd(&mom), sample_sd(&ls));
    let root_t = (t as f64).sqrt();
    Ok(Sigmas {
        sigma_c: c_prime.abs() * root_t * sd_mom,
        sigma_i: i_prime.abs() * root_t * sd_ls,
        sd_mom,
        sd_ls,
        n_clamped_mom: table.clamped_count(p, Method::Mom),
        n_clamped_ls: table.clamped_count(p, Method::Ls),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QqData {
    /// `(theoretical, empirical)` quantile pairs in increasing order.
    pub pairs: Vec<(f64, f64)>,
    /// Pearson correlation of the pairs.
    pub correlation: f64,
}

pub const QQ_HEADER: [&str; 2] = ["theoretical_q", "empirical_q"];

impl QqData {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(QQ_HEADER)?;
        for &(a, b) in &self.pairs {
            w.write_record([fmt_f64(a), fmt_f64(b)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads quantile pairs back and recomputes their correlation.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        if r.headers()?.iter().ne(QQ_HEADER) {
            return Err(Error::Parse(format!("QQ header must be {}", QQ_HEADER.join(","))));
        }
        let mut pairs = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            pairs.push((parse_f64(&rec[0])?, parse_f64(&rec[1])?));
        }
        let correlation = pearson(&pairs);
        Ok(Self { pairs, correlation })
    }
}

fn pearson(pairs: &[(f64, f64)]) -> f64 {
    let nf = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (mx / nf, my / nf);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Normal QQ data: samples standardised by their own mean and sd, plotted
/// against standard normal quantiles at positions `(k - 0.5) / R`.
pub fn qq_data(samples: &[f64]) -> Result<QqData> {
    if samples.len() < MIN_QQ_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_QQ_SAMPLES, got: samples.len() });
    }
    let nf = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let sd = sample_sd(samples);
    if !(sd > 0.0) {
        return Err(Error::Degenerate("samples have zero spread".into()));
    }
    let mut z: Vec<f64> = samples.iter().map(|x| (x - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    let pairs: Vec<(f64, f64)> =
        z.into_iter().enumerate().map(|(k, e)| (normal.inverse_cdf((k as f64 + 0.5) / nf), e)).collect();
    let correlation = pearson(&pairs);
    Ok(QqData { pairs, correlation })
}

/// One point of the estimator-comparison curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityPoint {
    pub p: f64,
    /// `c'(p) / I'(p)`.
    pub lambda: f64,
    /// `sigma_I / sigma_c`.
    pub mu: f64,
    /// `lambda * mu`.
    pub nu: f64,
    pub sd_mom: f64,
    pub sd_ls: f64,
    pub n_clamped_mom: usize,
    pub n_clamped_ls: usize,
}

pub const CURVES_HEADER: [&str; 8] = ["p", "lambda", "mu", "nu", "sd_mom", "sd_ls", "n_clamped_mom", "n_clamped_ls"];

pub fn write_curves_csv<W: Write>(points: &[SensitivityPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVES_HEADER)?;
    for s in points {
        w.write_record([
            fmt_f64(s.p),
            fmt_f64(s.lambda),
            fmt_f64(s.mu),
            fmt_f64(s.nu),
            fmt_f64(s.sd_mom),
            fmt_f64(s.sd_ls),
            s.n_clamped_mom.to_string(),
            s.n_clamped_ls.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curves_csv<R: Read>(input: R) -> Result<Vec<SensitivityPoint>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(CURVES_HEADER) {
        return Err(Error::Parse(format!("curves header must be {}", CURVES_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(SensitivityPoint {
            p: parse_f64(&rec[0])?,
            lambda: parse_f64(&rec[1])?,
            mu: parse_f64(&rec[2])?,
            nu: parse_f64(&rec[3])?,
            sd_mom: parse_f64(&rec[4])?,
            sd_ls: parse_f64(&rec[5])?,
            n_clamped_mom: parse_int(&rec[6])?,
            n_clamped_ls: parse_int(&rec[7])?,
        });
    }
    Ok(out)
}

/// Builds the curves from an existing table holding `mom` and `ls` rows.
pub fn curves_from_table(table: &ReplicationTable, cfg: &StudyConfig) -> Result<Vec<SensitivityPoint>> {
    cfg.p_grid
        .iter()
        .map(|&p| {
            let lambda = deriv(Quantity::Cov, cfg.dims, p, cfg.fd_step)?
                / deriv_analytic(Quantity::Slope, cfg.dims.n(), EdgeProb::new(p)?)?;
            let s = empirical_sigmas(table, cfg.dims, p, cfg.t, cfg.fd_step)?;
            let mu = s.sigma_i / s.sigma_c;
            Ok(SensitivityPoint {
                p,
                lambda,
                mu,
                nu: lambda * mu,
                sd_mom: s.sd_mom,
                sd_ls: s.sd_ls,
                n_clamped_mom: s.n_clamped_mom,
                n_clamped_ls: s.n_clamped_ls,
            })
        })
        .collect()
}

/// Runs the `mom` and `ls` replications on the grid and derives
/// `lambda`, `mu` and `nu` at every point.
pub fn sensitivity_curves(cfg: &StudyConfig) -> Result<Vec<SensitivityPoint>> {
    if cfg.reps < MIN_CURVE_REPS {
        return Err(Error::InsufficientSamples { needed: MIN_CURVE_REPS, got: cfg.reps });
    }
    let cfg = StudyConfig { methods: vec![Method::Mom, Method::Ls], ..cfg.clone() };
    let table = run_replications(&cfg)?;
    curves_from_table(&table, &cfg)
}
