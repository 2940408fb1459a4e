//! Closed-form moment functions of the edge probability `p`.
//!
//! Everything here is a pure function of `(n, M, p)`. Functions with a
//! removable singularity at `p = 0` (the stay probability and the
//! least-squares slope) are defined there by their limits; the pair-occupancy
//! quantities and the lag-1 covariance need `p > 0` because the two-walker
//! chain is reducible on the empty graph.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower end of the default inversion bracket for quantities undefined at `p = 0`.
pub const P_MIN: f64 = 1e-6;

/// Default central finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Below this value of `n * p` the stay probability is evaluated from its
/// Taylor series.
const SERIES_CUTOFF: f64 = 1e-8;

/// Smallest admissible denominator of the pair ratio.
const KAPPA_DENOM_FLOOR: f64 = 1e-13;

/// Vertex count `n` and walker count `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelDims {
    n: usize,
    m: usize,
}

impl ModelDims {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        check_n(n)?;
        if m < 1 {
            return Err(Error::Domain(format!("walker count M must be >= 1, got {m}")));
        }
        Ok(Self { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// An edge probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct EdgeProb(f64);

impl EdgeProb {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("edge probability must lie in [0, 1], got {p}")));
        }
        Ok(Self(p))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    fn positive(self) -> Result<f64> {
        if self.0 > 0.0 {
            Ok(self.0)
        } else {
            Err(Error::Domain("this quantity is only defined for p in (0, 1]".into()))
        }
    }
}

impl TryFrom<f64> for EdgeProb {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<EdgeProb> for f64 {
    fn from(p: EdgeProb) -> f64 {
        p.0
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("vertex count n must be >= 2, got {n}")));
    }
    Ok(())
}

/// Exact binomial coefficient as `f64`; exact while the result fits in 53 bits.
fn choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

pub(crate) fn binom_pmf_raw(n: usize, k: usize, p: f64) -> f64 {
    debug_assert!(k <= n);
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    if n <= 60 {
        choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    } else {
        let ln_c = statrs::function::factorial::ln_binomial(n as u64, k as u64);
        (ln_c + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp()
    }
}

/// `P(Bin(n, p) = k)`.
pub fn binom_pmf(n: usize, k: i64, p: EdgeProb) -> Result<f64> {
    if k < 0 || k as u64 > n as u64 {
        return Err(Error::Domain(format!("binomial support is 0..={n}, got k = {k}")));
    }
    Ok(binom_pmf_raw(n, k as usize, p.get()))
}

/// `E[f(K)]` for `K ~ Bin(n, p)`.
fn binom_expect(n: usize, p: f64, f: impl Fn(f64) -> f64) -> f64 {
    (0..=n).map(|k| binom_pmf_raw(n, k, p) * f(k as f64)).sum()
}

/// Returns `(1 - p)^n` and `1 - (1 - p)^n`, the latter without cancellation
/// for small `p`.
fn pow_complement(n: usize, p: f64) -> (f64, f64) {
    if p < 0.5 {
        let l = n as f64 * (-p).ln_1p();
        (l.exp(), -l.exp_m1())
    } else {
        let q = (1.0 - p).powi(n as i32);
        (q, 1.0 - q)
    }
}

pub(crate) fn stay_raw(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    if p == 0.0 {
        return 1.0;
    }
    if nf * p < SERIES_CUTOFF {
        return 1.0 - (nf - 1.0) * p / 2.0 + (nf - 1.0) * (nf - 2.0) * p * p / 6.0;
    }
    pow_complement(n, p).1 / (nf * p)
}

fn move_raw(n: usize, p: f64) -> f64 {
    (1.0 - stay_raw(n, p)) / (n as f64 - 1.0)
}

pub(crate) fn slope_raw(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    (nf * stay_raw(n, p) - 1.0) / (nf - 1.0)
}

/// Probability `F_n(p)` that a walker stays put for one step.
pub fn stay_prob(n: usize, p: EdgeProb) -> Result<f64> {
    check_n(n)?;
    Ok(stay_raw(n, p.get()))
}

/// Probability `G_n(p)` of moving to one specific other vertex.
pub fn move_prob(n: usize, p: EdgeProb) -> Result<f64> {
    check_n(n)?;
    Ok(move_raw(n, p.get()))
}

/// Slope `I(p) = (n F(p) - 1) / (n - 1)` of the conditional mean of a count.
pub fn ls_slope(n: usize, p: EdgeProb) -> Result<f64> {
    check_n(n)?;
    Ok(slope_raw(n, p.get()))
}

/// Intercept factor `J(p) = (1 - I(p)) / n`.
pub fn ls_intercept(n: usize, p: EdgeProb) -> Result<f64> {
    check_n(n)?;
    Ok((1.0 - slope_raw(n, p.get())) / n as f64)
}

/// One-step probabilities that two tagged walkers both end at a vertex `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioProbs {
    /// Both started at `i`.
    pub pi1: f64,
    /// One started at `i`, the other at some `j != i`.
    pub pi2: f64,
    /// Both started at the same `j != i`.
    pub pi3: f64,
    /// They started at distinct `j, j'`, both different from `i`.
    pub pi4: f64,
}

fn scenarios_raw(n: usize, p: f64) -> ScenarioProbs {
    let pi1 = binom_expect(n - 1, p, |k| 1.0 / ((k + 1.0) * (k + 1.0)));
    let s = binom_expect(n - 2, p, |k| 1.0 / (k + 2.0));
    let pi2 = p * s * s;
    let pi3 = p * binom_expect(n - 2, p, |k| 1.0 / ((k + 2.0) * (k + 2.0)));
    let pi4 = if n == 2 {
        // No third vertex exists; the value has coefficient zero wherever it is used.
        p * pi2
    } else {
        // j and j' share the edge {j, j'}, so their degrees are coupled through it.
        let with_edge = binom_expect(n - 3, p, |k| 1.0 / (k + 3.0));
        let without_edge = binom_expect(n - 3, p, |k| 1.0 / (k + 2.0));
        p * p * (p * with_edge * with_edge + (1.0 - p) * without_edge * without_edge)
    };
    ScenarioProbs { pi1, pi2, pi3, pi4 }
}

/// The four one-step scenario probabilities.
pub fn scenario_probs(n: usize, p: EdgeProb) -> Result<ScenarioProbs> {
    check_n(n)?;
    Ok(scenarios_raw(n, p.get()))
}

fn kappa_raw(n: usize, p: f64) -> Result<f64> {
    let sc = scenarios_raw(n, p);
    let nf = n as f64;
    // 1 - pi1 summed termwise, which avoids cancellation for small p.
    let leave = binom_expect(n - 1, p, |k| k * (k + 2.0) / ((k + 1.0) * (k + 1.0)));
    let denom = leave - (nf - 1.0) * sc.pi3;
    if !(denom >= KAPPA_DENOM_FLOOR) {
        return Err(Error::Numerical(format!(
            "pair-ratio denominator {denom:e} below {KAPPA_DENOM_FLOOR:e} at p = {p}"
        )));
    }
    Ok((2.0 * (nf - 1.0) * sc.pi2 + (nf - 1.0) * (nf - 2.0) * sc.pi4) / denom)
}

/// Ratio `Π₌ / Π₊` of the stationary same-vertex and distinct-vertex pair probabilities.
pub fn kappa(n: usize, p: EdgeProb) -> Result<f64> {
    check_n(n)?;
    kappa_raw(n, p.positive()?)
}

/// Stationary probabilities that two tagged walkers occupy one specified vertex
/// together, or two specified distinct vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOccupancy {
    pub same: f64,
    pub distinct: f64,
}

fn pair_from_kappa(n: usize, kappa: f64) -> PairOccupancy {
    let nf = n as f64;
    let d = nf * (nf - 1.0 + kappa);
    PairOccupancy { same: kappa / d, distinct: 1.0 / d }
}

pub fn occupancy_pair_probs(n: usize, p: EdgeProb) -> Result<PairOccupancy> {
    check_n(n)?;
    Ok(pair_from_kappa(n, kappa_raw(n, p.positive()?)?))
}

fn second_moment_raw(dims: ModelDims, p: f64) -> Result<f64> {
    let (n, m) = (dims.n as f64, dims.m as f64);
    let pair = pair_from_kappa(dims.n, kappa_raw(dims.n, p)?);
    Ok(m / n + m * (m - 1.0) * pair.same)
}

/// Stationary `E[M_{i,t}^2]`.
pub fn second_moment(dims: ModelDims, p: EdgeProb) -> Result<f64> {
    second_moment_raw(dims, p.positive()?)
}

pub(crate) fn lag1_cov_raw(dims: ModelDims, p: f64) -> Result<f64> {
    let (n, m) = (dims.n as f64, dims.m as f64);
    let f = stay_raw(dims.n, p);
    let g = move_raw(dims.n, p);
    let m2 = second_moment_raw(dims, p)?;
    Ok((f - g) * m2 + g * m * m / n - m * m / (n * n))
}

/// Stationary lag-1 autocovariance `c(p) = Cov(M_{i,t}, M_{i,t+1})`.
pub fn lag1_cov(dims: ModelDims, p: EdgeProb) -> Result<f64> {
    lag1_cov_raw(dims, p.positive()?)
}

/// Quantities that [`deriv`] can differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Lag-1 covariance `c`.
    Cov,
    /// Least-squares slope `I`.
    Slope,
    /// Stay probability `F`.
    Stay,
    Kappa,
}

fn eval_quantity(which: Quantity, dims: ModelDims, p: f64) -> Result<f64> {
    match which {
        Quantity::Cov => lag1_cov_raw(dims, p),
        Quantity::Slope => Ok(slope_raw(dims.n, p)),
        Quantity::Stay => Ok(stay_raw(dims.n, p)),
        Quantity::Kappa => kappa_raw(dims.n, p),
    }
}

/// Central finite-difference derivative of `which` at `p`.
///
/// The stencil `[p - step, p + step]` must stay inside `(0, 1]`.
pub fn deriv(which: Quantity, dims: ModelDims, p: f64, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {step}")));
    }
    if !(p - step > 0.0 && p + step <= 1.0) {
        return Err(Error::Domain(format!("stencil [{}, {}] leaves (0, 1]", p - step, p + step)));
    }
    let hi = eval_quantity(which, dims, p + step)?;
    let lo = eval_quantity(which, dims, p - step)?;
    Ok((hi - lo) / (2.0 * step))
}

/// Exact derivative, available for [`Quantity::Stay`] and [`Quantity::Slope`].
///
/// Uses `d/dp E[1/(K+1)] = -(n-1) E[1/((K'+1)(K'+2))]` with
/// `K ~ Bin(n-1, p)`, `K' ~ Bin(n-2, p)`, which is free of cancellation near 0.
pub fn deriv_analytic(which: Quantity, n: usize, p: EdgeProb) -> Result<f64> {
    check_n(n)?;
    let nf = n as f64;
    let stay_d = -(nf - 1.0) * binom_expect(n - 2, p.get(), |k| 1.0 / ((k + 1.0) * (k + 2.0)));
    match which {
        Quantity::Stay => Ok(stay_d),
        Quantity::Slope => Ok(nf * stay_d / (nf - 1.0)),
        Quantity::Cov | Quantity::Kappa => Err(Error::Domain(format!("no analytic derivative for {which:?}"))),
    }
}

/// A pair of neighbouring grid points where a supposedly decreasing function increases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub p_left: f64,
    pub p_right: f64,
    pub rise: f64,
}

/// Scans `points` equally spaced values on `[lo, hi]` and reports every
/// increase of `f`.
pub fn decreasing_violations(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> Vec<Violation> {
    assert!(points >= 2 && lo < hi);
    let step = (hi - lo) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|k| if k + 1 == points { hi } else { lo + k as f64 * step }).collect();
    let vals: Vec<f64> = grid.iter().map(|&p| f(p)).collect();
    grid.windows(2)
        .zip(vals.windows(2))
        .filter(|(_, v)| v[1] > v[0])
        .map(|(g, v)| Violation { p_left: g[0], p_right: g[1], rise: v[1] - v[0] })
        .collect()
}

/// Monotonicity check of `c` on `points` grid values in `[P_MIN, 1]`.
pub fn lag1_cov_violations(dims: ModelDims, points: usize) -> Vec<Violation> {
    decreasing_violations(|p| lag1_cov_raw(dims, p).unwrap_or(f64::NAN), P_MIN, 1.0, points)
}

/// Every closed-form quantity at one `(n, M, p)`, with `p > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentProfile {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub p: f64,
    #[serde(rename = "F")]
    pub stay: f64,
    #[serde(rename = "G")]
    pub move_to: f64,
    pub pi1: f64,
    pub pi2: f64,
    pub pi3: f64,
    pub pi4: f64,
    pub kappa: f64,
    pub pi_eq: f64,
    pub pi_neq: f64,
    pub m2: f64,
    pub c: f64,
    #[serde(rename = "I")]
    pub slope: f64,
    #[serde(rename = "J")]
    pub intercept: f64,
}

impl MomentProfile {
    pub fn evaluate(dims: ModelDims, p: EdgeProb) -> Result<Self> {
        let pv = p.positive()?;
        let n = dims.n;
        let sc = scenarios_raw(n, pv);
        let kappa = kappa_raw(n, pv)?;
        let pair = pair_from_kappa(n, kappa);
        let slope = slope_raw(n, pv);
        Ok(Self {
            n,
            m: dims.m,
            p: pv,
            stay: stay_raw(n, pv),
            move_to: move_raw(n, pv),
            pi1: sc.pi1,
            pi2: sc.pi2,
            pi3: sc.pi3,
            pi4: sc.pi4,
            kappa,
            pi_eq: pair.same,
            pi_neq: pair.distinct,
            m2: second_moment_raw(dims, pv)?,
            c: lag1_cov_raw(dims, pv)?,
            slope,
            intercept: (1.0 - slope) / n as f64,
        })
    }
}
