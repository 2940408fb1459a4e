//! Exact ground truth on small instances by enumerating every graph.
//!
//! The pair kernel is assembled from per-graph single-walker kernels: given
//! the shared graph, two walkers move independently, so the pair transition
//! on a graph is the Kronecker square of the single-walker transition. None
//! of the closed forms in [`crate::moments`] are used here.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{EdgeProb, ScenarioProbs};
use crate::sim::{pairs, GraphSample};

/// Largest vertex count handled by enumeration.
pub const MAX_N: usize = 4;

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("vertex count n must be >= 2, got {n}")));
    }
    if n > MAX_N {
        return Err(Error::Size { n, max: MAX_N });
    }
    Ok(())
}

/// Every graph on `n` vertices with its probability under edge probability `p`.
pub fn enumerate_graphs(n: usize, p: EdgeProb) -> Result<Vec<(GraphSample, f64)>> {
    check_size(n)?;
    let slots = pairs(n).count();
    let p = p.get();
    Ok((0..1u64 << slots)
        .map(|mask| {
            let edges = mask.count_ones() as i32;
            let w = p.powi(edges) * (1.0 - p).powi(slots as i32 - edges);
            (GraphSample::from_mask(n, mask), w)
        })
        .collect())
}

fn graph_kernel(g: &GraphSample) -> DMatrix<f64> {
    let n = g.n();
    DMatrix::from_fn(n, n, |i, j| g.transition_prob(i, j))
}

/// Graph-averaged one-step kernel of a single walker.
pub fn single_walker_kernel(n: usize, p: EdgeProb) -> Result<DMatrix<f64>> {
    let mut k = DMatrix::zeros(n, n);
    for (g, w) in enumerate_graphs(n, p)? {
        k += graph_kernel(&g) * w;
    }
    Ok(k)
}

/// Exact joint chain of two walkers on ordered position pairs `(x1, x2)`,
/// indexed `x1 * n + x2`.
#[derive(Debug, Clone)]
pub struct PairChain {
    pub n: usize,
    pub p: f64,
    pub kernel: DMatrix<f64>,
    pub stationary: DVector<f64>,
}

impl PairChain {
    pub fn state(&self, x1: usize, x2: usize) -> usize {
        x1 * self.n + x2
    }

    /// Stationary probability that both walkers sit at vertex `i`.
    pub fn same_vertex(&self, i: usize) -> f64 {
        self.stationary[self.state(i, i)]
    }

    /// Stationary probability that walker 1 is at `i` and walker 2 at `j`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.stationary[self.state(i, j)]
    }
}

/// Builds the pair kernel and solves for its stationary law.
///
/// The balance equations `(K^T - I) pi = 0` have their last row replaced by
/// the normalisation `sum(pi) = 1`. The system is singular at `p = 0`, where
/// the chain is reducible.
pub fn build_pair_chain(n: usize, p: EdgeProb) -> Result<PairChain> {
    let states = n * n;
    let mut kernel = DMatrix::zeros(states, states);
    for (g, w) in enumerate_graphs(n, p)? {
        let single = graph_kernel(&g);
        kernel += single.kronecker(&single) * w;
    }

    let mut a = kernel.transpose() - DMatrix::identity(states, states);
    a.row_mut(states - 1).fill(1.0);
    let mut b = DVector::zeros(states);
    b[states - 1] = 1.0;
    let stationary = a
        .lu()
        .solve(&b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular(format!("pair chain at n = {n}, p = {}", p.get())))?;
    Ok(PairChain { n, p: p.get(), kernel, stationary })
}

/// `P(walker from a and walker from b both land on target)`, summed over graphs.
fn both_reach(graphs: &[(GraphSample, f64)], a: usize, b: usize, target: usize) -> f64 {
    graphs.iter().map(|(g, w)| w * g.transition_prob(a, target) * g.transition_prob(b, target)).sum()
}

/// The four scenario probabilities by direct enumeration, with target vertex 0.
///
/// At `n = 2` the fourth scenario has no realisation; it is reported as
/// `p * pi2`, matching the closed-form convention.
pub fn exact_scenarios(n: usize, p: EdgeProb) -> Result<ScenarioProbs> {
    let graphs = enumerate_graphs(n, p)?;
    let pi1 = both_reach(&graphs, 0, 0, 0);
    let pi2 = both_reach(&graphs, 0, 1, 0);
    let pi3 = both_reach(&graphs, 1, 1, 0);
    let pi4 = if n >= 3 { both_reach(&graphs, 1, 2, 0) } else { p.get() * pi2 };
    Ok(ScenarioProbs { pi1, pi2, pi3, pi4 })
}

/// Exact stationary `Cov(M_{i,t}, M_{i,t+1})` for `M` walkers.
///
/// `E[M_{i,t} M_{i,t+1}] = M P(X1_t = i, X1_{t+1} = i) + M(M-1) P(X1_t = i, X2_{t+1} = i)`,
/// both read off the stationary pair chain.
pub fn exact_lag1_cov(n: usize, m: usize, p: EdgeProb) -> Result<f64> {
    let chain = build_pair_chain(n, p)?;
    Ok(lag1_cov_from_chain(&chain, m))
}

fn lag1_cov_from_chain(chain: &PairChain, m: usize) -> f64 {
    let n = chain.n;
    let i = 0;
    let mut self_stay = 0.0;
    let mut cross = 0.0;
    for x2 in 0..n {
        let from = chain.state(i, x2);
        let mass = chain.stationary[from];
        for y in 0..n {
            self_stay += mass * chain.kernel[(from, chain.state(i, y))];
            cross += mass * chain.kernel[(from, chain.state(y, i))];
        }
    }
    let (mf, nf) = (m as f64, n as f64);
    mf * self_stay + mf * (mf - 1.0) * cross - (mf / nf).powi(2)
}

/// Everything the oracle knows at one `(n, M, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSummary {
    pub pi1: f64,
    pub pi2: f64,
    pub pi3: f64,
    pub pi4: f64,
    pub kappa_implied: f64,
    pub pi_eq: f64,
    pub pi_neq: f64,
    pub c_exact: f64,
}

pub fn oracle_summary(n: usize, m: usize, p: EdgeProb) -> Result<OracleSummary> {
    let sc = exact_scenarios(n, p)?;
    let chain = build_pair_chain(n, p)?;
    let pi_eq = chain.same_vertex(0);
    let pi_neq = chain.at(0, 1);
    Ok(OracleSummary {
        pi1: sc.pi1,
        pi2: sc.pi2,
        pi3: sc.pi3,
        pi4: sc.pi4,
        kappa_implied: pi_eq / pi_neq,
        pi_eq,
        pi_neq,
        c_exact: lag1_cov_from_chain(&chain, m),
    })
}
