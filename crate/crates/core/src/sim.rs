//! Seeded simulation of walkers on an Erdős–Rényi graph that is redrawn at
//! every step.
//!
//! Stream layout per step: the `n(n-1)/2` edge indicators are drawn first,
//! in lexicographic pair order, then each walker in index order consumes
//! exactly one uniform. Vertices are 0-based in memory and 1-based in CSV
//! column names.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::moments::{EdgeProb, ModelDims};

/// The generator behind every simulation.
pub type SimRng = ChaCha8Rng;

pub const DEFAULT_BURN_IN: usize = 1_000;

/// Odd multiplier used to derive replication seeds.
pub const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of replication `rep` under `base_seed`.
pub fn replication_seed(base_seed: u64, rep: u64) -> u64 {
    base_seed ^ rep.wrapping_mul(SEED_STRIDE)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Uniform index in `0..len` from a single draw.
fn uniform_index<R: Rng + ?Sized>(rng: &mut R, len: usize) -> usize {
    let u: f64 = rng.random();
    ((u * len as f64) as usize).min(len - 1)
}

/// One realisation of the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSample {
    n: usize,
    adj: Vec<bool>,
}

impl GraphSample {
    pub fn empty(n: usize) -> Self {
        Self { n, adj: vec![false; n * n] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                g.set_edge(i, j, true);
            }
        }
        g
    }

    /// Graph whose edges are the set bits of `mask`, pairs taken in lexicographic order.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let mut g = Self::empty(n);
        for (bit, (i, j)) in pairs(n).enumerate() {
            if mask >> bit & 1 == 1 {
                g.set_edge(i, j, true);
            }
        }
        g
    }

    fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        self.adj[i * self.n + j] = present;
        self.adj[j * self.n + i] = present;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[i * self.n..(i + 1) * self.n].iter().enumerate().filter_map(|(j, &e)| e.then_some(j))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    pub fn edge_count(&self) -> usize {
        pairs(self.n).filter(|&(i, j)| self.has_edge(i, j)).count()
    }

    /// Probability that a walker at `from` is at `to` after one step on this graph.
    pub fn transition_prob(&self, from: usize, to: usize) -> f64 {
        let k = self.degree(from) as f64;
        if from == to || self.has_edge(from, to) {
            1.0 / (k + 1.0)
        } else {
            0.0
        }
    }
}

/// Unordered vertex pairs `(i, j)`, `i < j`, in lexicographic order.
pub(crate) fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Draws a fresh graph: each pair present independently with probability `p`.
pub fn sample_graph<R: Rng + ?Sized>(n: usize, p: EdgeProb, rng: &mut R) -> GraphSample {
    let mut g = GraphSample::empty(n);
    sample_graph_into(&mut g, p.get(), rng);
    g
}

fn sample_graph_into<R: Rng + ?Sized>(g: &mut GraphSample, p: f64, rng: &mut R) {
    for i in 0..g.n {
        for j in i + 1..g.n {
            let u: f64 = rng.random();
            g.set_edge(i, j, u < p);
        }
    }
}

/// Walker locations, one 0-based vertex index per walker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkerPositions(Vec<usize>);

impl WalkerPositions {
    pub fn new(positions: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&bad) = positions.iter().find(|&&x| x >= n) {
            return Err(Error::Domain(format!("walker position {bad} outside 0..{n}")));
        }
        Ok(Self(positions))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn counts(&self, n: usize) -> Vec<u32> {
        let mut c = vec![0u32; n];
        for &x in &self.0 {
            c[x] += 1;
        }
        c
    }
}

/// Moves every walker once on `g`: with `k` neighbours it stays w.p. `1/(k+1)`,
/// otherwise it jumps to a uniformly chosen neighbour.
pub fn step<R: Rng + ?Sized>(positions: &WalkerPositions, g: &GraphSample, rng: &mut R) -> WalkerPositions {
    let nbrs: Vec<Vec<usize>> = (0..g.n).map(|i| g.neighbors(i).collect()).collect();
    let mut next = positions.clone();
    move_walkers(&mut next.0, &nbrs, rng);
    next
}

fn move_walkers<R: Rng + ?Sized>(x: &mut [usize], nbrs: &[Vec<usize>], rng: &mut R) {
    for pos in x.iter_mut() {
        let here = &nbrs[*pos];
        let pick = uniform_index(rng, here.len() + 1);
        if pick > 0 {
            *pos = here[pick - 1];
        }
    }
}

/// Initial placement of the walkers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Init {
    /// Independent uniform vertices.
    #[default]
    Uniform,
    /// Everyone at the first vertex.
    AllAtFirst,
    /// Given 0-based positions.
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dims: ModelDims,
    pub p: EdgeProb,
    pub t: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub init: Init,
}

impl SimConfig {
    pub fn new(dims: ModelDims, p: EdgeProb, t: usize, seed: u64) -> Result<Self> {
        let cfg = Self { dims, p, t, burn_in: DEFAULT_BURN_IN, seed, init: Init::Uniform };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t < 2 {
            return Err(Error::Domain(format!("observation length T must be >= 2, got {}", self.t)));
        }
        if let Init::Explicit(x) = &self.init {
            if x.len() != self.dims.m() {
                return Err(Error::Domain(format!(
                    "explicit init has {} walkers, expected {}",
                    x.len(),
                    self.dims.m()
                )));
            }
            WalkerPositions::new(x.clone(), self.dims.n())?;
        }
        Ok(())
    }
}

/// The `T x n` matrix of occupancy counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationSeries {
    dims: ModelDims,
    t: usize,
    counts: Vec<u32>,
    burn_in: Option<usize>,
}

impl ObservationSeries {
    /// Builds a series from rows, checking that every row holds all `M` walkers.
    pub fn from_rows(dims: ModelDims, rows: &[Vec<u32>]) -> Result<Self> {
        let n = dims.n();
        let mut counts = Vec::with_capacity(rows.len() * n);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Domain(format!("row {} has {} columns, expected {n}", t + 1, row.len())));
            }
            let total: u64 = row.iter().map(|&c| c as u64).sum();
            if total != dims.m() as u64 {
                return Err(Error::Domain(format!("row {} sums to {total}, expected M = {}", t + 1, dims.m())));
            }
            counts.extend_from_slice(row);
        }
        Ok(Self { dims, t: rows.len(), counts, burn_in: None })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    /// Burn-in steps discarded before recording, when the series came from [`simulate`].
    pub fn burn_in(&self) -> Option<usize> {
        self.burn_in
    }

    pub fn row(&self, t: usize) -> &[u32] {
        let n = self.dims.n();
        &self.counts[t * n..(t + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.counts.chunks_exact(self.dims.n())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dims.n()).map(|i| format!("v{i}")));
        w.write_record(&header)?;
        for (t, row) in self.rows().enumerate() {
            let mut rec = vec![(t + 1).to_string()];
            rec.extend(row.iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`Self::write_csv`]; `n` comes from the header
    /// and `M` from the first row.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.get(0) != Some("t") || header.len() < 3 {
            return Err(Error::Parse("expected header t,v1,...,vn with n >= 2".into()));
        }
        for (i, name) in header.iter().skip(1).enumerate() {
            if name != format!("v{}", i + 1) {
                return Err(Error::Parse(format!("unexpected column {name:?}")));
            }
        }
        let n = header.len() - 1;
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .skip(1)
                .map(|s| s.trim().parse::<u32>().map_err(|e| Error::Parse(format!("count {s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let m = rows.first().map(|r| r.iter().map(|&c| c as usize).sum()).unwrap_or(0);
        Self::from_rows(ModelDims::new(n, m)?, &rows)
    }
}

/// Runs `burn_in` unrecorded steps and then records `T` consecutive count vectors.
pub fn simulate(cfg: &SimConfig) -> Result<ObservationSeries> {
    cfg.validate()?;
    let (n, m) = (cfg.dims.n(), cfg.dims.m());
    let p = cfg.p.get();
    let mut rng = rng_from_seed(cfg.seed);

    let mut x: Vec<usize> = match &cfg.init {
        Init::Uniform => (0..m).map(|_| uniform_index(&mut rng, n)).collect(),
        Init::AllAtFirst => vec![0; m],
        Init::Explicit(v) => v.clone(),
    };

    let mut g = GraphSample::empty(n);
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::with_capacity(n); n];
    let mut advance = |x: &mut [usize], rng: &mut SimRng| {
        sample_graph_into(&mut g, p, rng);
        for (i, list) in nbrs.iter_mut().enumerate() {
            list.clear();
            list.extend(g.neighbors(i));
        }
        move_walkers(x, &nbrs, rng);
    };

    for _ in 0..cfg.burn_in {
        advance(&mut x, &mut rng);
    }
    let mut counts = Vec::with_capacity(cfg.t * n);
    for t in 0..cfg.t {
        if t > 0 {
            advance(&mut x, &mut rng);
        }
        let start = counts.len();
        counts.resize(start + n, 0);
        for &v in &x {
            counts[start + v] += 1;
        }
    }
    Ok(ObservationSeries { dims: cfg.dims, t: cfg.t, counts, burn_in: Some(cfg.burn_in) })
}
