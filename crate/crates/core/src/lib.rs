//! Inference of the edge probability `p` of an Erdős–Rényi graph that is
//! resampled at every time step, observed only through the number of random
//! walkers sitting at each vertex.
//!
//! * [`moments`] evaluates every closed-form moment function of `p`.
//! * [`invert`] inverts decreasing scalar functions by bisection.
//! * [`sim`] simulates the graph and the walkers and records occupancy counts.
//! * [`diagnostics`] checks simulated series against one-step and pair laws.
//! * [`estimate`] turns an [`sim::ObservationSeries`] into point estimates.
//! * [`oracle`] gives exact answers on small instances by enumerating graphs.
//! * [`study`] runs seeded Monte Carlo replication studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod diagnostics;
pub mod error;
pub mod estimate;
pub mod invert;
pub mod moments;
pub mod oracle;
pub mod sim;
pub mod study;

pub use error::{Error, Result};
pub use estimate::{estimate_ls, estimate_mom, summarize, EstimationReport, Method, MomVariant, SummaryStats};
pub use invert::{invert_monotone_decreasing, Clamp, Inversion};
pub use moments::{EdgeProb, ModelDims, MomentProfile};
pub use sim::{simulate, GraphSample, Init, ObservationSeries, SimConfig, WalkerPositions};
