//! Regular decomposition: compression of graphs and non-negative matrices
//! into stochastic-block-model structure by two-part MDL code-length
//! minimization.
//!
//! The crate is organized as a stack:
//!
//! - [`infotheory`] — scalar entropies, divergences, rate functions and
//!   Rissanen's universal integer code length, all in nats;
//! - [`blockmodels`] — partitions, model specifications and seeded
//!   generators for binary and Poissonian block models;
//! - [`codelength`] — the five-part block-model codes, the two-part
//!   objectives for graphs and matrices, and parametric-complexity bounds;
//! - [`optimizer`] — greedy per-node reassignment and multi-restart search
//!   over partitions and over the model order;
//! - [`harness`] — desk-scale Monte Carlo experiments checking the
//!   consistency and dominance claims the code-length theory makes;
//! - [`io`] — edge-list, CSV and partition file formats.

pub mod blockmodels;
pub mod codelength;
pub mod harness;
pub mod infotheory;
pub mod io;
pub mod optimizer;

mod error;

pub use blockmodels::{
    BlockModelSpec, CountMatrix, Graph, Partition, PoissonBlockSpec, WeightMatrix,
};
pub use codelength::{BlockSummary, CodeLengthBreakdown, TwoPartScore};
pub use error::Error;
pub use harness::ExperimentReport;
pub use optimizer::{GraphFitResult, MatrixFitResult};

/// Natural-log units per bit; divide a nat quantity by this to report bits.
pub const NATS_PER_BIT: f64 = std::f64::consts::LN_2;

/// Convert a quantity in nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / NATS_PER_BIT
}
