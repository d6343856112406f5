//! Long cycles in sparse random multigraphs near the phase transition.
//!
//! The crate builds a long cycle in four stages: extract the weighted kernel
//! of the 2-core of the giant component, run the weighted 2-Greedy matching
//! algorithm on it, compare the traced process against its fluid-limit ODE,
//! and stitch the matching's path cover into a single cycle using a reserve
//! of withheld edges. The `harness` module wires these into reproducible
//! seeded experiments behind a CLI.

pub mod cyclebuilder;
pub mod demode;
pub mod genmodels;
pub mod harness;
pub mod kernelizer;
pub mod multigraph;
pub mod rng;
pub mod twogreedy;
pub mod weightdist;

pub use multigraph::{EdgeId, Multigraph, Vertex, VertexSet};
pub use rng::SeedRng;

#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("infeasible input: {0}")]
    Infeasible(String),
    #[error("rejection retry cap exceeded")]
    RetryCapExceeded,
    #[error("format error: {0}")]
    Format(String),
    #[error("empty kernel: {0}")]
    EmptyKernel(String),
    #[error("domain exit at x={x}: {reason}")]
    DomainExit { x: f64, reason: String },
    #[error("step size underflow at x={0}")]
    StepUnderflow(f64),
    #[error("invalid cycle at index {index}: {reason}")]
    InvalidCycle { index: usize, reason: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
