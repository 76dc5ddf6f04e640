//! Granger causal discovery from event sequences observed on the nodes of a
//! known topology, using a topological neural Poisson auto-regressive model
//! with amortized variational inference over the causal graph.
//!
//! The crate is organized along the pipeline:
//!
//! - [`sim`] generates synthetic event sequences with a known causal DAG;
//! - [`ingest`] bins events into count tensors and history windows;
//! - [`graph`] holds the topology, distance masks, causal tensors and the
//!   acyclicity function;
//! - [`nn`] is the small dense-network toolkit (gradients, Adam);
//! - [`model`] is the encoder / decoder pair;
//! - [`train`] assembles the regularized objective and fits it;
//! - [`metrics`] scores a recovered graph;
//! - [`experiment`] wires everything into reproducible runs and sweeps.

pub mod error;
pub mod experiment;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
