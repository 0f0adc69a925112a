//! Explaining graph neural-network regression predictions.
//!
//! This crate holds the pure numerical machinery: graph and mask types,
//! synthetic benchmark generators, a small edge-weighted GCN regressor with
//! hand-written backpropagation, the graph mix-up construction, the
//! contrastive and size objectives, five post-hoc explainers and the
//! evaluation metrics. It is `no_std` and only needs an allocator; file
//! formats, the command line and anything touching the OS live in the
//! `regxplain` companion crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod datasets;
pub mod error;
pub mod eval;
pub mod explain;
pub mod gcn;
pub mod graph;
pub mod linalg;
pub mod losses;
pub mod mixup;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{EdgeMask, Explanation, Graph, GraphDataset, Splits};
