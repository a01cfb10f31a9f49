//! MuGNet: a multimodal classifier for samples with tabular, textual, and
//! visual fields, built on multiplex sample-similarity graphs.
//!
//! The pipeline: per-modality feature extraction ([`dataset`]), one
//! similarity graph per modality ([`graph`]), separate graph-attention
//! encoders per modality, attention-based fusion into a single embedding,
//! and a two-layer MLP head ([`model`]). Training uses AdamW with cosine
//! annealing and random-walk subgraph sampling ([`train`]).
//!
//! The [`stats`] module carries the benchmark side: log-loss/accuracy,
//! mean ranks with Friedman/Nemenyi critical-difference analysis,
//! dataset-wise min-max normalization, Pareto frontiers, and box-plot
//! summaries. [`profile`] computes dataset diversity statistics such as
//! Shannon equitability and missing-value percentages.
//!
//! Everything is 64-bit and deterministic under a fixed seed; gradients
//! are exact reverse-mode and verified against finite differences.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod model;
pub mod neural;
pub mod profile;
pub mod stats;
pub mod train;

pub use error::{MugError, Result};
