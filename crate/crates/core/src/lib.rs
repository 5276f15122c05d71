//! Laboratory for simplicity bias in small fully connected ReLU networks.
//!
//! The crate is split along the experiment lifecycle:
//!
//! - [`datagen`] builds datasets: multi-slab synthetic data, Dominoes image
//!   collations from IDX / CIFAR-10 sources, correlation-perturbed and
//!   label-corrupted copies, and group-annotated CSV imports.
//! - [`nnet`] is a from-scratch f64 MLP with exact backpropagation,
//!   softmax cross-entropy (optionally label-smoothed) and plain SGD.
//! - [`pipeline`] runs the training regimes (standard, two-stage noisy
//!   pre-training, label smoothing) across seeds and aggregates reports.
//! - [`probe`] measures feature dependence: block shuffle accuracy, group
//!   accuracy, first-layer Gram matrix diagnostics, decision-boundary grids,
//!   ensembles and pairwise disagreement.
//! - [`cli`] binds all of it to the `simbias` command line.

mod binio;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod linalg;
pub mod nnet;
pub mod pipeline;
pub mod probe;
pub mod seed;

pub use datagen::{Block, Dataset, DatasetMeta};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use nnet::{Dense, Mlp};
