//! Numerical estimation of quasi-analytic Gevrey regularity and wave front
//! sets for sampled one-dimensional signals.
//!
//! The pipeline restricts a signal to a ball, extends it back to the grid,
//! multiplies by dilated Gaussian windows `E_{x0,vN}` and fits the growth of
//! weighted spectral majorants over a cone of frequencies. A signal is
//! declared regular at `(x0, direction)` when some extension keeps those
//! majorants bounded by `C^{n+1} n^{sn}` uniformly in `N`.

// `!(x > y)` also rejects NaN, which every validation here relies on.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod config;
pub mod corpus;
pub mod error;
pub mod grid;
pub mod localization;
pub mod operator;
pub mod par;
pub mod parametrix;
pub mod scanner;
pub mod windows;

pub use error::{Error, Result};
pub use grid::{forward_transform, inverse_transform, Grid, GridSignal, Spectrum};
pub use localization::{ExtensionCandidate, ExtensionKind};
pub use par::Execution;
pub use windows::WindowSpec;
