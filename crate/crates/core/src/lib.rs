//! Max-stable models of spatial precipitation extremes whose spectral
//! functions come from ensemble weather forecasts.
//!
//! The crate covers the whole chain from raw data to validated models:
//!
//! - [`data`] and [`geo`]: grids, stations, forecast archives, block maxima,
//!   great-circle geometry.
//! - [`marginals`]: GEV law, probability-weighted-moment fits, KS checks,
//!   rank transform to unit Fréchet.
//! - [`dependence`]: rank-based F-madogram estimates of pairwise and
//!   higher-order extremal coefficients.
//! - [`basis`]: spectral bases built from all forecast maps or from the
//!   maps whose sup-norm exceeds a high quantile.
//! - [`models`]: max-linear, Reich–Shaby, max-mixture and anisotropic
//!   Brown–Resnick models with exact simulators.
//! - [`fit`]: RMSE fits against empirical extremal coefficients and
//!   parametric-bootstrap envelopes.
//! - [`synth`]: synthetic scenarios with known ground truth.
//! - [`pipeline`]: the file-based stages behind the `maxstable` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod data;
pub mod dependence;
pub mod error;
pub mod fit;
pub mod geo;
pub mod marginals;
pub mod models;
pub mod panel_io;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod special;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
