//! Hyper-rectangular conformal prediction sets for multivariate regression,
//! built from coordinate-wise standardized residuals with transductive
//! (calibrate-then-query, test-point-free) scaling.
//!
//! The core entry points are [`tscp::tscp_calibrate`] for the sharp
//! transductive method, [`tscp::gwc_calibrate`] for its conservative
//! closed-form relaxation, and the [`methods`] registry which exposes both
//! alongside baseline calibrators behind one trait. [`sim`] provides a
//! synthetic-data experiment harness and [`oracles`] brute-force references
//! used by the test suite.

pub mod cli;
pub mod error;
pub mod link;
pub mod methods;
pub mod oracles;
pub mod residuals;
pub mod seed;
pub mod sim;
pub mod stats;
pub mod tscp;

pub use error::{Error, Result};
pub use residuals::{ModelOutput, OutcomeRectangle, ResidualMatrix, Table};
pub use stats::ScalingParams;
pub use tscp::{gwc_calibrate, tscp_calibrate, TscpResult};
