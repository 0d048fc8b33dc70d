//! Survival functions and first-passage-time laws for the order statistics of
//! killing times in multi-coordinate stochastic processes.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bipoisson;
pub mod cds;
pub mod curve;
pub mod error;
pub mod expsum;
pub mod montecarlo;
pub mod numeric;
pub mod paths;
pub mod singlefile;
pub mod specfun;
pub mod trivpoisson;
pub mod validate;

pub use bipoisson::BiPoissonParams;
pub use cds::{CdsConfig, CdsContract, SpreadQuote};
pub use curve::{Curve, EmpiricalCurve, TimeGrid};
pub use error::{FptError, Result};
pub use expsum::{ExpSum, ExpTerm};
pub use montecarlo::McConfig;
pub use paths::{build_gamma, enumerate_paths, GammaGraph, GammaNode, KillPath};
pub use singlefile::SpectralParams;
pub use specfun::QuadTolerance;
pub use trivpoisson::{TriPoissonParams, TrivariateModel};
