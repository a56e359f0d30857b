//! Randomized quasi-Monte Carlo importance sampling for Gaussian-measure integrals.
//!
//! Scrambled Sobol' nets feed Gaussian or Student-t importance sampling
//! proposals (PriorIS, ODIS, LapIS). The eigenvalue check in
//! [`measure::bgc_eigen_diagnostic`] tells whether a Gaussian proposal keeps
//! the likelihood ratio friendly to RQMC.

// `!(x > 0.0)` style guards are used on purpose so that NaN takes the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod measure;
pub mod models;
pub mod nets;
pub mod positivization;
pub mod proposals;
pub mod transforms;

pub use error::{Error, Result};
pub use estimators::{RmseTable, Sampler};
pub use measure::{BgcDiagnostic, Family, GaussianMeasure, Proposal};
pub use nets::{NetSpec, PointSet};
pub use proposals::{Integrand, Method};
