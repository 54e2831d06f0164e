//! Statistical-learning toolkit for post-wildfire mudflow onset experiments:
//! regression of discharge and erosion, failure classification, PCA and
//! clustering, cross-validation and sensitivity sweeps.

pub mod classify;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod numerics;
pub mod regression;
pub mod sensitivity;
pub mod unsupervised;
pub mod validation;

pub use error::Error;
