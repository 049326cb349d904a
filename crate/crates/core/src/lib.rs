//! Weighted-graph spectral toolkit: intrinsic metrics, volume growth, Dirichlet
//! truncations of graph Laplacians, heat and resolvent kernels, Cheeger
//! constants and tessellation curvature.

pub mod cheeger;
pub mod error;
pub mod generators;
pub mod graph;
pub mod growth;
pub mod linalg;
pub mod metric;
pub mod operator;
pub mod report;
pub mod spectra;
pub mod tessellation;

pub use error::{Error, Result};
