use thiserror::Error;

use crate::graph::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {}", format_violations(.0))]
    InvalidGraph(Vec<Violation>),

    #[error("edge {u}-{v}: weight must be positive, got {weight}")]
    NonPositiveWeight { u: usize, v: usize, weight: f64 },

    #[error("edge weighting has {got} entries, graph has {expected} edges")]
    WeightingShape { expected: usize, got: usize },

    #[error("function is not {eps}-Lipschitz: psi({x}) - psi({y}) = {diff} > eps * d = {bound}")]
    NotLipschitz { x: usize, y: usize, diff: f64, bound: f64, eps: f64 },

    #[error("window of radius {have} cannot hold the requested region (needs {need})")]
    WindowTooSmall { have: usize, need: String },

    #[error("family `{family}` supports radius at most {max}, requested {requested}")]
    RadiusUnsupported { family: String, max: usize, requested: usize },

    #[error("empty sample of centers")]
    EmptySample,

    #[error("negative time t = {0}")]
    NegativeTime(f64),

    #[error("spectral parameter {z} lies within {distance:e} of eigenvalue {eigenvalue}")]
    Singular { z: String, eigenvalue: f64, distance: f64 },

    #[error("norm exponents must lie in [1, inf], got p = {p}, q = {q}")]
    BadExponent { p: f64, q: f64 },

    #[error("window has {size} vertices; {what} is limited to {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },

    #[error("operation requires {0}")]
    Precondition(String),

    #[error("tessellation: {0}")]
    Tessellation(String),

    #[error("vertex {0} is on the patch boundary, curvature undefined")]
    BoundaryVertex(usize),

    #[error("family spec `{spec}` at byte {pos}: {msg}")]
    FamilySpec { spec: String, pos: usize, msg: String },

    #[error("graph file: {0}")]
    GraphFile(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    let mut out = v.iter().take(5).map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
    if v.len() > 5 {
        out.push_str(&format!("; ... ({} total)", v.len()));
    }
    out
}

pub type Result<T> = std::result::Result<T, Error>;
