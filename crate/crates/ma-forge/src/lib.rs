//! Numerical laboratory for degenerate Monge-Ampere problems.
//!
//! The crate builds Alexandrov-style solutions of the obstacle problem
//!
//! ```text
//!   u >= psi,   det D^2 u <= 1,   det D^2 u = 1 on { u > psi },
//! ```
//!
//! with piecewise-affine obstacles psi (support functions of small polytopes,
//! or capped affine families), takes discrete Legendre transforms of the
//! solved fields, and verifies the geometric structure of the resulting
//! singular convex functions: contact-set topology against the polytope's
//! normal fan, Dirac masses of the Monge-Ampere measure at vertices,
//! vanishing on the dual skeleton, sublevel volume growth, subgradient
//! dimension bounds, and quadratic asymptotics at infinity.
//!
//! Modules follow the pipeline order: [`geometry`] (polytopes, support
//! functions, normal-fan strata), [`barriers`] (radial and split barrier
//! profiles with known determinants), [`grid`] (tensor grids and lattice
//! frames), [`ma_op`] (the monotone wide-stencil operator and subgradient
//! measure), [`solver`] (projected sweeps and the two pipelines),
//! [`legendre`] (fast conjugation), [`analysis`] (contact extraction and
//! verification checks), [`report`] (serializable outcome of a run).

pub mod analysis;
pub mod barriers;
pub mod config;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod legendre;
mod linalg;
pub mod ma_op;
mod quadrature;
pub mod report;
pub mod solver;

use thiserror::Error;

/// Crate-wide error type. Variants mirror the contract failures of the
/// individual modules so callers can map them to process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("grid: {0}")]
    Grid(String),
    #[error("barrier: {0}")]
    Barrier(String),
    #[error("legendre: {0}")]
    Legendre(String),
    #[error("operator: {0}")]
    Operator(String),
    #[error("solver did not converge: residual {residual:.3e} after {sweeps} sweeps (tol {tol:.1e})")]
    NonConvergence {
        residual: f64,
        sweeps: usize,
        tol: f64,
    },
    #[error("analysis: {0}")]
    Analysis(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Number of worker threads for Jacobi sweeps. Reads `MA_FORGE_THREADS`,
/// falling back to the machine's available parallelism.
pub fn worker_threads() -> usize {
    std::env::var("MA_FORGE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1)
        })
}
