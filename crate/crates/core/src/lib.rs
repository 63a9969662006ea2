//! Pseudospectral solver for a fractional Cahn-Hilliard / cross-diffusion system
//! on rectangles with no-flux boundary conditions.
//!
//! The state is a phase field `phi` and a nutrient field `c`. The phase field
//! carries a spectral-fractional diffusion operator `(-Delta)^s` (defined through
//! the Neumann cosine eigenbasis), a logarithmic double-obstacle-type potential
//! regularized at scale `delta`, and a cross-diffusion coupling to `c`. Time
//! stepping is first-order IMEX with the stiff per-mode linear parts implicit,
//! gated by an a posteriori discrete energy-balance residual.
//!
//! Module layout:
//! - [`spectral`]: grids, fields, cosine/sine transforms, fractional operators,
//!   gradient/divergence, norms, dealiasing.
//! - [`potential`]: the mixing potential, its convex/non-convex split, the
//!   `delta`-regularization, and the truncation maps.
//! - [`model`]: model parameters, chemical potential, fluxes, and the full
//!   right-hand side.
//! - [`integrator`]: the IMEX stepper, the energy-residual acceptance policy,
//!   and the run loop.
//! - [`diagnostics`]: energy/dissipation reports, the energy-balance residual,
//!   the fractional positivity check, and the parameter-sweep driver.
//! - [`config`]: run configuration parsing/validation and initial states.
//! - [`snapshot`]: the binary field snapshot format.
//! - [`verify`]: the self-check suite behind `fracchs verify`.

pub mod config;
pub mod diagnostics;
pub mod integrator;
pub mod model;
pub mod potential;
pub mod snapshot;
pub mod spectral;
pub mod verify;

use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scalar or descriptor argument is outside its documented range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    /// Two fields that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// Configuration text failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),
    /// A pointwise evaluation was requested outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A time step produced a non-finite update, or the step size underflowed.
    #[error("step failure: {0}")]
    Step(String),
    /// Snapshot bytes did not match the declared format.
    #[error("snapshot format error: {0}")]
    Snapshot(String),
    /// File-system failure, annotated with the path involved.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Shorthand for [`Error::InvalidParameter`].
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Shorthand for [`Error::Io`], capturing the offending path.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
