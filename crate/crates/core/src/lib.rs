//! # thermofid
//!
//! Finite-temperature state distinguishability for quasi-free fermionic
//! chains: mixed-state (Uhlmann) fidelity, Bures distance, and the thermal
//! Loschmidt echo, with the XY spin chain as the built-in model family.
//!
//! A Hamiltonian of the form H = Σ_k [ε_k (n_k + n_{-k}) + Δ_k (-i c_k†c_{-k}† + h.c.)]
//! block-diagonalizes over momentum pairs (k, -k). Each pair contributes a
//! 2x2 even-parity block ε_k σ_z + Δ_k σ_y with quasiparticle gap
//! Λ_k = sqrt(ε_k² + Δ_k²) and Bogoliubov angle θ_k, while the odd-parity
//! sector is inert. Fidelity and echo between two Gibbs states of such
//! Hamiltonians therefore factorize into per-mode products, which this crate
//! evaluates in closed form and entirely in log space so that inverse
//! temperatures up to 1e4 stay finite.
//!
//! Modules:
//!
//! - [`model`] — momentum modes, quasi-free models, the XY-chain mapping.
//! - [`fidelity`] — per-mode and total thermal fidelity, commuting-case
//!   specializations, Bures distance.
//! - [`loschmidt`] — thermal Loschmidt echo and its zero-temperature limit.
//! - [`oracle`] — dense-matrix cross-check: explicit 4x4 mode density
//!   matrices, a complex Jacobi eigensolver, PSD square roots, and Uhlmann
//!   fidelity computed from first principles.
//! - [`sweep`] — (γ, λ) parameter-sweep engine, CSV output, gnuplot script
//!   emission.
//! - [`cli`] — the `thermofid` command-line front end.

use std::path::PathBuf;

use thiserror::Error;

pub mod cli;
pub mod fidelity;
pub mod loschmidt;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod sweep;

/// Errors surfaced by model construction, the dense oracle, and the sweep
/// engine. Pure per-mode kernels are total functions and do not error.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid config field `{field}`: {message}")]
    Config {
        field: &'static str,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
