//! Simulator and analysis toolkit for Hamiltonian-transient Game of Life
//! dynamics on finite square lattices.
//!
//! The model alternates two steps, generation after generation: free
//! evolution of cell densities under a quadratic fermionic Hamiltonian for a
//! transient of length `tau`, then a synchronous Game-of-Life-style rule
//! whose thresholds are widened by a parameter `sigma`. At `tau = 0`,
//! `sigma = 0` the pipeline reduces bit-exactly to the classical Game of
//! Life with fixed (non-wrapping) borders.
//!
//! Module map:
//!
//! - [`lattice`]: geometry, Moore neighborhoods, binary states, seeded RNG.
//! - [`propagator`]: single-particle Hamiltonian `h = I - 2A`, its unitary
//!   exponential, and the doubly stochastic density transfer matrix
//!   `M = |U|^2`.
//! - [`fock`]: exact full-Hilbert-space oracle (Jordan-Wigner operators,
//!   Schrödinger evolution, rule operator, sequence classifiers) for mode
//!   counts small enough to brute-force.
//! - [`engine`]: the generation loop, classical and widened rules, cycle
//!   detection.
//! - [`spectral`]: QGoL-vs-GoL error surfaces, alive-cell density series,
//!   Fourier power spectra, power-law fits.
//! - [`blob`]: 8-connected component statistics of binary frames.
//! - [`study`]: exhaustive 5x5 classical classification and sampled
//!   quantum-vs-classical transient/period surfaces.
//! - [`formats`], [`config`], [`commands`]: file formats, flat-config
//!   parsing, and the CLI command implementations.

pub mod blob;
pub mod commands;
pub mod config;
pub mod engine;
pub mod fock;
pub mod formats;
pub mod lattice;
pub mod propagator;
pub mod spectral;
pub mod study;

pub use blob::{BlobRecord, CentroidHistogram, FrameBlobStats};
pub use engine::{CycleReport, GenerationTrace, RuleParams, RuleReading, RunConfig};
pub use lattice::{BinaryState, DensityField, LatticeSpec, NeighborhoodTable};
pub use propagator::{HamiltonianEig, Propagator, SingleParticleHamiltonian, TransferMatrix};
pub use study::{AttractorCatalog, AttractorInfo, ComparisonSurface, TransientSummary};

/// Crate-wide error type. The CLI maps variants onto exit codes: usage and
/// configuration problems exit 1, numeric failures exit 2, failed
/// verification checks exit 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad or inconsistent configuration (missing keys, invalid values,
    /// mismatched dimensions supplied by the user).
    #[error("configuration error: {0}")]
    Config(String),

    /// Syntax error in a flat config file, with its line number.
    #[error("config error at line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    /// Malformed input data (PBM, hex state, catalog records, ...).
    #[error("format error: {0}")]
    Format(String),

    /// Internal dimension mismatch between lattice-sized objects.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Request beyond a hard capacity ceiling (Fock mode count, integer
    /// state width).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Numerical failure (eigensolver non-convergence, impossible fit).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A verification subcommand found residuals above tolerance.
    #[error("verification failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error per the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) => 2,
            Error::CheckFailed(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
