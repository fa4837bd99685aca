//! Error type shared by every module of the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building meshes, assembling the
/// system or running a solver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Mesh construction rejected its inputs (non-positive capacity,
    /// duplicate edge, inconsistent grid metadata, ...).
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// A scenario description is internally inconsistent.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// A block index outside `[0, n_blocks)`.
    #[error("block index {index} out of range for a mesh with {n_blocks} blocks")]
    InvalidBlockId { index: usize, n_blocks: usize },

    /// The block has no neighbours, so its characteristic time is
    /// undefined and no solver can step it.
    #[error("block {0} has no neighbours; its characteristic time is undefined")]
    IsolatedBlock(usize),

    /// A temperature field does not match the mesh it is used with.
    #[error("field length {field} does not match expected length {expected}")]
    SizeMismatch { field: usize, expected: usize },

    /// Two fields (or a field and a configuration) carry different
    /// time stamps where equal ones are required.
    #[error("time stamps differ: {a} vs {b}")]
    TimeMismatch { a: f64, b: f64 },

    /// The mesh exceeds a dense-algebra or report-size guard.
    #[error("{n} blocks exceeds the supported maximum of {max}")]
    TooLarge { n: usize, max: usize },

    /// The mesh has more than one connected component.
    #[error("mesh is disconnected; a single connected component is required here")]
    Disconnected,

    /// A solver configuration failed validation.
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    /// Explicit Euler blew past the divergence threshold.
    #[error("instability detected at step {step}: max |T| reached {magnitude:.3e}")]
    Divergence { step: usize, magnitude: f64 },

    /// The adaptive integrator could not make progress.
    #[error("adaptive step size control failed: {0}")]
    AdaptiveFailure(String),

    /// Convergence-order fitting received unusable data.
    #[error("cannot fit a convergence order: {0}")]
    DegenerateFit(String),

    /// The LAPACK eigensolver reported failure.
    #[error("eigendecomposition failed: {0}")]
    Linalg(String),

    /// Reading or writing a report file failed.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// A report or input file failed to parse.
    #[error("parse error: {0}")]
    Parse(String),
}
