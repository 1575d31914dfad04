use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Table construction needs a horizon of at least one observation.
    #[error("horizon must be at least 1")]
    EmptyHorizon,

    /// The grid is too coarse for the quadrature guarantees.
    #[error("grid needs at least {min} nodes, got {got}")]
    GridTooCoarse { min: usize, got: usize },

    /// Root tolerance must be positive and no larger than the grid spacing.
    #[error("root tolerance {0:e} must lie in (0, grid spacing]")]
    BadRootTolerance(f64),

    /// A stage index outside the range covered by a table.
    #[error("stage {k} outside the table range 0..={n}")]
    StageOutOfRange { k: usize, n: usize },

    /// A numeric argument outside its documented domain.
    #[error("{name} = {value} outside {range}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// Value and variance tables built on different grids or horizons.
    #[error("tables disagree on grid or horizon")]
    TableMismatch,

    /// An operation received fewer samples or replicates than it needs.
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    /// Writing an export stream failed; carries the underlying message.
    #[error("write failed: {0}")]
    Write(String),
}

pub type Result<T> = std::result::Result<T, Error>;
