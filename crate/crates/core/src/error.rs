use thiserror::Error;

/// Library-wide error type. Every fallible operation routes through this enum
/// so the CLI can map failures onto stable exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate field configuration: {0}")]
    DegenerateField(String),

    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),

    #[error("level n={n} out of supported range (max {max})")]
    LevelRange { n: usize, max: usize },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("family {family} does not accept offset {offset}")]
    UnsupportedOffset { family: String, offset: String },

    #[error("grid specification invalid: {0}")]
    InvalidGrid(String),

    #[error("grid too coarse for the state's bandwidth along {axis}: fraction {fraction:.2e} of spectral power above {threshold:.2e} sits in the top band")]
    Resolution {
        axis: char,
        fraction: f64,
        threshold: f64,
    },

    #[error("shift of {amount} along {axis} is not an integer multiple of the grid step {step} and the axis is not periodic")]
    IncommensurateShift { axis: char, amount: f64, step: f64 },

    #[error("states are orthogonal within tolerance; no global phase defined")]
    NoPhase,

    #[error("ill-conditioned operator product: norm ratio {ratio:.2e} exceeds {limit:.2e}")]
    IllConditioned { ratio: f64, limit: f64 },

    #[error("the energy operator needs a time-indexed state, not a single snapshot")]
    EnergyOpNeedsTrajectory,

    #[error("probability {mass:.2e} within {margin} magnetic lengths of the {axis}-boundary exceeds {limit:.2e}")]
    BoundaryLeak {
        axis: char,
        mass: f64,
        margin: f64,
        limit: f64,
    },

    #[error("time step {dt:.3e} exceeds the stability bound {max:.3e}")]
    TimeStep { dt: f64, max: f64 },

    #[error("linear solver stalled after {iters} iterations (residual {residual:.2e})")]
    SolverStall { iters: usize, residual: f64 },

    #[error("singular observable: {0}")]
    Singular(String),

    #[error("empty comparison mask: {0}")]
    EmptyMask(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("state file format error: {0}")]
    FileFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
