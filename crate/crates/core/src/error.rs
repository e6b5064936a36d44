use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field cannot be normalized (all amplitudes zero)")]
    Unnormalizable,

    #[error("initializer support incompatible with grid extent: {0}")]
    SupportOutsideExtent(String),

    #[error("particles {i} and {j} do not have matching axes")]
    MismatchedAxes { i: usize, j: usize },

    #[error("particle index {0} out of range")]
    ParticleOutOfRange(usize),

    #[error("stencil touches the nodal set near configuration index {index}")]
    NodeProximity { index: usize },

    #[error("phase step of {step:.4} rad between neighbors aliases (limit {limit:.4})")]
    PhaseAliasing { step: f64, limit: f64 },

    #[error("point lies outside the grid extent")]
    OutsideExtent,

    #[error("path is invalid: {0}")]
    InvalidPath(String),

    #[error("time step violates the anti-aliasing bound: dt*Emax/hbar = {ratio:.3} >= pi")]
    AliasingBound { ratio: f64 },

    #[error("potential is not exchange-symmetric (max asymmetry {0:e})")]
    AsymmetricPotential(f64),

    #[error("local spin matrix is not Hermitian")]
    NonHermitian,

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("no usable sample configurations (all touch the nodal set)")]
    EmptySampleSet,

    #[error("degenerate density (all zero)")]
    DegenerateDensity,

    #[error("{halted} of {total} trajectories halted, above the 1% budget")]
    HaltedFraction { halted: usize, total: usize },

    #[error("invalid box layout: {0}")]
    InvalidLayout(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed field dump: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
