use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("custom dispersion is not Hermitian: imaginary part {imag:e} at k = {k}")]
    NonHermitianCustom { k: f64, imag: f64 },

    #[error("hopping set is not Hermitian at offset {offset}")]
    NonHermitian { offset: i64 },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NonHermitianMatrix { deviation: f64 },

    #[error("hopping range {range} exceeds half the lattice size {sites}/2")]
    RangeExceedsLattice { range: usize, sites: usize },

    #[error("packet width parameter {0} is below 1 site")]
    DegenerateWidth(f64),

    #[error("state has zero norm")]
    ZeroState,

    #[error("trajectory holds no snapshot")]
    NoSnapshot,

    #[error("grating amplitude {0} exceeds the small-phase limit 0.1")]
    GratingTooStrong(f64),

    #[error("lattice sites do not fall on the transverse grid: {0}")]
    GridMisaligned(String),

    #[error("realization {index} failed: {source}")]
    Realization {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
