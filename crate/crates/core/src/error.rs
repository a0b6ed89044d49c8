use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is rank deficient (smallest singular value {min_singular_value:e})")]
    RankDeficient { min_singular_value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("distance {distance_m} m is below the reference distance {reference_m} m")]
    BelowReferenceDistance { distance_m: f64, reference_m: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("channel vector is zero")]
    ZeroChannel,

    #[error("cannot embed the zero vector")]
    ZeroVector,

    #[error("input of length {len} does not fit in {capacity} amplitudes")]
    TooLong { len: usize, capacity: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("architecture {0} is not supported by this optimizer")]
    UnsupportedArchitecture(String),

    #[error("matrix is not unitary (max deviation {max_deviation:e})")]
    NotUnitary { max_deviation: f64 },
}
