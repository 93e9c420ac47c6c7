use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Combined channel is (numerically) zero: no finite transmit power can
    /// meet the SNR target.
    #[error("degenerate channel: combined channel is zero, required power is infinite")]
    DegenerateChannel,

    /// Exhaustive enumeration over `2^(b*N)` candidates was refused.
    #[error("instance too large for exhaustive search: b*N = {bits_times_n} exceeds {limit}")]
    TooLargeInstance { bits_times_n: u32, limit: u32 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
