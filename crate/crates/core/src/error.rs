use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid code distance {0}: must be odd and at least 3")]
    InvalidDistance(usize),
    #[error("length mismatch: {what} has length {got}, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown decoder `{0}` (expected one of mwpm, uf, bp, guided-mwpm)")]
    UnknownDecoder(String),
    #[error("unknown ablation component `{0}` (expected gate, meas, idle or loss)")]
    UnknownComponent(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("empty data: {0}")]
    EmptyData(String),
    #[error("guide table: {0}")]
    GuideTable(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed table: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::LengthMismatch { what, got, expected })
    }
}
