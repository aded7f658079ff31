use thiserror::Error;

#[derive(Debug, Error)]
pub enum IbrlError {
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("belief degenerate: no particle is consistent with the observations")]
    DegenerateBelief,

    #[error("alpha-function explosion: {requested} alpha-functions exceed the cap of {cap}")]
    Explosion { requested: u128, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("policy bundle: {0}")]
    Bundle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IbrlError>;

pub(crate) fn check_index(what: &'static str, index: usize, size: usize) -> Result<()> {
    if index < size {
        Ok(())
    } else {
        Err(IbrlError::IndexOutOfRange { what, index, size })
    }
}
