use alloc::string::String;

/// Errors raised across the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("conformance error: {0}")]
    Conformance(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("numeric error in {0}: non-finite value")]
    Numeric(String),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Training { epoch: usize, loss: f64 },
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("data integrity error: {0}")]
    DataIntegrity(String),
    #[error("undefined AUC: {0}")]
    UndefinedAuc(String),
    #[error("coverage error: missing explanation for graph {0}")]
    Coverage(u64),
}

pub type Result<T> = core::result::Result<T, Error>;
