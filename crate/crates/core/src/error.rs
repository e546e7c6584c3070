use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric argument fell outside the range an operation is defined on.
    #[error("{name} = {value} is out of range (expected {expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("state vector is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("measurement basis is not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Checks `lo <= value <= hi`, rejecting NaN.
pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    expected: &'static str,
) -> Result<f64> {
    if value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    check_range(name, value, 0.0, 1.0, "[0, 1]")
}
