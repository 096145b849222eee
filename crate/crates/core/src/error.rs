use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Which oscillation threshold was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    /// The bare OPO at `x = 1`.
    OpenLoop,
    /// The CF loop round-trip gain reaching unity.
    ClosedLoop,
}

impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdKind::OpenLoop => f.write_str("open-loop"),
            ThresholdKind::ClosedLoop => f.write_str("closed-loop"),
        }
    }
}

/// Errors raised by the physics and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: expected {bound}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        bound: &'static str,
    },
    #[error("pump strength x = {x} is at or above the {kind} oscillation threshold")]
    AboveThreshold { x: f64, kind: ThresholdKind },
    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub fn is_threshold(&self) -> bool {
        matches!(self, Error::AboveThreshold { .. })
    }
}

/// Checks `value` against a closed/open interval and names the field on failure.
pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    bound: &'static str,
    ok: impl Fn(f64) -> bool,
) -> Result<()> {
    if value.is_finite() && ok(value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, bound })
    }
}
