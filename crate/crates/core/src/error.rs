use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Scheme parameters violate a structural invariant; the message names it.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An exhaustive computation would exceed its enumeration budget.
    #[error("budget exceeded: {what} needs {needed}, limit is {limit}")]
    Resource {
        what: String,
        needed: u128,
        limit: u128,
    },

    /// A share set fails the advance-shareability criterion.
    #[error(
        "set {set} is not advance shareable: dim C_J = {shortened_dim} \u{2260} dim C \u{2212} {} = {}",
        2 * set_size,
        signed(*required)
    )]
    NotAdvanceShareable {
        set: String,
        set_size: usize,
        shortened_dim: usize,
        required: i64,
    },

    /// No logical representative with the requested support exists.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Logical operators could not be matched to the encoder.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// A numerical verdict fell between the acceptance and rejection thresholds.
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

/// Integer with a typographic minus sign.
fn signed(v: i64) -> String {
    if v < 0 {
        format!("\u{2212}{}", v.unsigned_abs())
    } else {
        v.to_string()
    }
}

pub type Result<T> = std::result::Result<T, Error>;
