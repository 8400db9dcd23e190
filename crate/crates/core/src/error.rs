use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no crossing found for {what}")]
    NoCrossing { what: String },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("infeasible operating point: {0}")]
    Infeasible(String),

    #[error("non-physical state: norm {norm} exceeds unity")]
    NonPhysical { norm: f64 },

    #[error("single-qubit operation would amplify (attenuation {attenuation} > 1)")]
    GainForbidden { attenuation: f64 },

    #[error("zero total power in the {basis} basis")]
    ZeroPower { basis: &'static str },

    #[error("tomography setting {0} missing")]
    MissingSetting(String),

    #[error("no coincidences recorded for setting {0}")]
    ZeroCoincidences(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
