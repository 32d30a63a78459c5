use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Rotation angle too close to pi for the displacement axis to be unique.
    #[error(
        "rotation angle {angle} rad is within {tolerance} of pi; displacement axis is ambiguous"
    )]
    RotationNearPi { angle: f64, tolerance: f64 },

    #[error("rotation matrix is not a proper rotation (orthonormality error {error:e})")]
    NotARotation { error: f64 },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("refusing to overwrite existing file {} (use --force)", path.display())]
    WouldOverwrite { path: PathBuf },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
