use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the window where the model is defined.
    #[error("{quantity} = {value} is outside the valid window [{min}, {max}] {unit}")]
    Domain {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
        unit: &'static str,
    },

    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("mode cutoff: no guided fundamental mode at {wavelength_um} um (V = {v_number})")]
    ModeCutoff { wavelength_um: f64, v_number: f64 },

    #[error("no nondegenerate phasematching for pump at {pump_nm} nm")]
    NoPhasematch { pump_nm: f64 },

    #[error("no group-velocity-matched point for pump wavelengths in [{from_nm}, {to_nm}] nm")]
    NoGroupVelocityMatch { from_nm: f64, to_nm: f64 },

    #[error("grid misplaced: the joint spectral amplitude vanishes everywhere on the grid")]
    GridMisplaced,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("fit did not converge: {0}")]
    Convergence(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
