// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error(
        "Franck-Condon state only {captured:.4} captured by retained eigenstates \
         (floor {floor}); raise the energy cutoff"
    )]
    FranckCondonTruncated { captured: f64, floor: f64 },

    #[error("density matrix is not Hermitian (max deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("integrator step size underflow at t = {time_ps} ps (h = {step:e})")]
    StepUnderflow { time_ps: f64, step: f64 },

    #[error("requested t = {requested_ps} ps outside trajectory range [{start_ps}, {end_ps}] ps")]
    Extrapolation {
        requested_ps: f64,
        start_ps: f64,
        end_ps: f64,
    },

    #[error("unfolding needs at least {need} levels, got {have}")]
    InsufficientLevels { have: usize, need: usize },

    #[error("energy band [{lo}, {hi}] eV contains no levels")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("config: {field}: {message}")]
    Config { field: String, message: String },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
