use thiserror::Error;

/// Errors raised by the register model, pulse design and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Dominant-component labeling of the eigenvectors is not a permutation,
    /// which means the computational basis no longer approximates the eigenbasis.
    #[error("eigenstate labeling failed: basis state {label} claimed by {count} eigenvectors (min dominant weight {min_weight:.3})")]
    Labeling {
        label: usize,
        count: usize,
        min_weight: f64,
    },

    /// |A/2 - gamma_e dB| is inside the guard band around the E10/E12 exchange.
    #[error("hyperfine/Zeeman swap boundary: |A/2 - gamma_e dB|/2pi = {margin_hz:.1} Hz is below the {guard_hz:.1} Hz guard")]
    SwapBoundary { margin_hz: f64, guard_hz: f64 },

    #[error("singular expression: {0}")]
    Pole(&'static str),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("time step too coarse: dt * max|H| = {ratio:.3e} exceeds {limit}")]
    StepSize { ratio: f64, limit: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors that signal the physical model left its valid regime
    /// (labeling failures, poles, swap-boundary proximity) as opposed to bad
    /// input or internal failures.
    pub fn is_validity(&self) -> bool {
        matches!(
            self,
            Error::Labeling { .. } | Error::SwapBoundary { .. } | Error::Pole(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
