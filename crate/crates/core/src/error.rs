use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A size or memory limit was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An object is missing something the operation needs.
    #[error("invalid state: {0}")]
    State(String),

    /// The graph lacks the symmetry that was requested.
    #[error("symmetry absent: {0}")]
    SymmetryAbsent(String),

    /// Coupler elimination requested outside the dispersive regime.
    #[error("dispersive regime violated: |Δ| = {detuning_mhz} MHz ≤ |g| = {coupling_mhz} MHz for qubit {qubit}, coupler {coupler}")]
    DispersiveViolation {
        qubit: usize,
        coupler: usize,
        detuning_mhz: f64,
        coupling_mhz: f64,
    },

    /// Time integration did not converge.
    #[error("integration failed at t = {time_ns} ns: {reason}")]
    Integration { time_ns: f64, reason: String },

    /// A dense linear-algebra routine failed.
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
