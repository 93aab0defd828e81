use thiserror::Error;

/// Errors raised by constructors, transformations and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {total} does not factorize as {system} x {env}")]
    NotFactorizable { total: usize, system: usize, env: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid Kraus set: {0}")]
    InvalidKraus(String),

    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time grids do not match")]
    GridMismatch,

    #[error("time grid too small: need at least {min} steps, got {found}")]
    GridTooSmall { min: usize, found: usize },

    #[error("{what} is not completely positive at node {node} (min Choi eigenvalue {min_eig:e})")]
    NotCp { what: String, node: usize, min_eig: f64 },

    #[error("{what} is not a channel (CPTP) at node {node}")]
    NotCptp { what: String, node: usize },

    #[error("{what} is not positive semidefinite at node {node} (min eigenvalue {min_eig:e})")]
    NotPsd { what: String, node: usize, min_eig: f64 },

    #[error("weights must be nonnegative and sum to one: {0}")]
    InvalidWeights(String),

    #[error("negative rate q[{i}][{j}] = {value:e} at node {node}")]
    NegativeRate { i: usize, j: usize, node: usize, value: f64 },

    #[error("cumulative jump mass out of [0, 1] for state {state} at node {node}: {mass}")]
    MassOutOfRange { state: usize, node: usize, mass: f64 },

    #[error("marching correction factor is singular; reduce the step size")]
    SingularMarching,

    #[error("Laplace-domain map is numerically singular (condition number {condition:e})")]
    SingularLaplace { condition: f64 },

    #[error("Laplace-transformed survival of state {state} vanishes at s = {s}")]
    VanishingSurvival { state: usize, s: f64 },

    #[error("Laplace transforms do not commute (relative commutator {norm:e} at s = {s})")]
    NotCommuting { s: f64, norm: f64 },
}

impl Error {
    /// True for failures that arise while computing rather than while
    /// validating input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularMarching
                | Error::SingularLaplace { .. }
                | Error::NotCommuting { .. }
                | Error::VanishingSurvival { .. }
                | Error::NotCp { .. }
                | Error::NotCptp { .. }
                | Error::NotPsd { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
