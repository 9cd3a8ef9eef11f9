//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors reported by analysis, tuning, certification and simulation routines.
///
/// Variants carry enough context to diagnose the failing call without a
/// debugger; functions document which variants they can return.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument failed basic validation (wrong sign, empty list, bad
    /// dimension, ...).
    #[error("invalid argument `{arg}`: {reason}")]
    InvalidArgument { arg: &'static str, reason: String },

    /// The closed-loop (or supplied) matrix has spectral radius >= 1, so the
    /// requested steady-state quantity does not exist.
    #[error("matrix is not Schur stable (spectral radius {rho})")]
    Unstable { rho: f64 },

    /// A linear system that the caller's preconditions promise to be
    /// nonsingular could not be solved.
    #[error("singular linear system in {context}")]
    Singular { context: &'static str },

    /// A parameter lies outside the domain of the requested formula.
    #[error("parameter `{param}` = {value} outside valid range {range}")]
    OutOfRange {
        param: &'static str,
        value: f64,
        range: &'static str,
    },

    /// The parameter pair lies outside the AG stability region.
    #[error("(alpha, beta) = ({alpha}, {beta}) is outside the stability region")]
    NotStable { alpha: f64, beta: f64 },

    /// A robustness denominator vanished: the noise amplification diverges at
    /// this parameter choice.
    #[error("robustness index diverges at lambda = {lambda}")]
    Divergent { lambda: f64 },

    /// The polynomial passed to the root finder has no roots to find.
    #[error("polynomial has degree zero")]
    DegreeZero,

    /// An iteration failed to meet its tolerance within its iteration cap.
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    /// The exact polynomial tuning path is limited to small spectra.
    #[error("exact trade-off path supports at most {max} distinct eigenvalues, got {got}")]
    ExactPathUnsupported { max: usize, got: usize },

    /// No stationary-point candidate survived filtering; callers fall back to
    /// the boundary candidate themselves, so this signals a logic error.
    #[error("no interior candidate for the trade-off optimum")]
    NoInteriorCandidate,

    /// The rate-offset parameter eps lies outside its admissible interval.
    #[error("eps = {eps} outside [0, {max}) for this method")]
    EpsOutOfRange { eps: f64, max: f64 },

    /// Condition number one: the eps-parameterizations are degenerate.
    #[error("kappa = 1: rate-offset parameterization is degenerate")]
    KappaOne,

    /// A parameter grid contained no admissible point.
    #[error("parameter grid contains no stable point")]
    EmptyGrid,

    /// The certificate matrix P is not positive semidefinite.
    #[error("certificate matrix P has eigenvalue {min_eig} < 0")]
    PNotPsd { min_eig: f64 },

    /// A bound was requested from a certificate that is not feasible.
    #[error("certificate is infeasible (slack eigenvalue {slack_min_eig})")]
    InfeasibleCert { slack_min_eig: f64 },

    /// The SDP has no strictly feasible point at the requested rate.
    #[error("SDP infeasible (phase-1 slack {slack})")]
    Infeasible { slack: f64 },

    /// An interior-point step could not make progress.
    #[error("numerical failure in {context}")]
    NumericalFailure { context: &'static str },

    /// A simulated trajectory produced NaN or infinity.
    #[error("non-finite value at iteration {index}")]
    NonFinite { index: usize },

    /// The input shape falls outside what the structured solvers accept.
    #[error("unsupported input for {what}: {reason}")]
    Unsupported {
        what: &'static str,
        reason: String,
    },
}

impl Error {
    /// Stable machine-readable code for each variant, used by the CLI and by
    /// tests that assert on failure modes without string matching.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument { .. } => "INVALID_ARGUMENT",
            Error::Unstable { .. } => "UNSTABLE",
            Error::Singular { .. } => "SINGULAR",
            Error::OutOfRange { .. } => "OUT_OF_RANGE",
            Error::NotStable { .. } => "NOT_STABLE",
            Error::Divergent { .. } => "DIVERGENT",
            Error::DegreeZero => "DEGREE_ZERO",
            Error::NoConvergence { .. } => "NO_CONVERGENCE",
            Error::ExactPathUnsupported { .. } => "EXACT_PATH_UNSUPPORTED",
            Error::NoInteriorCandidate => "NO_INTERIOR_CANDIDATE",
            Error::EpsOutOfRange { .. } => "EPS_OUT_OF_RANGE",
            Error::KappaOne => "KAPPA_ONE",
            Error::EmptyGrid => "EMPTY_GRID",
            Error::PNotPsd { .. } => "P_NOT_PSD",
            Error::InfeasibleCert { .. } => "INFEASIBLE_CERT",
            Error::Infeasible { .. } => "INFEASIBLE",
            Error::NumericalFailure { .. } => "NUMERICAL_FAILURE",
            Error::NonFinite { .. } => "NONFINITE",
            Error::Unsupported { .. } => "UNSUPPORTED",
        }
    }
}
