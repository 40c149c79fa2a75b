use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("empty knot input")]
    EmptyInput,

    #[error("arc label {label} appears {count} times (expected 2)")]
    ArcMultiplicity { label: u32, count: usize },

    #[error("diagram has {components} components; only knots are supported")]
    MultiComponent { components: usize },

    #[error("inconsistent diagram orientation at crossing {crossing}")]
    Orientation { crossing: usize },

    #[error("unknown catalog entry `{0}`")]
    UnknownKnot(String),

    #[error("generator index {index} out of range 1..={count}")]
    GeneratorRange { index: usize, count: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("alexander determinant vanishes; not a knot presentation")]
    ZeroDeterminant,

    #[error("alpha = 1 is never a root of the Alexander polynomial")]
    AlphaIsOne,

    #[error("alpha is not a root of the Alexander polynomial (|Δ(α)| = {residual:.3e})")]
    NotARoot { residual: f64 },

    #[error("hypothesis not met: {0}")]
    Refused(String),

    #[error("root finder did not converge after {iterations} iterations")]
    RootsNotConverged { iterations: usize },

    #[error("rank undecidable: singular value ratio {singular_value:.3e} within margin of threshold {threshold:.1e}")]
    RankIndeterminate { singular_value: f64, threshold: f64 },

    #[error("newton iteration failed at t = {t}: {reason}")]
    NewtonFailed { t: f64, reason: String },

    #[error("eigenvalue collision (gap {gap:.3e})")]
    EigenvalueCollision { gap: f64 },

    #[error("residual {residual:.3e} above tolerance: {what}")]
    Residual { what: String, residual: f64 },

    #[error("inconsistent with the expected theory: {0}")]
    Inconsistent(String),

    #[error("unsupported precision {0} digits (hardware double only)")]
    Precision(u32),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Broad failure class, used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Input rejected or hypothesis gate refused.
    Refusal,
    /// Numerical trouble: convergence, rank ambiguity, residuals.
    Numerical,
    /// A computed class or obstruction contradicts the theory.
    Inconsistency,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::RootsNotConverged { .. }
            | Error::RankIndeterminate { .. }
            | Error::NewtonFailed { .. }
            | Error::EigenvalueCollision { .. }
            | Error::Residual { .. } => ErrorClass::Numerical,
            Error::Inconsistent(_) => ErrorClass::Inconsistency,
            _ => ErrorClass::Refusal,
        }
    }
}
