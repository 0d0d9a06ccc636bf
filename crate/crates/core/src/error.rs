use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state coincides with a primary ({0})")]
    CollisionSingularity(&'static str),
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("root finding did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("Birkhoff map singular at z = {z:?}")]
    BirkhoffSingularity { z: (f64, f64) },
    #[error("Moser trivialization degenerates (|x| = 0)")]
    ChartSingularity,
    #[error("quaternion norm {0} is not 1")]
    NonUnitQuaternion(f64),
    #[error("level set not bracketed along sample ray {0}")]
    SamplingFailure(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("chord is not equatorial")]
    UnsupportedChord,
    #[error("degenerate crossing at t = {t} (eigenvalue {eigenvalue:e})")]
    DegenerateCrossing { t: f64, eigenvalue: f64 },
    #[error("path not symplectic at t = {t} (defect {defect:e})")]
    IrregularPath { t: f64, defect: f64 },
    #[error("invalid degree window [{0}, {1}]")]
    InvalidWindow(i32, i32),
    #[error("boundary squares to a nonzero map in degree {0}")]
    BoundaryInconsistency(i32),
    #[error("involution fixes generator {0}")]
    NotFree(String),
    #[error("involution does not commute with the boundary in degree {0}")]
    NotEquivariant(i32),
    #[error("trajectory approached z = 0 at t = {t}")]
    SingularityApproach { t: f64 },
    #[error("|K| drift {drift:e} exceeds tolerance at t = {t}")]
    DriftExceeded { t: f64, drift: f64 },
    #[error("step size underflow or step budget exhausted at t = {t}")]
    StepFailure { t: f64 },
    #[error("Newton iteration did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("chord time {t:e} below minimum-time guard")]
    TrivialChord { t: f64 },
    #[error("hit fixed-locus component {hit} instead of the target")]
    WrongComponent { hit: String },
    #[error("fold detected near mu = {mu} (condition number {condition:e})")]
    FoldDetected { mu: f64, condition: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
}

impl Error {
    /// Convergence-type failures, as opposed to violated preconditions.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::ConvergenceFailure(_)
                | Error::NoConvergence { .. }
                | Error::FoldDetected { .. }
                | Error::StepFailure { .. }
                | Error::DriftExceeded { .. }
                | Error::TrivialChord { .. }
                | Error::SamplingFailure(_)
                | Error::SingularityApproach { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
