use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Kinematics evaluated at a point where they are singular (e.g. s = 0).
    #[error("singular kinematics: {0}")]
    SingularKinematics(String),

    /// Evaluation exactly on a branch point without an i0 prescription.
    #[error("ambiguous branch: {0}")]
    AmbiguousBranch(String),

    /// Configuration rejected before any numerics ran.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A matrix inversion hit a (near-)singular linear system away from a
    /// declared pole search.
    #[error("amplitude is singular at the requested point (condition estimate {condition:.3e}); likely a nearby pole")]
    PoleProximity { condition: f64 },

    /// No open channel at the requested energy.
    #[error("no open channel: {0}")]
    NoOpenChannel(String),

    /// Root search did not converge.
    #[error("pole search failed: {reason}; trace: {trace:?}")]
    SearchFailed { reason: String, trace: Vec<String> },

    /// A residue contour would cross a cut or another non-analyticity.
    #[error("contour invalid: {0}")]
    ContourInvalid(String),

    /// Quadrature did not reach the requested accuracy.
    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    /// Analytic continuation blocked (e.g. form factor pole in the rotation sector).
    #[error("analytic continuation blocked: {0}")]
    ContinuationBlocked(String),

    /// Requested operation needs data the model does not provide.
    #[error("unavailable: {0}")]
    Unavailable(String),

    /// Domain guard (preconditions on physical parameters).
    #[error("domain error: {0}")]
    Domain(String),

    /// Constraint system has no admissible solution.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
