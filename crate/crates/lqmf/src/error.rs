//! Error type shared by all solver modules.

/// Errors reported by the solvers in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input matrix or vector contains NaN or infinite entries.
    #[error("{what} contains non-finite entries")]
    NonFinite { what: &'static str },

    /// The eigenvalue (Schur) iteration did not converge.
    #[error("eigenvalue iteration failed to converge")]
    EigenFailure,

    /// A matrix required to be stable (Hurwitz) is not.
    #[error("matrix is not stable: spectral abscissa {abscissa:.6e}")]
    UnstableMatrix { abscissa: f64 },

    /// A matrix required to be symmetric is not, beyond tolerance.
    #[error("input is not symmetric: relative asymmetry {asymmetry:.3e}")]
    AsymmetricInput { asymmetry: f64 },

    /// A matrix required to be symmetric positive definite is not.
    #[error("{what} is not positive definite: min eigenvalue {min_eig:.6e}")]
    NotPositiveDefinite { what: &'static str, min_eig: f64 },

    /// The Riccati iteration failed to produce a stabilizing solution.
    #[error("no stabilizing Riccati solution: {reason}")]
    NoStabilizingSolution { reason: String },

    /// Operands have incompatible shapes.
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },

    /// The closed loop A - BK of a supplied policy is not stable.
    /// `block` names the failing block when the model has several.
    #[error("policy is not stabilizing{}: closed-loop spectral abscissa {abscissa:.6e}", block_suffix(block))]
    UnstablePolicy { abscissa: f64, block: Option<&'static str> },

    /// A gradient-descent iterate left the set of stabilizing policies.
    #[error("iterate {iter} destabilized the closed loop{}", block_suffix(block))]
    DestabilizedIterate { iter: usize, block: Option<&'static str> },

    /// The cost became NaN or infinite during an iterative run.
    #[error("cost became non-finite at iterate {iter}")]
    NonFiniteCost { iter: usize },

    /// The intercept weighting matrix A Q^-1 A^T + B R^-1 B^T is too
    /// ill-conditioned to invert reliably.
    #[error("gram matrix A Q^-1 A^T + B R^-1 B^T is ill-conditioned: cond = {cond:.3e}")]
    SingularGamma { cond: f64 },

    /// The optimal closed loop A - BK* cannot be inverted.
    #[error("closed loop A - BK* is singular")]
    SingularClosedLoop,

    /// Two formulas that must agree disagreed beyond tolerance.
    #[error("internal inconsistency: {what}")]
    InternalInconsistency { what: String },

    /// The simulation time step violates the explicit-scheme stability cap.
    #[error("time step {dt} exceeds the stability cap {cap:.6e}")]
    StepTooLarge { dt: f64, cap: f64 },

    /// A numerical guarantee (residual bound) could not be met.
    #[error("numerical failure: {what}")]
    Numerical { what: String },
}

fn block_suffix(block: &Option<&'static str>) -> String {
    match block {
        Some(b) => format!(" ({b} block)"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
