//! Error type shared by all modules.

/// Everything that can go wrong outside of plain precondition bugs.
///
/// Each variant carries a stable machine-readable code (see [`Error::code`])
/// that reports and CLI diagnostics embed, so tooling never has to parse the
/// human-readable message.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("radial exponent alpha must exceed -1, got {alpha}")]
    AlphaRange { alpha: f64 },

    #[error("distance from the singular support to the boundary carrier is zero")]
    RhoZero,

    #[error(
        "mass {remaining:.3e} cannot be exhausted within {pieces} pieces under the caps; \
         raise the piece count"
    )]
    InsufficientPieces { pieces: usize, remaining: f64 },

    #[error("evaluation point within {dist:.3e} of a singular support atom (margin {margin:.3e})")]
    OnSingularSupport { dist: f64, margin: f64 },

    #[error("boundary log-modulus is not integrable under the declared profile")]
    NonIntegrableLog,

    #[error("grid node at angle {angle:.17e} violates the singular-support margin {margin:.3e}")]
    SupportCollision { angle: f64, margin: f64 },

    #[error("quadrature node at angle {angle:.17e} violates the singular-support margin {margin:.3e}")]
    NodeCollision { angle: f64, margin: f64 },

    #[error("matrix is not positive semidefinite: pivot {pivot:.3e} at index {index}")]
    NonPsd { index: usize, pivot: f64 },

    #[error(
        "grid too coarse: doubling the sampling grid moved coefficients by {shift:.3e} \
         (tolerance {tol:.3e})"
    )]
    GridTooCoarse { shift: f64, tol: f64 },

    #[error(
        "coefficient tail fails to decay: Sobolev tail {tail:.3e} vs head {head:.3e} at \
         cutoff {cutoff}; raise the outer cutoff exponent and retry"
    )]
    InsufficientDecay { cutoff: usize, tail: f64, head: f64 },

    #[error("quadrature did not converge: last two estimates differ by {defect:.3e} at {nodes} nodes")]
    QuadratureNonConvergence { nodes: usize, defect: f64 },

    #[error("gap rule overflows its parent interval at level {level}: gap {gap:.3e} vs parent {parent:.3e}")]
    GapOverflow { level: u32, gap: f64, parent: f64 },

    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },
}

impl Error {
    /// Stable machine-readable code for reports and diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::AlphaRange { .. } => "alpha-range",
            Error::RhoZero => "rho-zero",
            Error::InsufficientPieces { .. } => "insufficient-pieces",
            Error::OnSingularSupport { .. } => "on-singular-support",
            Error::NonIntegrableLog => "non-integrable-log",
            Error::SupportCollision { .. } => "support-collision",
            Error::NodeCollision { .. } => "node-collision",
            Error::NonPsd { .. } => "non-psd",
            Error::GridTooCoarse { .. } => "grid-too-coarse",
            Error::InsufficientDecay { .. } => "insufficient-decay",
            Error::QuadratureNonConvergence { .. } => "quadrature-non-convergence",
            Error::GapOverflow { .. } => "gap-overflow",
            Error::Invalid { .. } => "invalid-input",
        }
    }
}
