//! Error types shared across the engine.

use thiserror::Error;

/// Path from an expression root to a node, as child indices.
///
/// Used to point diagnostics at the offending node of an expression tree.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodePath(pub Vec<usize>);

impl std::fmt::Display for NodePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "root");
        }
        write!(f, "root")?;
        for i in &self.0 {
            write!(f, ".{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// An inversion was requested of something whose leading coefficient is
    /// not a single monomial. Identities must be registered in cleared form.
    #[error("not a unit: {0}")]
    NotAUnit(String),

    /// A coefficient beyond the validated order (or below the structural
    /// floor) was requested.
    #[error("coefficient of q^{requested} requested but series is only valid on {lo}..={order}")]
    OrderExceeded { requested: i64, lo: i64, order: i64 },

    /// Mixed-base arithmetic: the two operands disagree on what one unit of
    /// q-exponent means.
    #[error("base divisor mismatch: {0} vs {1}")]
    BaseDivMismatch(u32, u32),

    /// An expression failed the evaluability validator.
    #[error("non-evaluable at {path}: {reason}")]
    NonEvaluable { path: NodePath, reason: String },

    /// A sum whose term valuations do not diverge cannot be truncated soundly.
    #[error("divergent-bound check failed: {0}")]
    DivergentBound(String),

    /// Catalog lookup failure.
    #[error("unknown identity: {0}")]
    UnknownIdentity(String),

    /// Oracle window below the soundness threshold.
    #[error("window {given} too small for order {order}: need at least {required}")]
    WindowTooSmall {
        given: i64,
        order: i64,
        required: i64,
    },

    /// Caller violated a precondition (bad arguments, empty overlap, ...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
