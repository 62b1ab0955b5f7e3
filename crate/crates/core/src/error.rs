use thiserror::Error;

use crate::kinematics::Verdict;

/// Errors from parsing or evaluating coordinate expressions.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("domain error in `{expr}`: {message}")]
    Domain { expr: String, message: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("metric component ({mu},{nu}): {source}")]
    Component {
        mu: usize,
        nu: usize,
        #[source]
        source: ExprError,
    },
    #[error("degenerate metric: |det g| = {det:e}")]
    DegenerateMetric { det: f64 },
    #[error("flow is not timelike: g(V,V) = {norm2:e}")]
    TimelikeViolation { norm2: f64 },
    #[error("Gram-Schmidt exhausted the coordinate candidates")]
    FrameDegenerate,
    #[error("Gram-Schmidt skip pattern not locally constant at candidate {candidate}")]
    SkipSetUnstable { candidate: usize },
    #[error("check mode unavailable: {0}")]
    ModeUnavailable(String),
    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),
    #[error("precondition violated: {criterion} failed (worst residual {:e})", verdict.worst_residual)]
    PreconditionViolated {
        criterion: String,
        verdict: Box<Verdict>,
    },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("parameter `{name}` = {value} out of range: {reason}")]
    ParamOutOfRange {
        name: String,
        value: f64,
        reason: String,
    },
    #[error("schema error in `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn schema(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures tied to a single sample point rather than the scene.
    pub fn is_pointwise(&self) -> bool {
        matches!(
            self,
            Error::TimelikeViolation { .. }
                | Error::DegenerateMetric { .. }
                | Error::FrameDegenerate
                | Error::SkipSetUnstable { .. }
                | Error::Expr(ExprError::Domain { .. })
                | Error::Component {
                    source: ExprError::Domain { .. },
                    ..
                }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
