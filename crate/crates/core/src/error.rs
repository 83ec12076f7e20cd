use thiserror::Error;

/// Errors produced by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad model or scenario configuration.
    #[error("configuration: {0}")]
    Config(String),

    /// API misuse (invalid argument values).
    #[error("usage: {0}")]
    Usage(String),

    /// Input data violates a set-membership invariant.
    #[error("validation: {0}")]
    Validation(String),

    /// Sampled field is inconsistent with its stated derivative.
    #[error("compatibility: {0}")]
    Compatibility(String),

    /// Query outside the range of a monotone map.
    #[error("domain: {0}")]
    Domain(String),

    /// A relabeling function is not invertible.
    #[error("degenerate relabeling: {0}")]
    Degeneracy(String),

    /// Fixed-point iteration failed to contract; the cell must be subdivided.
    #[error("no contraction after {iterations} iterations (residual {residual:.3e}); subdivide the cell")]
    NonContraction { iterations: usize, residual: f64 },

    /// Curve data does not span the requested rectangle.
    #[error("tiling: {0}")]
    Tiling(String),

    /// Adaptive subdivision exceeded its cell budget.
    #[error("cell budget {budget} exhausted at cell ({i},{j})")]
    CellBudget { budget: usize, i: usize, j: usize },

    /// A constant-time set leaves the solved region.
    #[error("coverage: time slice exits the solved region ({0})")]
    Coverage(String),

    /// A diagnostic does not apply to the given data.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A theorem hypothesis required by a diagnostic fails.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
}
