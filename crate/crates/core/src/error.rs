use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The denominator of the branch threshold g(r1) is not positive.
    #[error("branch threshold undefined at r1 = {r1}: denominator {denominator:e} is not positive")]
    DegenerateBranch { r1: f64, denominator: f64 },

    #[error("no feasible grid point found: {0}")]
    EmptyGrid(String),

    #[error("root search failed after {iterations} iterations: {context}")]
    RootSearch { iterations: usize, context: String },

    #[error("offline solver did not converge after {iterations} iterations (last change {delta:e})")]
    OfflineNotConverged {
        iterations: usize,
        delta: f64,
        p1: Vec<f64>,
        p2: Vec<f64>,
    },

    #[error("value iteration did not converge after {iterations} iterations (last change {delta:e})")]
    ValueIterationNotConverged {
        iterations: usize,
        delta: f64,
        values: Vec<f64>,
    },

    #[error("infeasible action ({p1}, {p2}) in state ({i}, {j})")]
    InfeasibleAction { i: usize, j: usize, p1: usize, p2: usize },

    #[error("chain has {0} closed classes; stationary distribution is not unique")]
    AmbiguousStationary(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self,
            Error::OfflineNotConverged { .. }
                | Error::ValueIterationNotConverged { .. }
                | Error::RootSearch { .. }
        )
    }
}
