use thiserror::Error;

use crate::search::SearchStats;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid cost parameters: {0}")]
    InvalidParams(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("illegal move: {0}")]
    IllegalMove(String),

    #[error("cells {from} and {to} are not adjacent")]
    NonAdjacent { from: usize, to: usize },

    #[error("states are not adjacent: {0}")]
    NotAdjacentStates(String),

    #[error("infeasible template: {0}")]
    InfeasibleTemplate(String),

    #[error("infeasible goal: {0}")]
    InfeasibleGoal(String),

    #[error("goal is not paired with the state: {0}")]
    UnpairedGoal(String),

    #[error("goal set is empty")]
    EmptyGoalSet,

    #[error("minimum edge cost must be positive, got {0}")]
    NonpositiveCmin(f64),

    #[error(transparent)]
    Search(#[from] SearchError),

    #[error("precedence graph contains a cycle")]
    CyclicPrecedence,

    #[error("no feasible schedule within {0} steps")]
    BoundTooSmall(u32),

    #[error("all {0} portfolio runs timed out")]
    AllRunsTimedOut(usize),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

/// Terminal failures of a search run. Both carry the statistics gathered
/// up to the point of failure.
#[derive(Debug, Clone, Error)]
pub enum SearchError {
    #[error("goal unreachable after expanding {} nodes", .0.explored)]
    NoPath(SearchStats),
    #[error("time limit reached after expanding {} nodes", .0.explored)]
    TimedOut(SearchStats),
}

impl SearchError {
    pub fn stats(&self) -> &SearchStats {
        match self {
            SearchError::NoPath(s) | SearchError::TimedOut(s) => s,
        }
    }
}
