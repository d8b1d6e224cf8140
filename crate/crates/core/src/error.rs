use thiserror::Error;

use crate::graph::GraphIssue;
use crate::search::SearchStats;

pub type Result<T, E = GedError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GedError {
    #[error("invalid graph: {}", format_issues(.0))]
    InvalidGraph(Vec<GraphIssue>),

    #[error("invalid edit path: {0}")]
    InvalidPath(String),

    #[error("infeasible instance: every completion has infinite cost")]
    Infeasible,

    #[error("search budget exhausted after {} enqueued states (frontier bound {lower_bound})", .stats.states_enqueued)]
    BudgetExhausted { lower_bound: f64, stats: SearchStats },

    #[error("empty graph: at least one node is required")]
    EmptyGraph,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_issues(issues: &[GraphIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
