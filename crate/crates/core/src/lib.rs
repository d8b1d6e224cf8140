//! Graph edit distance: exact and beam A*, bipartite approximations, and a
//! learned heuristic built on dynamic graph embeddings.

pub mod assignment;
pub mod bipartite;
pub mod cost;
pub mod data;
pub mod edit;
pub mod error;
pub mod eval;
pub mod genn;
pub mod graph;
pub mod heuristics;
pub mod search;
pub mod training;

pub use cost::{CostModel, CostVariant, INFINITE_COST};
pub use edit::{EditOp, EditPath, PartialMapping};
pub use error::{GedError, Result};
pub use graph::Graph;
pub use search::{astar_solve, beam_solve, Heuristic, HeuristicSession, Search, SearchLimits, SearchOutcome, SearchStats};
