//! Conflict-based search machinery shared by every solver: conflicts,
//! the conflict-avoidance table, high-level nodes, splitting, and bypass.

mod cat;
mod conflict;
mod node;
mod queue;

pub use cat::ConflictAvoidanceTable;
pub use conflict::{
    conflicts_of_agent, detect_conflicts_brute, detect_conflicts_windowed, find_disjoint_conflicts,
    partition_windows, recount_after_replan, Conflict, ConflictKind,
};
pub use node::{Bypass, ContextError, HighLevelNode, SearchContext, TimedOut};
pub use queue::NodeQueue;
