//! Running, scoring and checking episodes.

mod aggregate;
mod episode;
mod oracle;
mod replay;

pub use aggregate::{aggregate, AggregateRow, ResultRow, UB_ID};
pub use episode::{run_episode, EpisodeResult, TraceStep};
pub use oracle::{brute_force_optimal, oracle_size_estimate, ORACLE_LIMIT};
pub use replay::{replay_check, ReplayFailure, ReplayViolation};
