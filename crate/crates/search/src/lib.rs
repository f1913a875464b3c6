pub mod engine;
pub mod feasibility;
pub mod hashing;
pub mod parallel;
pub mod pruning;
pub mod record;
pub mod solver;

pub use engine::{Eval, SearchOptions, Winner};
pub use solver::{solve, Outcome, SolveConfig, SolveReport};
