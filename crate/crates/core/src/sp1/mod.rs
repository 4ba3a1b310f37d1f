//! Joint offloading and caching by block successive upper-bound
//! minimization with multipliers, followed by threshold rounding.

pub mod block;
pub mod estimate;
pub mod instance;
pub mod lagrangian;
pub mod rounding;
pub mod solver;

pub use block::{block_minimize, BlockOutcome};
pub use estimate::{candidates, choices_to_modes, Incumbent};
pub use instance::{build_sp1, row_tally, Choice, Sp1Instance, Sp1Problem, TaskCandidates};
pub use lagrangian::{augmented_lagrangian, update_multipliers, Multipliers, Sp1Params};
pub use rounding::{integrality_gap, round_and_gap, GapReport};
pub use solver::{solve_sp1, Sp1Solution};
