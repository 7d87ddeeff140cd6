//! Experiment orchestration: projection-dimension sweeps, the basis-vector
//! threshold experiment, speedup benchmarks, report serialization and the
//! command-line front end.

pub mod cli;
pub mod problem;
pub mod speedup;
pub mod sweep;

pub use problem::{MatchingMode, Problem, ProblemArgs, Solution, Solved, TspMode};
pub use speedup::{run_speedup, run_speedup_on, SpeedupReport};
pub use sweep::{run_sweep, run_sweep_on, run_threshold, EvalConvention, Report, SweepConfig};
