//! Gaussian random projections for Euclidean maximization problems.
//!
//! The crate bundles seeded Johnson-Lindenstrauss maps ([`projection`]),
//! exact oracles and heuristics for max-matching, max-TSP, hypermatching,
//! max spanning tree, max k-coverage and remote-subgraph diversity measures,
//! a geometric-median solver, a doubling-dimension estimator, and an
//! experiment harness that measures how well each objective survives
//! projection to a lower dimension.

pub mod assignment;
pub mod dataset;
pub mod diversity;
pub mod doubling;
pub mod error;
pub mod harness;
pub mod matching;
pub mod median;
pub mod projection;
pub mod spanning;
pub mod tours;

pub use dataset::{DatasetSpec, Distances, Format, PointSet};
pub use error::{Error, Result};
pub use projection::ProjectionMap;

/// Direction of an optimization; shared by solvers that serve both the
/// maximization problems and the minimization subroutines of the diversity
/// measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Maximize,
    Minimize,
}

impl Objective {
    /// Whether `candidate` is strictly better than `incumbent`.
    #[inline]
    pub fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Objective::Maximize => candidate > incumbent,
            Objective::Minimize => candidate < incumbent,
        }
    }

    pub fn worst(self) -> f64 {
        match self {
            Objective::Maximize => f64::NEG_INFINITY,
            Objective::Minimize => f64::INFINITY,
        }
    }
}
