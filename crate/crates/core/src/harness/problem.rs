use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::PointSet;
use crate::diversity::{remote_select, remote_value, RemoteMeasure, RemoteMode};
use crate::error::{invalid, Error, Result};
use crate::matching::{
    hypermatching_value, matching_value, max_hypermatching, max_matching_bipartite,
    max_matching_exact, max_matching_greedy, max_matching_line, HyperMatching, HyperMode, Matching,
};
use crate::median::{geometric_median, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::spanning::{
    k_coverage_select, k_coverage_value, large_opt_select, large_opt_value, max_spanning_tree,
    EdgeSet, FSpec, SelectMode, Selection,
};
use crate::tours::{max_tsp_exact, max_tsp_greedy, random_tour_best, tour_value, Tour};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchingMode {
    Exact,
    Greedy,
    /// Exact bipartite matching between the first and second half of the rows.
    Bipartite,
    /// Exact solver for one-dimensional inputs.
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TspMode {
    Exact,
    Greedy,
    Random,
}

fn default_samples() -> usize {
    100
}

/// A maximization problem together with the algorithm used to solve it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "kebab-case")]
pub enum Problem {
    MaxMatching {
        mode: MatchingMode,
    },
    MaxHypermatching {
        k: usize,
        mode: HyperMode,
    },
    MaxTsp {
        mode: TspMode,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        seed: u64,
    },
    MaxMst,
    MaxKCoverage {
        k: usize,
        mode: SelectMode,
    },
    LargeOpt {
        k: usize,
        f: FSpec,
        mode: SelectMode,
    },
    Remote {
        measure: RemoteMeasure,
        k: usize,
        mode: RemoteMode,
    },
    #[serde(rename = "1-median")]
    OneMedian {
        tol: f64,
        max_iter: usize,
    },
}

/// Raw command-line style description of a problem.
#[derive(Debug, Clone, Default)]
pub struct ProblemArgs<'a> {
    pub name: &'a str,
    pub mode: Option<&'a str>,
    pub k: Option<usize>,
    pub f: Option<&'a str>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

fn parse_mode<T: for<'de> Deserialize<'de>>(mode: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(mode.to_string()))
        .map_err(|_| invalid(format!("unsupported mode {mode:?}")))
}

impl Problem {
    pub fn from_args(a: &ProblemArgs<'_>) -> Result<Self> {
        let mode = a.mode.unwrap_or("exact");
        let need_k = || a.k.ok_or_else(|| invalid(format!("{} needs --k", a.name)));
        let problem = match a.name {
            "max-matching" => Problem::MaxMatching {
                mode: parse_mode(mode)?,
            },
            "max-hypermatching" => Problem::MaxHypermatching {
                k: need_k()?,
                mode: parse_mode(mode)?,
            },
            "max-tsp" => Problem::MaxTsp {
                mode: parse_mode(mode)?,
                samples: a.samples.unwrap_or_else(default_samples),
                seed: a.seed,
            },
            "max-mst" => Problem::MaxMst,
            "max-k-coverage" => Problem::MaxKCoverage {
                k: need_k()?,
                mode: parse_mode(mode)?,
            },
            "large-opt" => Problem::LargeOpt {
                k: need_k()?,
                f: a.f.unwrap_or("linf").parse()?,
                mode: parse_mode(mode)?,
            },
            "1-median" => Problem::OneMedian {
                tol: a.tol.unwrap_or(DEFAULT_TOL),
                max_iter: a.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            },
            name if name.starts_with("remote-") => Problem::Remote {
                measure: name.parse()?,
                k: need_k()?,
                mode: parse_mode(mode)?,
            },
            other => return Err(invalid(format!("unknown problem {other:?}"))),
        };
        Ok(problem)
    }

    pub fn name(&self) -> String {
        match self {
            Problem::MaxMatching { .. } => "max-matching".into(),
            Problem::MaxHypermatching { .. } => "max-hypermatching".into(),
            Problem::MaxTsp { .. } => "max-tsp".into(),
            Problem::MaxMst => "max-mst".into(),
            Problem::MaxKCoverage { .. } => "max-k-coverage".into(),
            Problem::LargeOpt { .. } => "large-opt".into(),
            Problem::Remote { measure, .. } => format!("remote-{measure}"),
            Problem::OneMedian { .. } => "1-median".into(),
        }
    }

    /// Whether the solution is an index structure that can be re-scored on
    /// other coordinates of the same points.
    pub fn liftable(&self) -> bool {
        !matches!(self, Problem::OneMedian { .. })
    }

    pub fn solve(&self, ps: &PointSet) -> Result<Solved> {
        let n = ps.n();
        let (solution, value) = match self {
            Problem::MaxMatching { mode } => {
                let m = match mode {
                    MatchingMode::Exact => max_matching_exact(ps)?,
                    MatchingMode::Greedy => max_matching_greedy(ps)?,
                    MatchingMode::Bipartite => max_matching_bipartite(ps, n / 2)?,
                    MatchingMode::Line => max_matching_line(ps)?,
                };
                let v = m.value_unchecked(ps);
                (Solution::Matching(m), v)
            }
            Problem::MaxHypermatching { k, mode } => {
                let (h, v) = max_hypermatching(ps, *k, *mode)?;
                (Solution::HyperMatching(h), v)
            }
            Problem::MaxTsp {
                mode,
                samples,
                seed,
            } => {
                let (t, v) = match mode {
                    TspMode::Exact => max_tsp_exact(ps)?,
                    TspMode::Greedy => max_tsp_greedy(ps)?,
                    TspMode::Random => random_tour_best(ps, *samples, *seed)?,
                };
                (Solution::Tour(t), v)
            }
            Problem::MaxMst => {
                let (t, v) = max_spanning_tree(ps)?;
                (Solution::Tree(t), v)
            }
            Problem::MaxKCoverage { k, mode } => {
                let (s, v) = k_coverage_select(ps, *k, *mode)?;
                (Solution::Selection(s), v)
            }
            Problem::LargeOpt { k, f, mode } => {
                let (s, v) = large_opt_select(ps, *k, *f, *mode)?;
                (Solution::Selection(s), v)
            }
            Problem::Remote { measure, k, mode } => {
                let (s, v) = remote_select(ps, *k, *measure, *mode)?;
                (Solution::Selection(s), v)
            }
            Problem::OneMedian { tol, max_iter } => {
                let r = geometric_median(ps, *tol, *max_iter)?;
                (Solution::Point(r.point), r.cost)
            }
        };
        Ok(Solved { solution, value })
    }

    /// Objective value of `solution` on the coordinates `ps`.
    pub fn evaluate(&self, ps: &PointSet, solution: &Solution) -> Result<f64> {
        match (self, solution) {
            (Problem::MaxMatching { .. }, Solution::Matching(m)) => matching_value(ps, m),
            (Problem::MaxHypermatching { .. }, Solution::HyperMatching(h)) => {
                hypermatching_value(ps, h)
            }
            (Problem::MaxTsp { .. }, Solution::Tour(t)) => tour_value(ps, t),
            (Problem::MaxMst, Solution::Tree(t)) => {
                t.validate_spanning_tree(ps.n())?;
                Ok(t.value_unchecked(ps))
            }
            (Problem::MaxKCoverage { .. }, Solution::Selection(s)) => k_coverage_value(ps, s),
            (Problem::LargeOpt { f, .. }, Solution::Selection(s)) => large_opt_value(ps, s, *f),
            (Problem::Remote { measure, .. }, Solution::Selection(s)) => {
                Ok(remote_value(ps, s, *measure)?.value)
            }
            (Problem::OneMedian { .. }, Solution::Point(c)) => crate::median::median_cost(ps, c),
            _ => Err(Error::InvalidSolution(format!(
                "solution kind does not match problem {}",
                self.name()
            ))),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Solution {
    Matching(Matching),
    HyperMatching(HyperMatching),
    Tour(Tour),
    Tree(EdgeSet),
    Selection(Selection),
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solved {
    pub solution: Solution,
    pub value: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gaussian_blob;

    fn args(name: &str, mode: Option<&'static str>, k: Option<usize>) -> ProblemArgs<'static> {
        let name: &'static str = Box::leak(name.to_string().into_boxed_str());
        ProblemArgs {
            name,
            mode,
            k,
            ..Default::default()
        }
    }

    #[test]
    fn parses_problem_flags() {
        assert_eq!(
            Problem::from_args(&args("max-matching", Some("bipartite"), None)).unwrap(),
            Problem::MaxMatching {
                mode: MatchingMode::Bipartite
            }
        );
        assert_eq!(
            Problem::from_args(&args("remote-clique", Some("gmm"), Some(4))).unwrap(),
            Problem::Remote {
                measure: RemoteMeasure::Clique,
                k: 4,
                mode: RemoteMode::Gmm
            }
        );
        assert!(Problem::from_args(&args("max-k-coverage", None, None)).is_err());
        assert!(Problem::from_args(&args("max-matching", Some("fast"), None)).is_err());
        assert!(Problem::from_args(&args("min-cut", None, None)).is_err());
    }

    #[test]
    fn solve_then_evaluate_agrees() {
        let ps = gaussian_blob(8, 3, 1.0, 2).unwrap();
        let problems = [
            Problem::MaxMatching {
                mode: MatchingMode::Exact,
            },
            Problem::MaxMatching {
                mode: MatchingMode::Bipartite,
            },
            Problem::MaxHypermatching {
                k: 4,
                mode: HyperMode::Exact,
            },
            Problem::MaxTsp {
                mode: TspMode::Random,
                samples: 10,
                seed: 1,
            },
            Problem::MaxMst,
            Problem::MaxKCoverage {
                k: 2,
                mode: SelectMode::Greedy,
            },
            Problem::LargeOpt {
                k: 3,
                f: FSpec::Median,
                mode: SelectMode::Exact,
            },
            Problem::Remote {
                measure: RemoteMeasure::Tree,
                k: 3,
                mode: RemoteMode::Greedy,
            },
            Problem::OneMedian {
                tol: 1e-10,
                max_iter: 1000,
            },
        ];
        for p in problems {
            let s = p.solve(&ps).unwrap();
            let v = p.evaluate(&ps, &s.solution).unwrap();
            assert!((v - s.value).abs() < 1e-9, "{p}");
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(serde_json::from_str::<Problem>(&json).unwrap(), p);
        }
        let wrong = Solution::Tour(Tour::new((0..8).collect()));
        assert!(Problem::MaxMst.evaluate(&ps, &wrong).is_err());
    }
}
