use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problem::{MatchingMode, Problem};
use crate::dataset::{DatasetSpec, PointSet};
use crate::error::{invalid, Error, Result};
use crate::projection::{trial_seed, ProjectionMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalConvention {
    ProjectedSpace,
    #[default]
    Lifted,
}

/// One projection-dimension sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub problem: Problem,
    pub dataset: DatasetSpec,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Convention that summaries and plots lead with; both are always recorded.
    #[serde(default)]
    pub eval_convention: EvalConvention,
}

impl SweepConfig {
    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(invalid("dims must be nonempty"));
        }
        if self.dims.contains(&0) {
            return Err(invalid("target dimension must be at least 1"));
        }
        if self.dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("dims must be strictly ascending"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if !self.problem.liftable() {
            return Err(invalid(format!(
                "{} has no index structure to re-evaluate",
                self.problem
            )));
        }
        Ok(())
    }

    /// Checks the config against the data it will run on.
    pub fn validate_for(&self, ps: &PointSet) -> Result<()> {
        self.validate()?;
        let d = ps.dim();
        if let Some(&t) = self.dims.iter().find(|&&t| t > d) {
            return Err(invalid(format!(
                "t exceeds ambient dimension: t = {t}, d = {d}"
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub value: f64,
    pub wall_ms: f64,
    /// `value / (n * diameter)`; large-OPT guarantees assume this is bounded
    /// away from zero.
    pub value_over_n_diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub value_projected: Option<f64>,
    pub value_lifted: Option<f64>,
    pub rel_err_projected: Option<f64>,
    pub rel_err_lifted: Option<f64>,
    pub wall_ms_project: f64,
    pub wall_ms_solve: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    /// `value_projected / baseline`.
    pub fn ratio(&self, baseline: f64) -> Option<f64> {
        self.value_projected.map(|v| v / baseline)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimResult {
    pub t: usize,
    pub trials: Vec<TrialRecord>,
    pub mean_rel_err_lifted: Option<f64>,
    pub std_rel_err_lifted: Option<f64>,
    pub mean_rel_err_projected: Option<f64>,
    pub std_rel_err_projected: Option<f64>,
    /// Mean and standard deviation of `value_projected / baseline`.
    pub mean_ratio: Option<f64>,
    pub std_ratio: Option<f64>,
    pub failed_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: SweepConfig,
    pub label: String,
    pub n: usize,
    pub d: usize,
    pub baseline: Baseline,
    pub dims: Vec<DimResult>,
}

/// Mean and sample standard deviation; `None` when empty.
pub fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(std))
}

pub fn relative_error(baseline: f64, value: f64) -> f64 {
    (baseline - value).abs() / baseline
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn run_trial(
    cfg: &SweepConfig,
    ps: &PointSet,
    baseline: f64,
    t: usize,
    trial: usize,
) -> TrialRecord {
    let seed = trial_seed(cfg.seed, trial as u64);
    let mut rec = TrialRecord {
        trial,
        seed,
        value_projected: None,
        value_lifted: None,
        rel_err_projected: None,
        rel_err_lifted: None,
        wall_ms_project: 0.0,
        wall_ms_solve: 0.0,
        error: None,
    };
    let start = Instant::now();
    let projected = match ProjectionMap::jl(ps.dim(), t, seed).and_then(|g| g.apply(ps)) {
        Ok(p) => p,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.wall_ms_project = elapsed_ms(start);
    let start = Instant::now();
    let solved = cfg.problem.solve(&projected);
    rec.wall_ms_solve = elapsed_ms(start);
    let solved = match solved {
        Ok(s) => s,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.value_projected = Some(solved.value);
    rec.rel_err_projected = Some(relative_error(baseline, solved.value));
    match cfg.problem.evaluate(ps, &solved.solution) {
        Ok(v) => {
            rec.value_lifted = Some(v);
            rec.rel_err_lifted = Some(relative_error(baseline, v));
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

fn summarize(t: usize, trials: Vec<TrialRecord>, baseline: f64) -> DimResult {
    let lifted: Vec<f64> = trials.iter().filter_map(|r| r.rel_err_lifted).collect();
    let projected: Vec<f64> = trials.iter().filter_map(|r| r.rel_err_projected).collect();
    let ratios: Vec<f64> = trials.iter().filter_map(|r| r.ratio(baseline)).collect();
    let (mean_rel_err_lifted, std_rel_err_lifted) = mean_std(&lifted);
    let (mean_rel_err_projected, std_rel_err_projected) = mean_std(&projected);
    let (mean_ratio, std_ratio) = mean_std(&ratios);
    let failed_trials = trials.iter().filter(|r| r.error.is_some()).count();
    DimResult {
        t,
        trials,
        mean_rel_err_lifted,
        std_rel_err_lifted,
        mean_rel_err_projected,
        std_rel_err_projected,
        mean_ratio,
        std_ratio,
        failed_trials,
    }
}

fn sweep_with_baseline(cfg: &SweepConfig, ps: &PointSet, baseline: Baseline) -> Result<Report> {
    if baseline.value.is_nan() || baseline.value <= 0.0 {
        return Err(invalid(format!(
            "baseline value must be positive for relative errors, got {}",
            baseline.value
        )));
    }
    let jobs: Vec<(usize, usize)> = cfg
        .dims
        .iter()
        .flat_map(|&t| (0..cfg.trials).map(move |trial| (t, trial)))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(t, trial)| run_trial(cfg, ps, baseline.value, t, trial))
        .collect();
    let mut records = records.into_iter();
    let dims = cfg
        .dims
        .iter()
        .map(|&t| {
            summarize(
                t,
                records.by_ref().take(cfg.trials).collect(),
                baseline.value,
            )
        })
        .collect();
    Ok(Report {
        config: cfg.clone(),
        label: ps.label().unwrap_or("points").to_string(),
        n: ps.n(),
        d: ps.dim(),
        baseline,
        dims,
    })
}

fn n_diameter(ps: &PointSet, value: f64) -> f64 {
    value / (ps.n() as f64 * ps.diameter())
}

/// Solves once in the ambient space, then once per `(t, trial)` on a fresh
/// JL projection, recording both evaluation conventions. Per-trial solver
/// failures are stored in the trial record; trials run in parallel and are
/// merged in `(t, trial)` order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Report> {
    cfg.validate()?;
    let ps = cfg.dataset.build()?;
    run_sweep_on(cfg, &ps)
}

/// [`run_sweep`] on an already materialized dataset.
pub fn run_sweep_on(cfg: &SweepConfig, ps: &PointSet) -> Result<Report> {
    cfg.validate_for(ps)?;
    let start = Instant::now();
    let solved = cfg.problem.solve(ps)?;
    let wall_ms = elapsed_ms(start);
    let baseline = Baseline {
        value: solved.value,
        wall_ms,
        value_over_n_diameter: n_diameter(ps, solved.value),
    };
    sweep_with_baseline(cfg, ps, baseline)
}

/// Bipartite max matching on projected standard basis vectors, first half
/// against second half, compared with the analytic optimum `sqrt(2) n / 2`.
/// Per-trial ratios are `value_projected / baseline`.
pub fn run_threshold(n: usize, dims: &[usize], trials: usize, seed: u64) -> Result<Report> {
    if n == 0 || n % 2 == 1 {
        return Err(invalid(format!(
            "threshold experiment needs a positive even n, got {n}"
        )));
    }
    let cfg = SweepConfig {
        problem: Problem::MaxMatching {
            mode: MatchingMode::Bipartite,
        },
        dataset: DatasetSpec::Basis { n },
        dims: dims.to_vec(),
        trials,
        seed,
        eval_convention: EvalConvention::ProjectedSpace,
    };
    cfg.validate()?;
    let ps = cfg.dataset.build()?;
    cfg.validate_for(&ps)?;
    let value = std::f64::consts::SQRT_2 * (n / 2) as f64;
    let baseline = Baseline {
        value,
        wall_ms: 0.0,
        value_over_n_diameter: n_diameter(&ps, value),
    };
    sweep_with_baseline(&cfg, &ps, baseline)
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn dim(&self, t: usize) -> Option<&DimResult> {
        self.dims.iter().find(|r| r.t == t)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// One row per trial: `label,problem,t,trial,seed,value_projected,
    /// value_lifted,rel_err_projected,rel_err_lifted,wall_ms_project,
    /// wall_ms_solve,error`. Missing values are empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| invalid(format!("csv write failed: {e}"));
        w.write_record([
            "label",
            "problem",
            "t",
            "trial",
            "seed",
            "value_projected",
            "value_lifted",
            "rel_err_projected",
            "rel_err_lifted",
            "wall_ms_project",
            "wall_ms_solve",
            "error",
        ])
        .map_err(io)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        let problem = self.config.problem.name();
        for dim in &self.dims {
            for r in &dim.trials {
                w.write_record([
                    self.label.clone(),
                    problem.clone(),
                    dim.t.to_string(),
                    r.trial.to_string(),
                    r.seed.to_string(),
                    opt(r.value_projected),
                    opt(r.value_lifted),
                    opt(r.rel_err_projected),
                    opt(r.rel_err_lifted),
                    format!("{:?}", r.wall_ms_project),
                    format!("{:?}", r.wall_ms_solve),
                    r.error.clone().unwrap_or_default(),
                ])
                .map_err(io)?;
            }
        }
        w.flush()
            .map_err(|e| invalid(format!("csv write failed: {e}")))?;
        Ok(())
    }

    pub fn store_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Copy with every wall-time field zeroed, for determinism checks.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.baseline.wall_ms = 0.0;
        for dim in &mut r.dims {
            for t in &mut dim.trials {
                t.wall_ms_project = 0.0;
                t.wall_ms_solve = 0.0;
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spanning::SelectMode;

    fn cfg(dims: Vec<usize>) -> SweepConfig {
        SweepConfig {
            problem: Problem::MaxKCoverage {
                k: 3,
                mode: SelectMode::Greedy,
            },
            dataset: DatasetSpec::GaussianBlob {
                n: 30,
                d: 16,
                sigma: 1.0,
                seed: 4,
            },
            dims,
            trials: 3,
            seed: 11,
            eval_convention: EvalConvention::Lifted,
        }
    }

    #[test]
    fn mean_std_examples() {
        assert_eq!(mean_std(&[]), (None, None));
        assert_eq!(mean_std(&[2.0]), (Some(2.0), Some(0.0)));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, Some(2.5));
        assert!((s.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(relative_error(4.0, 3.0), 0.25);
        assert_eq!(relative_error(4.0, 5.0), 0.25);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(vec![]).validate().is_err());
        assert!(cfg(vec![0, 2]).validate().is_err());
        assert!(cfg(vec![4, 2]).validate().is_err());
        let mut c = cfg(vec![2]);
        c.trials = 0;
        assert!(c.validate().is_err());
        let err = run_sweep(&cfg(vec![2, 97])).unwrap_err().to_string();
        assert!(err.contains("t exceeds ambient dimension"), "{err}");
    }

    #[test]
    fn sweep_is_well_formed_and_deterministic() {
        let c = cfg(vec![2, 16]);
        let a = run_sweep(&c).unwrap();
        assert_eq!(a.dims.len(), 2);
        for dim in &a.dims {
            assert_eq!(dim.trials.len(), 3);
            assert_eq!(dim.failed_trials, 0);
            assert!(dim.mean_rel_err_lifted.unwrap().is_finite());
            let seeds: Vec<u64> = dim.trials.iter().map(|t| t.seed).collect();
            assert_eq!(seeds, (0..3).map(|i| trial_seed(11, i)).collect::<Vec<_>>());
        }
        let b = run_sweep(&c).unwrap();
        assert_eq!(
            a.without_timings().to_json().unwrap(),
            b.without_timings().to_json().unwrap()
        );
        let back = Report::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn per_trial_errors_do_not_abort() {
        let mut c = cfg(vec![2, 4]);
        c.problem = Problem::MaxKCoverage {
            k: 31,
            mode: SelectMode::Greedy,
        };
        let ps = c.dataset.build().unwrap();
        assert!(run_sweep_on(&c, &ps).is_err());
        let baseline = Baseline {
            value: 1.0,
            wall_ms: 0.0,
            value_over_n_diameter: 0.0,
        };
        let r = sweep_with_baseline(&c, &ps, baseline).unwrap();
        for dim in &r.dims {
            assert_eq!(dim.failed_trials, 3);
            assert_eq!(dim.mean_rel_err_lifted, None);
            assert!(dim
                .trials
                .iter()
                .all(|t| t.error.is_some() && t.value_projected.is_none()));
        }
        assert!(Report::from_json(&r.to_json().unwrap()).is_ok());
    }

    #[test]
    fn threshold_baseline_is_analytic() {
        let r = run_threshold(16, &[4, 16], 2, 3).unwrap();
        assert_eq!(r.baseline.value, std::f64::consts::SQRT_2 * 8.0);
        for dim in &r.dims {
            for t in &dim.trials {
                assert!((t.value_lifted.unwrap() - r.baseline.value).abs() < 1e-9);
            }
        }
        assert!(run_threshold(15, &[4], 2, 3).is_err());
    }

    #[test]
    fn csv_has_one_row_per_trial() {
        let r = run_sweep(&cfg(vec![2, 4])).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rd.headers().unwrap().len(), 12);
        assert_eq!(rd.records().count(), 6);
    }
}
