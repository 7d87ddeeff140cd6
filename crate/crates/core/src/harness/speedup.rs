use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::sweep::SweepConfig;
use crate::dataset::PointSet;
use crate::error::{Error, Result};
use crate::projection::{trial_seed, ProjectionMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientTiming {
    pub value: f64,
    pub median_ms: f64,
    pub trials_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupTrial {
    pub seed: u64,
    pub value_projected: f64,
    pub project_ms: f64,
    pub solve_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupDim {
    pub t: usize,
    pub trials: Vec<SpeedupTrial>,
    pub median_project_ms: f64,
    pub median_solve_ms: f64,
    pub median_total_ms: f64,
    /// Ambient median over projected-total median.
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub config: SweepConfig,
    pub label: String,
    pub n: usize,
    pub d: usize,
    pub timer_resolution_ns: u64,
    pub ambient: AmbientTiming,
    pub dims: Vec<SpeedupDim>,
}

impl SpeedupReport {
    pub fn dim(&self, t: usize) -> Option<&SpeedupDim> {
        self.dims.iter().find(|r| r.t == t)
    }
}

/// Smallest nonzero step observed between consecutive monotonic clock reads.
pub fn timer_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..1000 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        best = best.min(b - a);
    }
    best
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn time_projected(cfg: &SweepConfig, ps: &PointSet, t: usize, seed: u64) -> Result<SpeedupTrial> {
    let start = Instant::now();
    let projected = ProjectionMap::jl(ps.dim(), t, seed)?.apply(ps)?;
    let project = start.elapsed();
    let start = Instant::now();
    let solved = cfg.problem.solve(&projected)?;
    let solve = start.elapsed();
    Ok(SpeedupTrial {
        seed,
        value_projected: solved.value,
        project_ms: ms(project),
        solve_ms: ms(solve),
        total_ms: ms(project + solve),
    })
}

/// Times the ambient solve against map generation, projection and the
/// projected solve. Everything runs serially on the calling thread; each
/// configuration gets one discarded warmup run followed by `cfg.trials`
/// timed runs, and medians are reported.
pub fn run_speedup(cfg: &SweepConfig) -> Result<SpeedupReport> {
    cfg.validate()?;
    let ps = cfg.dataset.build()?;
    run_speedup_on(cfg, &ps)
}

/// [`run_speedup`] on an already materialized dataset.
pub fn run_speedup_on(cfg: &SweepConfig, ps: &PointSet) -> Result<SpeedupReport> {
    cfg.validate_for(ps)?;
    let resolution = timer_resolution();
    if resolution > Duration::from_micros(1) {
        return Err(Error::Timer(format!(
            "monotonic clock resolution {resolution:?} is coarser than 1us"
        )));
    }

    let value = cfg.problem.solve(ps)?.value;
    let mut trials_ms = Vec::with_capacity(cfg.trials);
    for _ in 0..cfg.trials {
        let start = Instant::now();
        cfg.problem.solve(ps)?;
        trials_ms.push(ms(start.elapsed()));
    }
    let ambient = AmbientTiming {
        value,
        median_ms: median(&trials_ms),
        trials_ms,
    };

    let mut dims = Vec::with_capacity(cfg.dims.len());
    for &t in &cfg.dims {
        time_projected(cfg, ps, t, trial_seed(cfg.seed, u64::MAX))?;
        let trials = (0..cfg.trials)
            .map(|i| time_projected(cfg, ps, t, trial_seed(cfg.seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let col = |f: fn(&SpeedupTrial) -> f64| median(&trials.iter().map(f).collect::<Vec<_>>());
        let median_total_ms = col(|r| r.total_ms);
        dims.push(SpeedupDim {
            t,
            median_project_ms: col(|r| r.project_ms),
            median_solve_ms: col(|r| r.solve_ms),
            median_total_ms,
            speedup: ambient.median_ms / median_total_ms,
            trials,
        });
    }

    Ok(SpeedupReport {
        config: cfg.clone(),
        label: ps.label().unwrap_or("points").to_string(),
        n: ps.n(),
        d: ps.dim(),
        timer_resolution_ns: resolution.as_nanos() as u64,
        ambient,
        dims,
    })
}
