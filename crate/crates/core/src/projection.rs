//! Seeded Gaussian random linear maps.
//!
//! Entries are drawn with `rand_distr::Normal` (ziggurat sampling) from a
//! `ChaCha8Rng` seeded with the map's seed. The same `(t, d, seed, variance)`
//! always regenerates the same matrix within one build.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{dot, PointSet};
use crate::error::{invalid, Error, Result};

/// A dense `t x d` matrix of i.i.d. `N(0, variance)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMap {
    t: usize,
    d: usize,
    entries: Vec<f64>,
    seed: u64,
    variance: f64,
}

impl ProjectionMap {
    fn gaussian(t: usize, d: usize, variance: f64, seed: u64) -> Result<Self> {
        if t == 0 || d == 0 {
            return Err(invalid(format!(
                "map dimensions must be positive, got t={t}, d={d}"
            )));
        }
        let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = (0..t * d).map(|_| normal.sample(&mut rng)).collect();
        Ok(Self {
            t,
            d,
            entries,
            seed,
            variance,
        })
    }

    /// Johnson-Lindenstrauss map onto `t` dimensions: entries `N(0, 1/t)`.
    pub fn jl(d: usize, t: usize, seed: u64) -> Result<Self> {
        Self::gaussian(t, d, 1.0 / t.max(1) as f64, seed)
    }

    /// Map onto the line with entries `N(0, pi/2)`, for which
    /// `E|g.x| = ||x||` holds for every `x`.
    pub fn line(d: usize, seed: u64) -> Result<Self> {
        Self::gaussian(1, d, FRAC_PI_2, seed)
    }

    pub fn target_dim(&self) -> usize {
        self.t
    }

    pub fn source_dim(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.entries[r * self.d..(r + 1) * self.d]
    }

    /// Image of a single vector.
    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        Ok((0..self.t).map(|r| dot(self.row(r), x)).collect())
    }

    /// Applies the map to every row; row `i` of the output is the image of
    /// row `i` of the input.
    pub fn apply(&self, ps: &PointSet) -> Result<PointSet> {
        if ps.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: ps.dim(),
            });
        }
        let mut coords = Vec::with_capacity(ps.n() * self.t);
        for x in ps.rows() {
            for r in 0..self.t {
                coords.push(dot(self.row(r), x));
            }
        }
        let out = PointSet::new(self.t, coords)?;
        Ok(match ps.label() {
            Some(l) => out.with_label(l),
            None => out,
        })
    }
}

pub fn make_jl_map(d: usize, t: usize, seed: u64) -> Result<ProjectionMap> {
    ProjectionMap::jl(d, t, seed)
}

pub fn make_line_map(d: usize, seed: u64) -> Result<ProjectionMap> {
    ProjectionMap::line(d, seed)
}

pub fn apply(map: &ProjectionMap, ps: &PointSet) -> Result<PointSet> {
    map.apply(ps)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` in a stream rooted at `base`: the base seed is
/// XOR-ed with the trial counter and passed through SplitMix64, so nearby
/// counters give unrelated seeds and `(base, trial)` fully determines a trial.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    splitmix64(base ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03))
}
