//! Point sets, synthetic generators, distance primitives and file I/O.
//!
//! Every other module addresses points by their row index in a [`PointSet`];
//! projections keep row order so that solutions found on a projected set can
//! be re-scored on the original coordinates.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Point sets with at most this many points get a dense distance cache.
pub const DISTANCE_CACHE_LIMIT: usize = 2048;

const BIN_MAGIC: &[u8; 4] = b"PTS1";

/// A dense `n x d` matrix of finite `f64` coordinates, one row per point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    n: usize,
    d: usize,
    coords: Vec<f64>,
    label: Option<String>,
}

impl PointSet {
    /// Builds a point set from row-major coordinates.
    pub fn new(d: usize, coords: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(invalid("point dimension must be at least 1"));
        }
        if coords.is_empty() {
            return Err(invalid("point set must contain at least one point"));
        }
        if !coords.len().is_multiple_of(d) {
            return Err(invalid(format!(
                "{} coordinates do not form rows of width {d}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(invalid(format!(
                "non-finite coordinate at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self {
            n: coords.len() / d,
            d,
            coords,
            label: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(invalid(format!(
                "ragged rows: row 0 has width {d}, row {i} has width {}",
                rows[i].len()
            )));
        }
        Self::new(d, rows.concat())
    }

    /// One-dimensional point set from scalar values.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }

    /// The sub-point-set made of the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            self.check_index(i)?;
            coords.extend_from_slice(self.row(i));
        }
        Self::new(self.d, coords)
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                n: self.n,
            })
        }
    }

    /// Euclidean distance between rows `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        Ok(self.dist(i, j))
    }

    /// Unchecked variant of [`PointSet::distance`]; panics on bad indices.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        sq_dist(self.row(i), self.row(j)).sqrt()
    }

    /// Largest pairwise distance, by exhaustive scan.
    pub fn diameter(&self) -> f64 {
        self.diameter_pair().2
    }

    /// Lexicographically first pair `(i, j)`, `i <= j`, realizing the diameter.
    pub fn diameter_pair(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, 0.0);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let dij = self.dist(i, j);
                if dij > best.2 {
                    best = (i, j, dij);
                }
            }
        }
        best
    }

    /// Input-restricted 1-center: the row minimizing its farthest distance.
    /// Ties go to the smallest index.
    pub fn discrete_center(&self) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for c in 0..self.n {
            let mut radius = 0.0f64;
            for j in 0..self.n {
                radius = radius.max(self.dist(c, j));
                if radius >= best.1 {
                    break;
                }
            }
            if radius < best.1 {
                best = (c, radius);
            }
        }
        best
    }

    pub fn load(path: impl AsRef<Path>, format: Format, header: bool) -> Result<Self> {
        let path = path.as_ref();
        match format {
            Format::Csv => load_csv(path, header),
            Format::Bin => load_bin(path),
        }
    }

    pub fn store(&self, path: impl AsRef<Path>, format: Format) -> Result<()> {
        let path = path.as_ref();
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        match format {
            Format::Csv => {
                for row in self.rows() {
                    let line = row
                        .iter()
                        .map(|v| format!("{v:?}"))
                        .collect::<Vec<_>>()
                        .join(",");
                    writeln!(w, "{line}").map_err(io_err)?;
                }
            }
            Format::Bin => {
                w.write_all(BIN_MAGIC).map_err(io_err)?;
                w.write_all(&(self.n as u64).to_le_bytes())
                    .map_err(io_err)?;
                w.write_all(&(self.d as u64).to_le_bytes())
                    .map_err(io_err)?;
                for v in &self.coords {
                    w.write_all(&v.to_le_bytes()).map_err(io_err)?;
                }
            }
        }
        w.flush().map_err(io_err)
    }
}

/// On-disk point set encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Bin,
}

impl Format {
    /// Guesses the format from a file extension; anything but `.csv` is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Bin,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "bin" => Ok(Format::Bin),
            other => Err(invalid(format!("unknown format {other:?}"))),
        }
    }
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn load_csv(path: &Path, header: bool) -> Result<PointSet> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut coords = Vec::new();
    let mut width = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_err(
                    path,
                    format!(
                        "ragged rows: expected {w} columns, row {} has {}",
                        line + 1,
                        record.len()
                    ),
                ))
            }
            Some(_) => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(
                    path,
                    format!(
                        "non-numeric cell {cell:?} at row {}, column {}",
                        line + 1,
                        col + 1
                    ),
                )
            })?;
            coords.push(v);
        }
    }
    let Some(d) = width else {
        return Err(parse_err(path, "empty file"));
    };
    PointSet::new(d, coords).map_err(|e| parse_err(path, e.to_string()))
}

fn load_bin(path: &Path) -> Result<PointSet> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    if bytes.len() < 20 || &bytes[..4] != BIN_MAGIC {
        return Err(parse_err(path, "missing PTS1 magic or truncated header"));
    }
    let n = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    let d = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| parse_err(path, "header dimensions overflow"))?;
    let payload = &bytes[20..];
    if payload.len() != expected {
        return Err(parse_err(
            path,
            format!(
                "payload has {} bytes, header n={n}, d={d} requires {expected}",
                payload.len()
            ),
        ));
    }
    let coords = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PointSet::new(d, coords).map_err(|e| parse_err(path, e.to_string()))
}

/// Squared Euclidean distance. Eight independent accumulators let the
/// compiler vectorize the reduction.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            let diff = x[k] - y[k];
            acc[k] += diff * diff;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        let diff = x - y;
        tail += diff * diff;
    }
    acc.iter().sum::<f64>() + tail
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Pairwise distances over a point set: a dense symmetric table for
/// `n <= DISTANCE_CACHE_LIMIT`, computed on demand otherwise. The table is
/// filled at construction and read-only afterwards.
#[derive(Debug, Clone)]
pub struct Distances<'a> {
    ps: &'a PointSet,
    table: Option<Vec<f64>>,
}

impl<'a> Distances<'a> {
    pub fn new(ps: &'a PointSet) -> Self {
        let n = ps.n();
        let table = (n <= DISTANCE_CACHE_LIMIT).then(|| {
            let mut t = vec![0.0; n * n];
            for i in 0..n {
                for j in i + 1..n {
                    let dij = ps.dist(i, j);
                    t[i * n + j] = dij;
                    t[j * n + i] = dij;
                }
            }
            t
        });
        Self { ps, table }
    }

    pub fn points(&self) -> &'a PointSet {
        self.ps
    }

    pub fn n(&self) -> usize {
        self.ps.n()
    }

    pub fn is_cached(&self) -> bool {
        self.table.is_some()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.table {
            Some(t) => t[i * self.ps.n() + j],
            None => self.ps.dist(i, j),
        }
    }
}

/// The standard basis `e_1, ..., e_n` of `R^n`.
pub fn basis(n: usize) -> Result<PointSet> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let mut coords = vec![0.0; n * n];
    for i in 0..n {
        coords[i * n + i] = 1.0;
    }
    Ok(PointSet::new(n, coords)?.with_label(format!("basis-{n}")))
}

/// Cumulative sums `e_1, e_1 + e_2, ..., e_1 + ... + e_n`; row `i` has its
/// first `i + 1` coordinates set, so `dist(i, j) = sqrt(|i - j|)`.
pub fn cumsum(n: usize) -> Result<PointSet> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let mut coords = vec![0.0; n * n];
    for i in 0..n {
        coords[i * n..i * n + i + 1].fill(1.0);
    }
    Ok(PointSet::new(n, coords)?.with_label(format!("cumsum-{n}")))
}

fn gaussian(sigma: f64) -> Result<Normal<f64>> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(invalid(format!(
            "noise scale must be finite and >= 0, got {sigma}"
        )));
    }
    Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))
}

/// `n` i.i.d. draws from `N(0, sigma^2 I_d)`.
pub fn gaussian_blob(n: usize, d: usize, sigma: f64, seed: u64) -> Result<PointSet> {
    if n == 0 || d == 0 {
        return Err(invalid("n and d must be at least 1"));
    }
    let normal = gaussian(sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * d).map(|_| normal.sample(&mut rng)).collect();
    Ok(PointSet::new(d, coords)?.with_label(format!("gaussian-{n}x{d}")))
}

/// `base` plus independent `N(0, sigma^2)` noise on every coordinate.
pub fn noisy_copy(base: &PointSet, sigma: f64, seed: u64) -> Result<PointSet> {
    let normal = gaussian(sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = base
        .coords()
        .iter()
        .map(|c| c + normal.sample(&mut rng))
        .collect();
    let label = format!("{}+noise", base.label().unwrap_or("points"));
    Ok(PointSet::new(base.dim(), coords)?.with_label(label))
}

/// Serializable description of where a point set comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Basis {
        n: usize,
    },
    Cumsum {
        n: usize,
    },
    GaussianBlob {
        n: usize,
        d: usize,
        sigma: f64,
        seed: u64,
    },
    NoisyCopy {
        base: Box<DatasetSpec>,
        sigma: f64,
        seed: u64,
    },
    File {
        path: PathBuf,
        format: Format,
        #[serde(default)]
        header: bool,
    },
}

impl DatasetSpec {
    pub fn build(&self) -> Result<PointSet> {
        match self {
            DatasetSpec::Basis { n } => basis(*n),
            DatasetSpec::Cumsum { n } => cumsum(*n),
            DatasetSpec::GaussianBlob { n, d, sigma, seed } => gaussian_blob(*n, *d, *sigma, *seed),
            DatasetSpec::NoisyCopy { base, sigma, seed } => {
                noisy_copy(&base.build()?, *sigma, *seed)
            }
            DatasetSpec::File {
                path,
                format,
                header,
            } => {
                let ps = PointSet::load(path, *format, *header)?;
                let label = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "file".into());
                Ok(ps.with_label(label))
            }
        }
    }
}
