//! `dimred` command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use super::problem::{Problem, ProblemArgs};
use super::speedup::run_speedup;
use super::sweep::{run_sweep, run_threshold, EvalConvention, Report, SweepConfig};
use crate::dataset::{DatasetSpec, Format, PointSet};
use crate::doubling::estimate_ddim;
use crate::error::{invalid, Error, Result};
use crate::projection::ProjectionMap;

#[derive(Debug, Parser)]
#[command(
    name = "dimred",
    version,
    about = "Gaussian random projections for Euclidean maximization problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Basis,
    Cumsum,
    GaussianBlob,
    NoisyCopy,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Bin,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Bin => Format::Bin,
        }
    }
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Point set file.
    #[arg(long = "in")]
    input: PathBuf,
    /// File format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<FormatArg>,
    /// Skip the first line of a CSV file.
    #[arg(long)]
    header: bool,
}

impl InputArgs {
    fn format(&self) -> Format {
        self.format
            .map(Into::into)
            .unwrap_or_else(|| Format::from_path(&self.input))
    }

    fn spec(&self) -> DatasetSpec {
        DatasetSpec::File {
            path: self.input.clone(),
            format: self.format(),
            header: self.header,
        }
    }

    fn load(&self) -> Result<PointSet> {
        self.spec().build()
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Point set file; alternative to --kind.
    #[arg(long = "in", conflicts_with = "kind")]
    input: Option<PathBuf>,
    #[arg(long)]
    format: Option<FormatArg>,
    #[arg(long)]
    header: bool,
    /// Synthetic dataset family.
    #[arg(long)]
    kind: Option<Kind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Seed of the synthetic generator.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

impl DataArgs {
    fn spec(&self) -> Result<DatasetSpec> {
        if let Some(path) = &self.input {
            let format = self
                .format
                .map(Into::into)
                .unwrap_or_else(|| Format::from_path(path));
            return Ok(DatasetSpec::File {
                path: path.clone(),
                format,
                header: self.header,
            });
        }
        let kind = self
            .kind
            .ok_or_else(|| invalid("either --in or --kind is required"))?;
        synthetic_spec(kind, self.n, self.d, self.sigma, self.data_seed, None)
    }
}

fn synthetic_spec(
    kind: Kind,
    n: Option<usize>,
    d: Option<usize>,
    sigma: f64,
    seed: u64,
    base: Option<DatasetSpec>,
) -> Result<DatasetSpec> {
    let need_n = || n.ok_or_else(|| invalid("--n is required"));
    Ok(match kind {
        Kind::Basis => DatasetSpec::Basis { n: need_n()? },
        Kind::Cumsum => DatasetSpec::Cumsum { n: need_n()? },
        Kind::GaussianBlob => DatasetSpec::GaussianBlob {
            n: need_n()?,
            d: d.ok_or_else(|| invalid("--d is required for gaussian-blob"))?,
            sigma,
            seed,
        },
        Kind::NoisyCopy => DatasetSpec::NoisyCopy {
            base: Box::new(base.ok_or_else(|| invalid("--base is required for noisy-copy"))?),
            sigma,
            seed,
        },
    })
}

#[derive(Debug, Args)]
struct ProblemFlags {
    /// max-matching, max-hypermatching, max-tsp, max-mst, max-k-coverage,
    /// large-opt, remote-<measure> or 1-median.
    #[arg(long)]
    problem: String,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// linf, lp:<p>, sum or median.
    #[arg(long)]
    f: Option<String>,
    /// Random tours sampled by max-tsp --mode random.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl ProblemFlags {
    fn problem(&self, seed: u64) -> Result<Problem> {
        Problem::from_args(&ProblemArgs {
            name: &self.problem,
            mode: self.mode.as_deref(),
            k: self.k,
            f: self.f.as_deref(),
            samples: self.samples,
            seed,
            tol: self.tol,
            max_iter: self.max_iter,
        })
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// JSON sweep configuration; replaces all other experiment flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated ascending target dimensions.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-trial CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl SweepArgs {
    fn config(&self) -> Result<SweepConfig> {
        if let Some(path) = &self.config {
            return SweepConfig::load(path);
        }
        let name = self
            .problem
            .as_deref()
            .ok_or_else(|| invalid("either --config or --problem is required"))?;
        let problem = Problem::from_args(&ProblemArgs {
            name,
            mode: self.mode.as_deref(),
            k: self.k,
            f: self.f.as_deref(),
            samples: self.samples,
            seed: self.seed,
            tol: None,
            max_iter: None,
        })?;
        Ok(SweepConfig {
            problem,
            dataset: self.data.spec()?,
            dims: self.dims.clone(),
            trials: self.trials,
            seed: self.seed,
            eval_convention: EvalConvention::Lifted,
        })
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic point set.
    Gen {
        #[arg(long)]
        kind: Kind,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Base point set for noisy-copy.
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Option<FormatArg>,
    },
    /// Apply a seeded Gaussian map to a point set.
    Project {
        #[command(flatten)]
        input: InputArgs,
        /// Target dimension of the JL map.
        #[arg(long, required_unless_present = "line")]
        t: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the one-dimensional map with variance pi/2.
        #[arg(long, conflicts_with = "t")]
        line: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one problem and print the value and solution as JSON.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        problem: ProblemFlags,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Projection-dimension sweep.
    Sweep(SweepArgs),
    /// Basis-vector threshold experiment.
    Threshold {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Ambient versus projected wall-time comparison.
    BenchSpeedup(SweepArgs),
    /// Estimate the doubling dimension.
    Ddim {
        #[command(flatten)]
        input: InputArgs,
    },
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| invalid(format!("stdout: {e}")))
        }
    }
}

fn emit_report(report: &Report, out: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    write_out(out, &report.to_json()?)?;
    if let Some(path) = csv {
        report.store_csv(path)?;
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen {
            kind,
            n,
            d,
            sigma,
            seed,
            base,
            out,
            format,
        } => {
            let base = base.map(|path| DatasetSpec::File {
                format: Format::from_path(&path),
                path,
                header: false,
            });
            let ps = synthetic_spec(kind, n, d, sigma, seed, base)?.build()?;
            let format = format
                .map(Into::into)
                .unwrap_or_else(|| Format::from_path(&out));
            ps.store(&out, format)
        }
        Command::Project {
            input,
            t,
            seed,
            line,
            out,
        } => {
            let ps = input.load()?;
            let map = if line {
                ProjectionMap::line(ps.dim(), seed)?
            } else {
                ProjectionMap::jl(ps.dim(), t.unwrap_or(1), seed)?
            };
            map.apply(&ps)?.store(&out, Format::from_path(&out))
        }
        Command::Solve {
            input,
            problem,
            seed,
        } => {
            let ps = input.load()?;
            let problem = problem.problem(seed)?;
            let solved = problem.solve(&ps)?;
            let doc = json!({
                "problem": problem,
                "n": ps.n(),
                "d": ps.dim(),
                "value": solved.value,
                "solution": solved.solution,
            });
            write_out(None, &serde_json::to_string_pretty(&doc)?)
        }
        Command::Sweep(args) => {
            let report = run_sweep(&args.config()?)?;
            emit_report(&report, args.out.as_deref(), args.csv.as_deref())
        }
        Command::Threshold {
            n,
            dims,
            trials,
            seed,
            out,
            csv,
        } => {
            let report = run_threshold(n, &dims, trials, seed)?;
            emit_report(&report, out.as_deref(), csv.as_deref())
        }
        Command::BenchSpeedup(args) => {
            let report = run_speedup(&args.config()?)?;
            write_out(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)
        }
        Command::Ddim { input } => {
            let est = estimate_ddim(&input.load()?)?;
            write_out(None, &serde_json::to_string_pretty(&est)?)
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Failures print one `error:` line on stderr.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("error: invalid arguments");
            eprintln!("{line}");
            return 2;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            1
        }
    }
}
