//! Command-line front end: sampling, validation, instance generation, and
//! benchmarking with file-based I/O.
//!
//! Exit codes: 0 success, 1 check failure, 2 input or validation error,
//! 3 infeasible start.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use polyess::bench::{gen_random_instance, time_methods, time_worst_case, BenchInstance, BenchRow};
use polyess::polytope::{Polytope, ProblemFile};
use polyess::sampler::{chain_rng, run_parallel, ChainStats, Precision, SamplerConfig};
use polyess::{Error, Real};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INPUT_ERROR: u8 = 2;
const EXIT_INFEASIBLE_START: u8 = 3;

#[derive(Parser)]
#[command(
    name = "polyess",
    version,
    about = "Elliptical slice sampling for normal distributions truncated to a polytope"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from a problem file and write a CSV plus a stats sidecar.
    Sample(SampleArgs),
    /// Verify every row of a sample file against a problem file.
    Check(CheckArgs),
    /// Generate a random problem instance with a strictly feasible start.
    Gen(GenArgs),
    /// Time the interval-construction methods and sampling throughput.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Problem JSON file.
    #[arg(long)]
    problem: PathBuf,
    /// Output CSV path; the stats sidecar lands next to it as .stats.json.
    #[arg(long)]
    out: PathBuf,
    /// Total number of samples to draw.
    #[arg(long, default_value_t = 1_000)]
    samples: usize,
    /// Number of independent chains.
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long = "burn-in", default_value_t = 0)]
    burn_in: usize,
    #[arg(long, default_value_t = 1)]
    thinning: usize,
    /// Interval trimming epsilon in radians; default depends on precision.
    #[arg(long = "trim-eps")]
    trim_eps: Option<f64>,
    /// Feasibility tolerance; default depends on precision.
    #[arg(long)]
    tol: Option<f64>,
    /// RNG seed; drawn from system entropy (and recorded) when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "f64")]
    precision: String,
    /// Worker threads for parallel chains; defaults to all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Start point in original coordinates, comma-separated; overrides the
    /// problem file's x0.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Sample CSV to verify.
    #[arg(long)]
    samples: PathBuf,
    /// Feasibility tolerance; `<=` is inclusive, so 0 accepts boundary rows.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct GenArgs {
    /// Ambient dimension (the instance has m = d constraints).
    #[arg(long)]
    dims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance family: "random" square instances or the nested "worst" case.
    #[arg(long, default_value = "random")]
    family: String,
    /// Comma-separated sizes: dimensions for random instances, constraint
    /// counts for the worst-case family.
    #[arg(long, value_delimiter = ',', default_values_t = vec![64usize, 128])]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "f64")]
    precision: String,
    /// Parallel chains for the throughput row.
    #[arg(long, default_value_t = 10)]
    chains: usize,
    /// Worker threads for the parallel-chain row.
    #[arg(long, default_value_t = 4)]
    workers: usize,
}

#[derive(Serialize)]
struct RunStats {
    n: usize,
    chains: usize,
    burn_in: usize,
    thinning: usize,
    rejections: u64,
    seed: u64,
    precision: String,
    wall_time: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Check(args) => cmd_check(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InfeasibleStart { .. } => ExitCode::from(EXIT_INFEASIBLE_START),
                _ => ExitCode::from(EXIT_INPUT_ERROR),
            }
        }
    }
}

fn parse_precision(text: &str) -> polyess::Result<Precision> {
    text.parse()
}

fn build_config(
    precision: Precision,
    burn_in: usize,
    thinning: usize,
    trim_eps: Option<f64>,
    tol: Option<f64>,
    seed: u64,
) -> polyess::Result<SamplerConfig> {
    let mut cfg = SamplerConfig::new(precision)
        .with_burn_in(burn_in)
        .with_thinning(thinning)
        .with_seed(seed);
    if let Some(eps) = trim_eps {
        cfg = cfg.with_trim_eps(eps);
    }
    if let Some(t) = tol {
        cfg = cfg.with_feasibility_tol(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_whitened<S: Real>(
    whitened: &Polytope<f64>,
    u0: &DVector<f64>,
    chains: usize,
    per_chain: usize,
    cfg: &SamplerConfig,
) -> polyess::Result<(DMatrix<f64>, ChainStats)> {
    let poly: Polytope<S> = whitened.cast();
    let starts = DMatrix::from_fn(chains, u0.len(), |_, j| S::from_double(u0[j]));
    let (samples, stats) = run_parallel(&poly, &starts, per_chain, cfg)?;
    Ok((samples.map(|v| v.to_double()), stats))
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

fn install_pool<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> polyess::Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn write_samples_csv(path: &Path, samples: &DMatrix<f64>, d: usize) -> polyess::Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    writer.write_record(&header).map_err(csv_err)?;
    for i in 0..samples.nrows() {
        let row: Vec<String> = (0..d).map(|j| samples[(i, j)].to_string()).collect();
        writer.write_record(&row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

fn stats_path(out: &Path) -> PathBuf {
    out.with_extension("stats.json")
}

fn cmd_sample(args: SampleArgs) -> polyess::Result<u8> {
    let started = Instant::now();
    let problem = ProblemFile::load(&args.problem)?;
    let poly = problem.to_polytope()?;
    let spec = problem.to_gaussian()?;
    let d = poly.dim();

    let x0 = match args.x0.clone().or_else(|| problem.x0.clone()) {
        Some(v) if v.len() == d => DVector::from_column_slice(&v),
        Some(v) => {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.len(),
            })
        }
        None => {
            return Err(Error::InvalidInput(
                "no start point: supply x0 in the problem file or via --x0".into(),
            ))
        }
    };
    if args.chains == 0 {
        return Err(Error::InvalidInput("need at least one chain".into()));
    }

    let precision = parse_precision(&args.precision)?;
    let seed = args.seed.unwrap_or_else(rand::random::<u64>);
    let cfg = build_config(
        precision,
        args.burn_in,
        args.thinning,
        args.trim_eps,
        args.tol,
        seed,
    )?;

    let whitened = spec.whiten(&poly)?;
    let u0 = spec.whiten_point(&x0)?;
    if let Some((constraint, residual)) = whitened.strict_violation(&u0)? {
        return Err(Error::InfeasibleStart {
            constraint,
            residual: residual.to_double(),
        });
    }

    let per_chain = args.samples.div_ceil(args.chains.max(1));
    let (white_samples, stats) = install_pool(args.workers, || match precision {
        Precision::Single => run_whitened::<f32>(&whitened, &u0, args.chains, per_chain, &cfg),
        Precision::Double => run_whitened::<f64>(&whitened, &u0, args.chains, per_chain, &cfg),
    })??;

    // Back to original coordinates, truncated to the requested count.
    let n = args.samples.min(white_samples.nrows());
    let mut samples = DMatrix::zeros(n, d);
    for i in 0..n {
        let x = spec.unwhiten(&white_samples.row(i).transpose());
        samples.row_mut(i).tr_copy_from(&x);
    }

    write_samples_csv(&args.out, &samples, d)?;
    let run_stats = RunStats {
        n,
        chains: args.chains,
        burn_in: cfg.burn_in,
        thinning: cfg.thinning,
        rejections: stats.rejections,
        seed,
        precision: precision.name().to_string(),
        wall_time: started.elapsed().as_secs_f64(),
    };
    std::fs::write(
        stats_path(&args.out),
        serde_json::to_string_pretty(&run_stats)?,
    )?;
    Ok(0)
}

fn cmd_check(args: CheckArgs) -> polyess::Result<u8> {
    let problem = ProblemFile::load(&args.problem)?;
    let poly = problem.to_polytope()?;
    let d = poly.dim();

    let mut reader = csv::Reader::from_path(&args.samples).map_err(csv_err)?;
    let mut max_violation = f64::NEG_INFINITY;
    let mut first_bad: Option<usize> = None;
    let mut rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidInput(format!("bad CSV record: {e}")))?;
        if record.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: record.len(),
            });
        }
        let mut x = DVector::zeros(d);
        for (j, field) in record.iter().enumerate() {
            x[j] = field
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("row {i}, column {j}: {e}")))?;
        }
        let violation = poly.max_residual(&x)?;
        if violation > max_violation {
            max_violation = violation;
        }
        if violation > args.tol && first_bad.is_none() {
            first_bad = Some(i);
        }
        rows += 1;
    }

    println!("checked {rows} rows; max violation {max_violation:e}");
    match first_bad {
        None => Ok(0),
        Some(row) => {
            eprintln!(
                "row {row} violates the constraints beyond tol {:e}",
                args.tol
            );
            Ok(EXIT_CHECK_FAILED)
        }
    }
}

fn cmd_gen(args: GenArgs) -> polyess::Result<u8> {
    if args.dims == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let mut rng = chain_rng(args.seed, 0);
    let instance: BenchInstance<f64> = gen_random_instance(args.dims, &mut rng);
    let d = args.dims;
    let file = ProblemFile {
        a: (0..d)
            .map(|i| (0..d).map(|j| instance.poly.matrix()[(i, j)]).collect())
            .collect(),
        b: instance.poly.offsets().iter().copied().collect(),
        mean: None,
        covariance: None,
        x0: Some(instance.x0.iter().copied().collect()),
    };
    file.save(&args.out)?;
    println!("wrote {} ({}x{})", args.out.display(), d, d);
    Ok(0)
}

fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> polyess::Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::InvalidInput(format!("cannot serialize row: {e}")))?;
    }
    writer.flush()?;
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> polyess::Result<u8> {
    if args.dims.is_empty() {
        return Err(Error::InvalidInput("need at least one size".into()));
    }
    let precision = parse_precision(&args.precision)?;
    let rows = match args.family.as_str() {
        "worst" => time_worst_case(&args.dims, args.reps, args.seed)?,
        "random" => {
            let cfg = SamplerConfig::new(precision).with_seed(args.seed);
            match precision {
                Precision::Single => {
                    let instances: Vec<BenchInstance<f32>> = args
                        .dims
                        .iter()
                        .map(|&d| gen_random_instance(d, &mut chain_rng(args.seed, d as u64)))
                        .collect();
                    time_methods(&instances, args.reps, &cfg, args.chains, args.workers)?
                }
                Precision::Double => {
                    let instances: Vec<BenchInstance<f64>> = args
                        .dims
                        .iter()
                        .map(|&d| gen_random_instance(d, &mut chain_rng(args.seed, d as u64)))
                        .collect();
                    time_methods(&instances, args.reps, &cfg, args.chains, args.workers)?
                }
            }
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown family {other:?}; expected random or worst"
            )))
        }
    };
    write_bench_csv(&args.out, &rows)?;
    println!("wrote {} ({} rows)", args.out.display(), rows.len());
    Ok(0)
}
