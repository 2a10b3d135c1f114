//! `dhj`: batch front end to the library. Every command prints one JSON
//! value on stdout; errors go to stderr.
//!
//! Exit codes: 0 success, 1 verification failure or other error, 2 bad
//! flags or input, 3 work budget exceeded.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dhj_core::cube::{all_lines, find_line_in_set, find_subspace_in_set, DEFAULT_WORK_BUDGET};
use dhj_core::extremal::{max_linefree, ExtremalOptions};
use dhj_core::harness::{self, Suite, Verdict};
use dhj_core::increment::{
    bounds_calculator, dhj_driver, partition_insensitive_with, DiagonalSearch, DriverConfig, PartitionLevel,
};
use dhj_core::measures::{
    equal_slices_measure, nondegenerate_equal_slices_measure, sample_equal_slices, sample_nondegenerate,
    seeded_rng, uniform_measure, Distribution,
};
use dhj_core::rational::{fmt_ratio, parse_ratio};
use dhj_core::sperner::{is_antichain, multidim_sperner_refine, probabilistic_sperner_density, sperner_bound, RefineMode};
use dhj_core::{CubeSet, CubeShape, Error, SearchOptions};

/// Environment variable holding the default work budget for searches.
const BUDGET_VAR: &str = "DHJ_WORK_BUDGET";

#[derive(Parser)]
#[command(name = "dhj", version, about = "Combinatorial lines, equal-slices measures and density increments")]
struct Cli {
    /// Threads for commands that can run in parallel (verify --all).
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Pretty-print the JSON output.
    #[arg(long, global = true)]
    human: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the lines of [k]^n or find one in a set.
    Lines {
        #[command(subcommand)]
        action: LinesAction,
    },
    /// Subspace search.
    Subspace {
        #[command(subcommand)]
        action: SubspaceAction,
    },
    /// Uniform, equal-slices and non-degenerate measures of a set file.
    Measure {
        #[arg(long)]
        file: PathBuf,
    },
    /// Draw points from a measure.
    Sample {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Law::EqualSlices)]
        law: Law,
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print counts per point instead of the sample list.
        #[arg(long)]
        histogram: bool,
    },
    /// Total variation distance between two distribution files.
    Tv {
        a: PathBuf,
        b: PathBuf,
    },
    /// Largest line-free subset of [k]^n.
    Extremal {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Wall-clock budget in seconds; without it the search runs to completion.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        symmetry: bool,
        #[arg(long)]
        nodes: Option<u64>,
        /// A size known to be achievable.
        #[arg(long)]
        hint: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sperner-type computations on [2]^n.
    Sperner {
        #[command(subcommand)]
        action: SpernerAction,
    },
    /// Partition an insensitive set into subspaces.
    Partition {
        #[arg(long = "set-file")]
        set_file: PathBuf,
        /// Dimension of the pieces.
        #[arg(long)]
        d: usize,
        /// Block length; defaults to `d`.
        #[arg(long)]
        m: Option<usize>,
        /// The set must be jk-insensitive for this j.
        #[arg(long, default_value_t = 1)]
        j: u8,
        /// `η` for the size preconditions, e.g. 1/10.
        #[arg(long)]
        eta: Option<String>,
    },
    /// Run the density-increment loop on a set.
    Driver {
        #[arg(long = "set-file")]
        set_file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        max_iterations: usize,
        /// Print the trace as JSON lines instead of one object.
        #[arg(long)]
        trace_lines: bool,
    },
    /// Explicit constants of the k = 3 argument.
    Bounds {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        delta: String,
    },
    /// Run verification entries.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum LinesAction {
    Enumerate {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        degenerate: bool,
        /// Only print the count.
        #[arg(long)]
        count_only: bool,
    },
    Find {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Subcommand)]
enum SubspaceAction {
    Find {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        d: usize,
    },
}

#[derive(Subcommand)]
enum SpernerAction {
    /// C(n, floor(n/2)).
    Bound {
        #[arg(long)]
        n: usize,
    },
    AntichainCheck {
        #[arg(long)]
        file: PathBuf,
    },
    LineDensity {
        #[arg(long)]
        file: PathBuf,
    },
    /// Pair refinement towards a d-dimensional subspace.
    Refine {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        d: usize,
        /// Use the randomized variant with this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, conflicts_with_all = ["all", "list"])]
    lemma: Option<String>,
    /// Parameters as a JSON object.
    #[arg(long, requires = "lemma")]
    params: Option<String>,
    #[arg(long)]
    all: bool,
    #[arg(long, value_enum, default_value_t = SuiteArg::Fast)]
    suite: SuiteArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// List registered entries.
    #[arg(long)]
    list: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Law {
    EqualSlices,
    Nondegenerate,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Fast,
    Full,
}

/// Failure modes mapped to exit codes.
enum Failure {
    Usage(String),
    Budget(String),
    Verification(Value),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            Error::InvalidParameter(_)
            | Error::Parse(_)
            | Error::Json(_)
            | Error::InvalidShape { .. }
            | Error::UnknownEntry(_)
            | Error::DigitOutOfRange { .. }
            | Error::LengthMismatch { .. }
            | Error::NotInsensitive { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn work_budget() -> Result<u64, Failure> {
    match std::env::var(BUDGET_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Usage(format!("{BUDGET_VAR} must be an integer, got `{v}`"))),
        Err(_) => Ok(DEFAULT_WORK_BUDGET),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_set(path: &Path) -> Result<CubeSet, Failure> {
    Ok(CubeSet::from_json_str(&read(path)?)?)
}

fn read_distribution(path: &Path) -> Result<Distribution, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("output serializes")
}

fn run(cli: &Cli) -> Result<Value, Failure> {
    let opts = SearchOptions::with_budget(work_budget()?);
    Ok(match &cli.command {
        Command::Lines { action: LinesAction::Enumerate { k, n, degenerate, count_only } } => {
            let shape = CubeShape::new(*k, *n)?;
            opts.check(k + 1, *n)?;
            let lines = all_lines(shape, *degenerate)?;
            if *count_only {
                json!({ "count": lines.len() })
            } else {
                json!({ "count": lines.len(), "lines": lines.iter().map(|l| l.to_string()).collect::<Vec<_>>() })
            }
        }
        Command::Lines { action: LinesAction::Find { file } } => {
            let a = read_set(file)?;
            let line = find_line_in_set(&a, &opts)?;
            json!({ "line_free": line.is_none(), "line": line.map(|l| l.to_string()) })
        }
        Command::Subspace { action: SubspaceAction::Find { file, d } } => {
            let a = read_set(file)?;
            let v = find_subspace_in_set(&a, *d, &opts)?;
            json!({ "found": v.is_some(), "subspace": v.map(|v| v.to_string()) })
        }
        Command::Measure { file } => {
            let a = read_set(file)?;
            let shape = a.shape();
            let nondeg = if shape.n() >= shape.k() {
                Some(fmt_ratio(nondegenerate_equal_slices_measure(&a)?.value()))
            } else {
                None
            };
            json!({
                "uniform": fmt_ratio(uniform_measure(&a).value()),
                "equal_slices": fmt_ratio(equal_slices_measure(&a).value()),
                "nondegenerate": nondeg,
            })
        }
        Command::Sample { k, n, law, count, seed, histogram } => {
            let shape = CubeShape::new(*k, *n)?;
            let mut rng = seeded_rng(*seed);
            let mut points = Vec::new();
            let mut hist: HashMap<String, u64> = HashMap::new();
            for _ in 0..*count {
                let p = match law {
                    Law::EqualSlices => sample_equal_slices(shape, &mut rng),
                    Law::Nondegenerate => sample_nondegenerate(shape, &mut rng)?,
                };
                if *histogram {
                    *hist.entry(p.to_string()).or_default() += 1;
                } else {
                    points.push(p.to_string());
                }
            }
            if *histogram {
                let sorted: std::collections::BTreeMap<_, _> = hist.into_iter().collect();
                json!({ "samples": count, "seed": seed, "counts": sorted })
            } else {
                json!({ "samples": count, "seed": seed, "points": points })
            }
        }
        Command::Tv { a, b } => {
            let (a, b) = (read_distribution(a)?, read_distribution(b)?);
            json!({ "tv": fmt_ratio(a.tv_distance(&b)?.value()) })
        }
        Command::Extremal { n, k, budget, symmetry, nodes, hint, seed } => {
            let shape = CubeShape::new(*k, *n)?;
            let time_budget = match budget {
                Some(s) if !s.is_finite() || *s < 0.0 => return Err(Failure::Usage("--budget must be >= 0".into())),
                Some(s) => Some(Duration::from_secs_f64(*s)),
                None => None,
            };
            let options = ExtremalOptions {
                time_budget,
                node_budget: *nodes,
                symmetry: *symmetry,
                initial_lower_bound: *hint,
                seed: *seed,
                build: opts,
            };
            to_json(&max_linefree(shape, &options)?)
        }
        Command::Sperner { action } => match action {
            SpernerAction::Bound { n } => json!({ "n": n, "bound": sperner_bound(*n).to_string() }),
            SpernerAction::AntichainCheck { file } => json!({ "antichain": is_antichain(&read_set(file)?)? }),
            SpernerAction::LineDensity { file } => {
                let d = probabilistic_sperner_density(&read_set(file)?)?;
                let mut v = to_json(&d);
                v["holds"] = d.holds().into();
                v
            }
            SpernerAction::Refine { file, d, seed } => {
                let mode = seed.map_or(RefineMode::Derandomized, |seed| RefineMode::Randomized { seed });
                let trace = multidim_sperner_refine(&read_set(file)?, *d, mode)?;
                let mut v = to_json(&trace);
                v["succeeded"] = trace.succeeded().into();
                v
            }
        },
        Command::Partition { set_file, d, m, j, eta } => {
            let a = read_set(set_file)?;
            let eta = eta.as_deref().map(parse_ratio).transpose()?;
            let level = PartitionLevel { dim: *d, m: m.unwrap_or(*d) };
            let res = partition_insensitive_with(&a, *j, level, eta.as_ref(), opts.work_budget)?;
            let mut v = to_json(&res);
            v["valid"] = res.check(&a, *d).into();
            v["bound_holds"] = to_json(&res.bound_holds());
            v
        }
        Command::Driver { set_file, seed, max_iterations, trace_lines } => {
            let a = read_set(set_file)?;
            let config = DriverConfig {
                seed: *seed,
                max_iterations: *max_iterations,
                diagonal: DiagonalSearch { seed: *seed, ..Default::default() },
                work_budget: opts.work_budget,
                ..Default::default()
            };
            let out = dhj_driver(&a, &config)?;
            if *trace_lines {
                // already one JSON object per line
                return Ok(Value::String(out.trace.to_json_lines()));
            }
            to_json(&out)
        }
        Command::Bounds { k, delta } => to_json(&bounds_calculator(*k, &parse_ratio(delta)?)?),
        Command::Verify(args) => verify(args, cli.workers)?,
    })
}

fn verify(args: &VerifyArgs, workers: usize) -> Result<Value, Failure> {
    if args.list {
        let entries: Vec<Value> =
            harness::registry().iter().map(|e| json!({ "id": e.id, "summary": e.summary })).collect();
        return Ok(Value::Array(entries));
    }
    let reports = if let Some(id) = &args.lemma {
        let params: Value = match &args.params {
            Some(p) => serde_json::from_str(p).map_err(|e| Failure::Usage(format!("--params: {e}")))?,
            None => Value::Null,
        };
        vec![harness::verify(id, &params, args.seed)?]
    } else if args.all {
        let suite = match args.suite {
            SuiteArg::Fast => Suite::Fast,
            SuiteArg::Full => Suite::Full,
        };
        harness::verify_all_with_workers(suite, args.seed, workers)
    } else {
        return Err(Failure::Usage("verify needs --lemma, --all or --list".into()));
    };
    let failed = reports.iter().any(|r| r.verdict == Verdict::Fail);
    let out = if args.lemma.is_some() { to_json(&reports[0]) } else { to_json(&reports) };
    if failed {
        return Err(Failure::Verification(out));
    }
    Ok(out)
}

fn print(v: &Value, human: bool) {
    let text = match v {
        Value::String(s) if s.ends_with('\n') => s.clone(),
        _ if human => serde_json::to_string_pretty(v).expect("serializes") + "\n",
        _ => v.to_string() + "\n",
    };
    // a closed pipe (e.g. `| head`) is not an error worth reporting
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(v) => {
            print(&v, cli.human);
            ExitCode::SUCCESS
        }
        Err(Failure::Verification(v)) => {
            print(&v, cli.human);
            eprintln!("error: verification failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
