use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use dppmap::algo::{run, Algo, RunOptions};
use dppmap::datagen::{
    gen_synthetic, id_map_path, ingest_ratings, netflix_to_triples, ColumnMap, RatingsSpec,
    SyntheticSpec,
};
use dppmap::io::{load_kernel, save_dense, save_sparse};
use dppmap::report::{Deadline, InputKind};
use dppmap::verify::{check_report, run_all, Scale};
use dppmap::KernelOracle;

mod bench;

type BoxError = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(
    name = "dppmap",
    version,
    about = "Greedy MAP inference for determinantal point processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic d×n matrix of standard normals.
    Gen(GenArgs),
    /// Binarize a ratings file into sparse item columns.
    Ingest(IngestArgs),
    /// Run one algorithm and write its report as JSON.
    Run(RunArgs),
    /// Sweep algorithms over a grid of n or k and append CSV rows.
    Bench(bench::BenchArgs),
    /// Run the verification suite; exits nonzero if a gating check fails.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    /// Feature dimension; defaults to n.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the n×n kernel L = BᵀB instead of B.
    #[arg(long)]
    kernel: bool,
    /// Output path; a `.csv` extension selects CSV, anything else DPPM1.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    /// DPPS1 output; the id map goes to `<out>.idmap.json`.
    #[arg(long)]
    out: PathBuf,
    /// Ratings at or above this become 1.
    #[arg(long, default_value_t = 4.0)]
    threshold: f64,
    /// Keep items and users that end up with no ratings.
    #[arg(long)]
    keep_empty: bool,
    /// Input uses the Netflix Prize per-movie layout.
    #[arg(long)]
    netflix: bool,
    #[arg(long, default_value_t = 0)]
    user_col: usize,
    #[arg(long, default_value_t = 1)]
    item_col: usize,
    #[arg(long, default_value_t = 2)]
    rating_col: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    algo: Algo,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "B")]
    input_kind: InputKind,
    /// Cardinality bound; ignored by the double greedy algorithms.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Double greedy runs on `scale · L + shift · I`.
    #[arg(long, default_value_t = 0.9)]
    scale: f64,
    #[arg(long, default_value_t = 0.1)]
    shift: f64,
    #[arg(long)]
    timeout_s: Option<f64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recompute the objective by brute force and check the U band.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Fewer instances per criterion.
    #[arg(long)]
    quick: bool,
}

pub(crate) fn deadline(timeout_s: Option<f64>) -> Deadline {
    timeout_s.map_or(Deadline::none(), |s| {
        Deadline::after(Duration::from_secs_f64(s))
    })
}

fn cmd_gen(args: GenArgs) -> Result<(), BoxError> {
    let spec = SyntheticSpec {
        n: args.n,
        d: args.d.unwrap_or(args.n),
        seed: args.seed,
    };
    let b = gen_synthetic(&spec)?;
    let m = if args.kernel {
        KernelOracle::from_features(&b).materialize()
    } else {
        b
    };
    save_dense(&args.out, &m)?;
    log::info!(
        "wrote {}×{} matrix to {}",
        m.rows(),
        m.cols(),
        args.out.display()
    );
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<(), BoxError> {
    let spec = RatingsSpec {
        columns: ColumnMap {
            user: args.user_col,
            item: args.item_col,
            rating: args.rating_col,
        },
        threshold: args.threshold,
        drop_empty: !args.keep_empty,
    };
    let reader = BufReader::new(File::open(&args.input)?);
    let ing = if args.netflix {
        let mut triples = Vec::new();
        netflix_to_triples(reader, &mut triples)?;
        ingest_ratings(triples.as_slice(), &spec)?
    } else {
        ingest_ratings(reader, &spec)?
    };
    save_sparse(&args.out, &ing.b)?;
    ing.write_id_map(id_map_path(&args.out))?;
    log::info!(
        "{} items, {} users, {} ones -> {}",
        ing.b.n(),
        ing.b.d(),
        ing.b.nnz(),
        args.out.display()
    );
    Ok(())
}

fn write_output(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            writeln!(w, "{text}")?;
            w.flush()
        }
        None => writeln!(std::io::stdout().lock(), "{text}"),
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, BoxError> {
    let kernel = load_kernel(&args.input, args.input_kind)?;
    let opts = RunOptions {
        k: args.k,
        seed: args.seed,
        epsilon: args.epsilon,
        scale: args.scale,
        shift: args.shift,
        deadline: deadline(args.timeout_s),
    };
    let report = run(args.algo, &kernel, &opts)?;
    write_output(args.out.as_deref(), &report.to_json())?;
    if report.termination.is_early() {
        log::info!(
            "stopped early: {:?} after {} steps",
            report.termination,
            report.t_stop
        );
    }
    if args.check {
        let checked = if args.algo.is_constrained() {
            check_report(&kernel, args.algo, &report)
        } else {
            let shifted = kernel.clone().with_transform(args.scale, args.shift)?;
            check_report(&shifted, args.algo, &report)
        };
        if !checked.is_empty() {
            for p in &checked {
                eprintln!("check failed: {p}");
            }
            return Ok(ExitCode::FAILURE);
        }
        eprintln!("check passed");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let scale = if args.quick {
        Scale::Quick
    } else {
        Scale::Full
    };
    let mut failed = 0;
    for outcome in run_all(scale) {
        println!("{}", outcome.line());
        for note in &outcome.notes {
            println!("    {note}");
        }
        if !outcome.passed {
            if outcome.gating {
                failed += 1;
            } else {
                println!("    (not gating)");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} gating criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a).map(|()| ExitCode::SUCCESS),
        Command::Ingest(a) => cmd_ingest(a).map(|()| ExitCode::SUCCESS),
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => bench::cmd_bench(a).map(|()| ExitCode::SUCCESS),
        Command::Verify(a) => Ok(cmd_verify(a)),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
