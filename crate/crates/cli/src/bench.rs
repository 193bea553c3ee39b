//! `dppmap bench`: algorithm × n × k × seed sweeps written as CSV.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use dppmap::algo::{run, Algo, RunOptions};
use dppmap::datagen::{gen_synthetic, SyntheticSpec};
use dppmap::io::load_kernel;
use dppmap::report::InputKind;
use dppmap::{KernelOracle, RunReport};
use rayon::prelude::*;

use crate::BoxError;

pub const COLUMNS: [&str; 13] = [
    "algo",
    "input_kind",
    "n",
    "d",
    "k",
    "seed",
    "epsilon",
    "time_ms",
    "greedy_ms",
    "U",
    "kernel_evals",
    "logdet",
    "terminated_early",
];

/// Largest tolerated lazyfast/fast wall-clock ratio before a warning.
const SOFT_SPEEDUP: f64 = 1.2;

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated algorithm names.
    #[arg(long, value_delimiter = ',', required = true)]
    algos: Vec<Algo>,
    /// Ground-set sizes for synthetic instances.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Feature dimension; defaults to n.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    /// Each seed generates its own instance and drives the randomized algorithms.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seed: Vec<u64>,
    /// Benchmark a fixed instance instead of synthetic ones.
    #[arg(long, conflicts_with_all = ["n", "d"])]
    input: Option<PathBuf>,
    /// For synthetic instances, `L` precomputes BᵀB outside the timed region.
    #[arg(long, default_value = "B")]
    input_kind: InputKind,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.9)]
    scale: f64,
    #[arg(long, default_value_t = 0.1)]
    shift: f64,
    /// Per-cell limit; a cell that hits it is recorded as `timeout`.
    #[arg(long)]
    timeout_s: Option<f64>,
    /// Append rows here (header written once); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent cells.
    #[arg(long, env = "DPP_THREADS", default_value_t = 1)]
    threads: usize,
}

struct Instance {
    kernel: KernelOracle,
    n: usize,
    d: usize,
    seed: u64,
}

struct Cell {
    algo: Algo,
    instance: Arc<Instance>,
    k: usize,
}

fn instances(args: &BenchArgs) -> Result<Vec<Arc<Instance>>, BoxError> {
    if let Some(path) = &args.input {
        let kernel = load_kernel(path, args.input_kind)?;
        let (n, d) = (kernel.n(), kernel.d());
        return Ok(args
            .seed
            .iter()
            .map(|&seed| {
                Arc::new(Instance {
                    kernel: kernel.clone(),
                    n,
                    d,
                    seed,
                })
            })
            .collect());
    }
    if args.n.is_empty() {
        return Err("bad grid: give --n or --input".into());
    }
    let mut out = Vec::new();
    for &n in &args.n {
        for &seed in &args.seed {
            let d = args.d.unwrap_or(n);
            let b = gen_synthetic(&SyntheticSpec { n, d, seed })?;
            let kernel = match args.input_kind {
                InputKind::B => KernelOracle::from_features(&b),
                InputKind::L => {
                    KernelOracle::from_kernel(KernelOracle::from_features(&b).materialize())?
                }
            };
            out.push(Arc::new(Instance { kernel, n, d, seed }));
        }
    }
    Ok(out)
}

fn row(cell: &Cell, kind: InputKind, eps: f64, result: &Result<RunReport, String>) -> Vec<String> {
    let inst = &cell.instance;
    let mut r = vec![
        cell.algo.name().to_string(),
        kind.to_string(),
        inst.n.to_string(),
        inst.d.to_string(),
        if cell.algo.is_constrained() {
            cell.k.to_string()
        } else {
            String::new()
        },
        inst.seed.to_string(),
        if cell.algo == Algo::Stochastic {
            eps.to_string()
        } else {
            String::new()
        },
    ];
    match result {
        Ok(rep) => r.extend([
            format!("{:.3}", rep.timings.total_ms),
            format!("{:.3}", rep.timings.greedy_ms),
            rep.offdiag.to_string(),
            rep.kernel_evals.to_string(),
            rep.objective_value().to_string(),
            rep.termination.label().to_string(),
        ]),
        Err(_) => r.extend(["", "", "", "", "", "error"].map(String::from)),
    }
    r
}

/// Warns when lazyfast is clearly slower than fast on the same cell.
fn soft_speedup_check(cells: &[Cell], results: &[Result<RunReport, String>]) {
    let find = |algo: Algo, probe: &Cell| {
        cells.iter().zip(results).find_map(|(c, r)| match r {
            Ok(rep)
                if c.algo == algo
                    && Arc::ptr_eq(&c.instance, &probe.instance)
                    && c.k == probe.k =>
            {
                Some(rep)
            }
            _ => None,
        })
    };
    for cell in cells.iter().filter(|c| c.algo == Algo::LazyFast) {
        if let (Some(lf), Some(fast)) = (find(Algo::LazyFast, cell), find(Algo::Fast, cell)) {
            let ratio = lf.timings.total_ms / fast.timings.total_ms;
            if ratio > SOFT_SPEEDUP {
                log::warn!(
                    "lazyfast took {ratio:.2}x the time of fast (n = {}, k = {}, seed = {})",
                    cell.instance.n,
                    cell.k,
                    cell.instance.seed
                );
            }
        }
    }
}

pub fn cmd_bench(args: BenchArgs) -> Result<(), BoxError> {
    let insts = instances(&args)?;
    let mut cells = Vec::new();
    for inst in &insts {
        for &k in &args.k {
            for &algo in &args.algos {
                // Unconstrained algorithms ignore k; run them once per instance.
                if !algo.is_constrained() && k != args.k[0] {
                    continue;
                }
                cells.push(Cell {
                    algo,
                    instance: Arc::clone(inst),
                    k,
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.max(1))
        .build()?;
    let results: Vec<Result<RunReport, String>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let opts = RunOptions {
                    k: Some(cell.k),
                    seed: cell.instance.seed,
                    epsilon: args.epsilon,
                    scale: args.scale,
                    shift: args.shift,
                    deadline: crate::deadline(args.timeout_s),
                };
                run(cell.algo, &cell.instance.kernel, &opts).map_err(|e| {
                    log::warn!("{} n = {} k = {}: {e}", cell.algo, cell.instance.n, cell.k);
                    e.to_string()
                })
            })
            .collect()
    });

    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(OpenOptions::new().create(true).append(true).open(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let fresh = args
        .out
        .as_ref()
        .is_none_or(|p| p.metadata().map_or(true, |m| m.len() == 0));
    let mut w = csv::Writer::from_writer(sink);
    if fresh {
        w.write_record(COLUMNS)?;
    }
    for (cell, res) in cells.iter().zip(&results) {
        w.write_record(row(cell, args.input_kind, args.epsilon, res))?;
    }
    w.flush()?;
    soft_speedup_check(&cells, &results);
    Ok(())
}
