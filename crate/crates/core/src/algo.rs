//! Name-based dispatch over every algorithm in the crate.

use std::fmt;
use std::str::FromStr;

use crate::doublegreedy::{fast_double_greedy, naive_double_greedy};
use crate::error::{DppError, Result};
use crate::greedy::{fast_greedy, lazy_fast_greedy, lazy_greedy, naive_greedy, GreedyConfig};
use crate::kernel::{KernelKind, KernelOracle};
use crate::report::{Deadline, InputKind, RunReport};
use crate::stream::DecisionStream;
use crate::variants::{interlace_greedy_lf, random_greedy_lf, stochastic_greedy_lf, VariantConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algo {
    Naive,
    Lazy,
    Fast,
    LazyFast,
    Random,
    Stochastic,
    Interlace,
    DoubleNaive,
    DoubleFast,
}

impl Algo {
    pub const ALL: [Algo; 9] = [
        Algo::Naive,
        Algo::Lazy,
        Algo::Fast,
        Algo::LazyFast,
        Algo::Random,
        Algo::Stochastic,
        Algo::Interlace,
        Algo::DoubleNaive,
        Algo::DoubleFast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Naive => "naive",
            Algo::Lazy => "lazy",
            Algo::Fast => "fast",
            Algo::LazyFast => "lazyfast",
            Algo::Random => "random",
            Algo::Stochastic => "stochastic",
            Algo::Interlace => "interlace",
            Algo::DoubleNaive => "double-naive",
            Algo::DoubleFast => "double-fast",
        }
    }

    /// Whether the algorithm takes a cardinality bound `k`.
    pub fn is_constrained(self) -> bool {
        !matches!(self, Algo::DoubleNaive | Algo::DoubleFast)
    }

    pub fn is_randomized(self) -> bool {
        matches!(
            self,
            Algo::Random | Algo::Stochastic | Algo::DoubleNaive | Algo::DoubleFast
        )
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = DppError;
    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algo::ALL.iter().map(|a| a.name()).collect();
                DppError::Constraint(format!(
                    "unknown algorithm {s:?} (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// Everything a single run needs besides the kernel.
#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub k: Option<usize>,
    pub seed: u64,
    pub epsilon: f64,
    /// Kernel transform `scale · L + shift · I` applied by the double greedy
    /// algorithms only.
    pub scale: f64,
    pub shift: f64,
    pub deadline: Deadline,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            k: None,
            seed: 0,
            epsilon: 0.5,
            scale: 0.9,
            shift: 0.1,
            deadline: Deadline::none(),
        }
    }
}

fn input_kind(kernel: &KernelOracle) -> InputKind {
    match kernel.kind() {
        KernelKind::LDense => InputKind::L,
        KernelKind::BDense | KernelKind::BSparse => InputKind::B,
    }
}

/// Runs `algo` and fills in the report's instance metadata.
pub fn run(algo: Algo, kernel: &KernelOracle, opts: &RunOptions) -> Result<RunReport> {
    let need_k = || {
        opts.k
            .ok_or_else(|| DppError::Constraint(format!("{algo} needs a cardinality bound k")))
    };
    let mut stream = DecisionStream::new(opts.seed);
    let mut report = match algo {
        Algo::Naive | Algo::Lazy | Algo::Fast | Algo::LazyFast => {
            let cfg = GreedyConfig::new(need_k()?).with_deadline(opts.deadline);
            match algo {
                Algo::Naive => naive_greedy(kernel, &cfg)?,
                Algo::Lazy => lazy_greedy(kernel, &cfg)?,
                Algo::Fast => fast_greedy(kernel, &cfg)?,
                _ => lazy_fast_greedy(kernel, &cfg)?,
            }
        }
        Algo::Random | Algo::Stochastic | Algo::Interlace => {
            let cfg = VariantConfig::new(need_k()?)
                .with_epsilon(opts.epsilon)
                .with_deadline(opts.deadline);
            match algo {
                Algo::Random => random_greedy_lf(kernel, &cfg, &mut stream)?,
                Algo::Stochastic => stochastic_greedy_lf(kernel, &cfg, &mut stream)?,
                _ => interlace_greedy_lf(kernel, &cfg)?,
            }
        }
        Algo::DoubleNaive | Algo::DoubleFast => {
            let k = kernel.clone().with_transform(opts.scale, opts.shift)?;
            if algo == Algo::DoubleFast {
                fast_double_greedy(&k, &mut stream, opts.deadline)?
            } else {
                naive_double_greedy(&k, &mut stream, opts.deadline)?
            }
        }
    };
    report.algo = algo.name().to_string();
    report.input_kind = Some(input_kind(kernel));
    report.d = kernel.d();
    if algo.is_randomized() {
        report.seed = Some(opts.seed);
    }
    if algo == Algo::Stochastic {
        report.epsilon = Some(opts.epsilon);
    }
    Ok(report)
}
