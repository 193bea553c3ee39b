//! Per-run output record shared by every algorithm.

use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Whether the kernel came as features `B` or as a precomputed `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputKind {
    B,
    L,
}

impl std::str::FromStr for InputKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "B" | "b" => Ok(Self::B),
            "L" | "l" => Ok(Self::L),
            other => Err(format!("unknown input kind {other:?} (expected B or L)")),
        }
    }
}

impl std::fmt::Display for InputKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::B => "B",
            Self::L => "L",
        })
    }
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Ran all of its steps.
    Completed,
    /// The best remaining gain was `<= 0`. `boundary` is set when the deciding
    /// pivot was exactly 1, i.e. the gain was exactly zero.
    NonPositiveGain { boundary: bool },
    /// Early-termination was disabled but the best remaining item is
    /// numerically dependent on the selection and cannot be added.
    Degenerate,
    /// A cooperative deadline passed at a step boundary.
    Timeout,
}

impl Termination {
    pub fn is_early(&self) -> bool {
        !matches!(self, Self::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Completed => "false",
            Self::NonPositiveGain { .. } => "true",
            Self::Degenerate => "degenerate",
            Self::Timeout => "timeout",
        }
    }
}

/// Wall-clock split, milliseconds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub setup_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inverse_ms: Option<f64>,
    pub greedy_ms: f64,
    pub total_ms: f64,
}

/// Prefix sequences of one interlaced run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterlaceTrace {
    /// Final sequences of A, B, C and D in selection order.
    pub sequences: [Vec<usize>; 4],
    /// `sizes[x][t] = |X^(t)|` for `t = 0..=k`.
    pub sizes: [Vec<usize>; 4],
    /// `ln det L[X^(t)]` for `t = 0..=k`.
    pub prefix_objectives: [Vec<f64>; 4],
    /// Winning sequence (0..4 for A..D) and step.
    pub chosen: (usize, usize),
    /// Off-diagonals computed per sequence.
    pub offdiag: [u64; 4],
}

/// Per-step values of a double greedy run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DoubleTrace {
    /// `f_i(S)` before clamping.
    pub gain_add: Vec<f64>,
    /// `f(T∖{i}) − f(T)` before clamping.
    pub gain_remove: Vec<f64>,
    /// Probability of adding `i`.
    pub add_probability: Vec<f64>,
    /// Steps where both clamped gains were zero.
    pub both_zero: Vec<usize>,
}

/// Algorithm-specific detail; empty fields are omitted from JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Extras {
    /// RandomGreedy rank draws, one per step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_draws: Option<Vec<usize>>,
    /// Steps (0-based) that added nothing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub idle_steps: Option<Vec<usize>>,
    /// Items found with negative gain and discarded for good.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropped: Option<Vec<usize>>,
    /// Decisions made on a pivot of exactly 1 (zero gain).
    #[serde(skip_serializing_if = "is_zero")]
    pub zero_gain_events: usize,
    /// StochasticGreedy sample size `s`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interlace: Option<InterlaceTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub double: Option<DoubleTrace>,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algo: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_kind: Option<InputKind>,
    pub n: usize,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Selected items in selection order.
    pub selection: Vec<usize>,
    /// `ln det L[S^(t)]` after each addition.
    pub objective: Vec<f64>,
    /// Off-diagonal Cholesky entries computed (`U`).
    pub offdiag: u64,
    pub kernel_evals: u64,
    pub pq_ops: u64,
    pub termination: Termination,
    /// Steps executed, counting the one that detected termination.
    pub t_stop: usize,
    pub timings: Timings,
    #[serde(default)]
    pub extras: Extras,
}

impl RunReport {
    pub(crate) fn new(algo: &str, n: usize, k: Option<usize>) -> Self {
        Self {
            algo: algo.to_string(),
            input_kind: None,
            n,
            d: 0,
            k,
            seed: None,
            epsilon: None,
            selection: Vec::new(),
            objective: Vec::new(),
            offdiag: 0,
            kernel_evals: 0,
            pq_ops: 0,
            termination: Termination::Completed,
            t_stop: 0,
            timings: Timings::default(),
            extras: Extras::default(),
        }
    }

    /// Final `ln det L[S]` (0 for the empty set).
    pub fn objective_value(&self) -> f64 {
        self.objective.last().copied().unwrap_or(0.0)
    }

    /// Zeroes every timing so two reports can be compared byte-for-byte.
    pub fn without_timings(mut self) -> Self {
        self.timings = Timings {
            product_ms: self.timings.product_ms.map(|_| 0.0),
            inverse_ms: self.timings.inverse_ms.map(|_| 0.0),
            ..Timings::default()
        };
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub(crate) fn elapsed_ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Cooperative deadline checked at step boundaries.
#[derive(Clone, Copy, Debug, Default)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Self {
        Self(None)
    }

    pub fn after(limit: std::time::Duration) -> Self {
        Self(Some(Instant::now() + limit))
    }

    pub fn passed(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }
}
