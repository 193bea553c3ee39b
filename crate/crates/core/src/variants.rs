//! Lazy + fast versions of RandomGreedy, StochasticGreedy and InterlaceGreedy.
//!
//! All three reduce to "find the item(s) with the largest current gain", which
//! is done exactly as in [`lazy_fast_greedy`](crate::greedy::lazy_fast_greedy):
//! pop the best upper bound, bring its Cholesky row up to date, and keep it
//! only if it still ranks above everything left in the queue.
//!
//! The randomized variants take a [`DecisionStream`]; their naive counterparts
//! in [`reference`](crate::reference) draw from it in the same order, so both
//! return the same solution for the same seed.

use std::time::Instant;

use crate::cholesky::CholeskyState;
use crate::error::{DppError, Result};
use crate::kernel::{Counted, Kernel};
use crate::pqueue::{ranks_above, LazyMaxQueue};
use crate::report::{elapsed_ms, Deadline, InterlaceTrace, RunReport, Termination};
use crate::stream::DecisionStream;

#[derive(Clone, Copy, Debug)]
pub struct VariantConfig {
    pub k: usize,
    /// StochasticGreedy accuracy parameter in `(0, 1)`.
    pub epsilon: f64,
    pub deadline: Deadline,
}

impl VariantConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            epsilon: 0.5,
            deadline: Deadline::none(),
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_deadline(mut self, deadline: Deadline) -> Self {
        self.deadline = deadline;
        self
    }
}

/// `s = ⌈(n/k)·ln(1/ε)⌉`, at least 1.
pub fn stochastic_sample_size(n: usize, k: usize, epsilon: f64) -> usize {
    let s = (n as f64 / k as f64 * (1.0 / epsilon).ln()).ceil();
    (s as usize).max(1)
}

pub(crate) fn require_ground_set(n: usize, k: usize, ratio: usize, name: &str) -> Result<()> {
    if k == 0 {
        return Err(DppError::Constraint(format!("{name}: k must be >= 1")));
    }
    if n < ratio * k {
        return Err(DppError::Constraint(format!(
            "{name} requires n >= {ratio}k, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

pub(crate) fn require_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(DppError::Constraint(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// Lazy + fast RandomGreedy.
///
/// Each step draws a rank `l` uniformly from `1..=k` and adds the item with
/// the `l`-th largest gain if that gain is positive; otherwise the step adds
/// nothing (the dummy-element case). The top `l` items are found by lazy
/// popping, and the ones not added go back into the queue with their fresh
/// bounds. An item found to have negative gain is discarded for good.
pub fn random_greedy_lf<K: Kernel + ?Sized>(
    kernel: &K,
    cfg: &VariantConfig,
    stream: &mut DecisionStream,
) -> Result<RunReport> {
    let n = kernel.len();
    let k = cfg.k;
    require_ground_set(n, k, 2, "RandomGreedy")?;
    let start = Instant::now();
    let kernel = Counted::new(kernel);
    let mut report = RunReport::new("random", n, Some(k));

    let mut state = CholeskyState::new(&kernel);
    let pivots: Vec<f64> = (0..n).map(|i| state.pivot(i)).collect();
    let mut queue = LazyMaxQueue::build(&pivots);
    let mut draws = Vec::with_capacity(k);
    let mut idle = Vec::new();
    let mut dropped = Vec::new();
    let mut zero_gain = 0;

    for t in 0..k {
        if cfg.deadline.passed() {
            report.termination = Termination::Timeout;
            break;
        }
        report.t_stop = t + 1;
        let rank = stream.uniform_inclusive(1, k);
        draws.push(rank);
        let mut top: Vec<usize> = Vec::with_capacity(rank);
        let mut added = false;
        while top.len() < rank {
            let Some((i, _)) = queue.try_pop_max() else {
                break;
            };
            let d = state.update_row(i, &kernel)?;
            let is_max = queue.peek_entry().is_none_or(|p| ranks_above(d, i, p));
            if !is_max {
                queue.push(i, d);
                continue;
            }
            if d < 1.0 {
                // Every remaining gain is negative too.
                dropped.push(i);
                break;
            }
            top.push(i);
            if top.len() == rank {
                if d > 1.0 {
                    state.commit(i)?;
                    added = true;
                } else {
                    zero_gain += 1;
                }
            }
        }
        if !added {
            idle.push(t);
        }
        for &i in &top {
            if !state.is_selected(i) {
                queue.push(i, state.pivot(i));
            }
        }
    }

    report.selection = state.selection().to_vec();
    report.objective = state.objective_trace().to_vec();
    report.offdiag = state.offdiag_count();
    report.kernel_evals = kernel.evals();
    report.pq_ops = queue.ops();
    report.extras.rank_draws = Some(draws);
    report.extras.idle_steps = Some(idle);
    report.extras.dropped = Some(dropped);
    report.extras.zero_gain_events = zero_gain;
    report.timings.greedy_ms = elapsed_ms(start);
    report.timings.total_ms = report.timings.greedy_ms;
    Ok(report)
}

/// Lazy + fast StochasticGreedy.
///
/// Each step samples `R ⊆ S̄` of size `s` and adds the best item of `R` if
/// its gain is positive. Pivots and Cholesky rows persist across steps, so an
/// item sampled again later resumes from where its row stopped; only the
/// queue is rebuilt per step from the stored pivots. Diagonals are read the
/// first time an item is sampled.
pub fn stochastic_greedy_lf<K: Kernel + ?Sized>(
    kernel: &K,
    cfg: &VariantConfig,
    stream: &mut DecisionStream,
) -> Result<RunReport> {
    let n = kernel.len();
    let k = cfg.k;
    require_ground_set(n, k, 3, "StochasticGreedy")?;
    require_epsilon(cfg.epsilon)?;
    let start = Instant::now();
    let kernel = Counted::new(kernel);
    let s = stochastic_sample_size(n, k, cfg.epsilon);
    let mut report = RunReport::new("stochastic", n, Some(k));
    report.epsilon = Some(cfg.epsilon);

    let mut state = CholeskyState::deferred(n);
    let mut queue = LazyMaxQueue::new(n);
    let mut complement: Vec<usize> = (0..n).collect();
    let mut idle = Vec::new();
    let mut zero_gain = 0;

    for t in 0..k {
        if cfg.deadline.passed() {
            report.termination = Termination::Timeout;
            break;
        }
        report.t_stop = t + 1;
        let sample = stream.sample_subset(&complement, s);
        for &i in &sample {
            state.ensure_pivot(i, &kernel);
        }
        queue.rebuild(sample.iter().map(|&i| (i, state.pivot(i))));
        let (best, d) = loop {
            let (i, _) = queue.pop_max()?;
            let d = state.update_row(i, &kernel)?;
            if queue.peek_entry().is_none_or(|p| ranks_above(d, i, p)) {
                break (i, d);
            }
            queue.push(i, d);
        };
        if d > 1.0 {
            state.commit(best)?;
            let pos = complement
                .binary_search(&best)
                .expect("complement holds every unselected item");
            complement.remove(pos);
        } else {
            if d == 1.0 {
                zero_gain += 1;
            }
            idle.push(t);
        }
    }

    report.selection = state.selection().to_vec();
    report.objective = state.objective_trace().to_vec();
    report.offdiag = state.offdiag_count();
    report.kernel_evals = kernel.evals();
    report.pq_ops = queue.ops();
    report.extras.sample_size = Some(s);
    report.extras.idle_steps = Some(idle);
    report.extras.zero_gain_events = zero_gain;
    report.timings.greedy_ms = elapsed_ms(start);
    report.timings.total_ms = report.timings.greedy_ms;
    Ok(report)
}

/// One of the four sequences built by InterlaceGreedy.
#[derive(Clone, Debug, Default)]
pub(crate) struct SequenceRecord {
    pub seq: Vec<usize>,
    /// `|X^(t)|` for `t = 0..=k`.
    pub sizes: Vec<usize>,
    /// `ln det` of each nonempty prefix of `seq`.
    pub prefix_values: Vec<f64>,
    pub offdiag: u64,
}

impl SequenceRecord {
    fn objective_at(&self, t: usize) -> f64 {
        match self.sizes[t] {
            0 => 0.0,
            m => self.prefix_values[m - 1],
        }
    }
}

/// Picks the best of the `4(k+1)` prefixes (first one on ties) and fills in
/// the report's selection.
pub(crate) fn finish_interlace(report: &mut RunReport, records: [SequenceRecord; 4], k: usize) {
    let mut chosen = (0, 0);
    let mut best = f64::NEG_INFINITY;
    for (x, rec) in records.iter().enumerate() {
        for t in 0..=k {
            let v = rec.objective_at(t);
            if v > best {
                best = v;
                chosen = (x, t);
            }
        }
    }
    let rec = &records[chosen.0];
    let m = rec.sizes[chosen.1];
    report.selection = rec.seq[..m].to_vec();
    report.objective = rec.prefix_values[..m].to_vec();
    report.offdiag = records.iter().map(|r| r.offdiag).sum();
    let [a, b, c, d] = records;
    report.extras.interlace = Some(InterlaceTrace {
        prefix_objectives: [&a, &b, &c, &d].map(|r| (0..=k).map(|t| r.objective_at(t)).collect()),
        offdiag: [a.offdiag, b.offdiag, c.offdiag, d.offdiag],
        sizes: [a.sizes, b.sizes, c.sizes, d.sizes],
        sequences: [a.seq, b.seq, c.seq, d.seq],
        chosen,
    });
}

struct Side {
    state: CholeskyState,
    queue: LazyMaxQueue,
    sizes: Vec<usize>,
}

impl Side {
    fn new(pivots: &[f64], k: usize) -> Self {
        Self {
            state: CholeskyState::from_pivots(pivots.to_vec()),
            queue: LazyMaxQueue::build(pivots),
            sizes: Vec::with_capacity(k + 1),
        }
    }

    /// The live item with the largest current gain, or `None` when every
    /// upper bound is below 1.
    fn arg_max<K: Kernel + ?Sized>(&mut self, kernel: &K) -> Result<Option<(usize, f64)>> {
        if self.queue.peek_max() < 1.0 {
            return Ok(None);
        }
        loop {
            let (i, _) = self.queue.pop_max()?;
            let d = self.state.update_row(i, kernel)?;
            if self.queue.peek_entry().is_none_or(|p| ranks_above(d, i, p)) {
                return Ok(Some((i, d)));
            }
            self.queue.push(i, d);
        }
    }

    fn into_record(self) -> SequenceRecord {
        SequenceRecord {
            seq: self.state.selection().to_vec(),
            prefix_values: self.state.objective_trace().to_vec(),
            sizes: self.sizes,
            offdiag: self.state.offdiag_count(),
        }
    }
}

/// One side's turn: add its best item unless that gain is negative, and
/// remove the added item from the other side's queue.
fn interlace_turn<K: Kernel + ?Sized>(
    me: &mut Side,
    other: &mut Side,
    kernel: &K,
    zero_gain: &mut usize,
) -> Result<()> {
    if let Some((i, d)) = me.arg_max(kernel)? {
        if d >= 1.0 {
            if d == 1.0 {
                *zero_gain += 1;
            }
            me.state.commit(i)?;
            other.queue.exclude(i);
        } else {
            me.queue.push(i, d);
        }
    }
    me.sizes.push(me.state.len());
    Ok(())
}

fn interlaced_sets<K: Kernel + ?Sized>(
    kernel: &K,
    pivots: &[f64],
    k: usize,
    first: Option<usize>,
    zero_gain: &mut usize,
    pq_ops: &mut u64,
) -> Result<(SequenceRecord, SequenceRecord)> {
    let mut s = Side::new(pivots, k);
    let mut t = Side::new(pivots, k);
    s.sizes.push(0);
    t.sizes.push(0);
    let mut t0 = 1;
    if let Some(j) = first {
        s.state.commit(j)?;
        t.state.commit(j)?;
        s.queue.exclude(j);
        t.queue.exclude(j);
        s.sizes.push(1);
        t.sizes.push(1);
        t0 = 2;
    }
    for _ in t0..=k {
        interlace_turn(&mut s, &mut t, kernel, zero_gain)?;
        interlace_turn(&mut t, &mut s, kernel, zero_gain)?;
    }
    *pq_ops += s.queue.ops() + t.queue.ops();
    Ok((s.into_record(), t.into_record()))
}

/// Lazy + fast InterlaceGreedy (deterministic).
///
/// Builds two interlaced sequences A and B from scratch, then C and D both
/// seeded with A's first item, and returns the prefix of A, B, C or D with the
/// largest `ln det`, the empty set included.
pub fn interlace_greedy_lf<K: Kernel + ?Sized>(
    kernel: &K,
    cfg: &VariantConfig,
) -> Result<RunReport> {
    let n = kernel.len();
    let k = cfg.k;
    require_ground_set(n, k, 4, "InterlaceGreedy")?;
    let start = Instant::now();
    let kernel = Counted::new(kernel);
    let mut report = RunReport::new("interlace", n, Some(k));
    let pivots: Vec<f64> = (0..n).map(|i| kernel.diag(i).max(0.0).sqrt()).collect();
    let mut zero_gain = 0;
    let mut pq_ops = 0;

    let (a, b) = interlaced_sets(&kernel, &pivots, k, None, &mut zero_gain, &mut pq_ops)?;
    let (c, d) = match a.seq.first() {
        Some(&j) => interlaced_sets(&kernel, &pivots, k, Some(j), &mut zero_gain, &mut pq_ops)?,
        None => {
            let empty = SequenceRecord {
                sizes: vec![0; k + 1],
                ..SequenceRecord::default()
            };
            (empty.clone(), empty)
        }
    };
    report.t_stop = k;
    finish_interlace(&mut report, [a, b, c, d], k);
    report.kernel_evals = kernel.evals();
    report.pq_ops = pq_ops;
    report.extras.zero_gain_events = zero_gain;
    report.timings.greedy_ms = elapsed_ms(start);
    report.timings.total_ms = report.timings.greedy_ms;
    Ok(report)
}
