//! Cardinality-constrained greedy MAP: naive, lazy, fast and lazy + fast.
//!
//! All four select the item with the largest marginal gain at every step,
//! breaking ties toward the smaller index, and stop early once that gain is
//! not positive (unless [`GreedyConfig::stop_on_nonpositive`] is off). On the
//! same input they return the same sequence.
//!
//! * naive: recomputes every gain with a fresh log-determinant,
//! * lazy: keeps stale gains in a max-queue and recomputes only the top,
//! * fast: keeps all Cholesky rows current, gain `= 2 ln dᵢ`,
//! * lazy + fast: stale pivots in a max-queue, rows brought up to date only
//!   when they surface.

use std::time::Instant;

use crate::cholesky::{CholeskyState, PIVOT_FLOOR};
use crate::error::{DppError, Result};
use crate::kernel::{Counted, Kernel};
use crate::pqueue::{ranks_above, LazyMaxQueue};
use crate::reference::log_det_kernel;
use crate::report::{elapsed_ms, Deadline, RunReport, Termination};

#[derive(Clone, Copy, Debug)]
pub struct GreedyConfig {
    pub k: usize,
    /// Stop as soon as the best gain is `<= 0`.
    pub stop_on_nonpositive: bool,
    pub deadline: Deadline,
}

impl GreedyConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            stop_on_nonpositive: true,
            deadline: Deadline::none(),
        }
    }

    pub fn without_early_stop(mut self) -> Self {
        self.stop_on_nonpositive = false;
        self
    }

    pub fn with_deadline(mut self, deadline: Deadline) -> Self {
        self.deadline = deadline;
        self
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k > n {
        return Err(DppError::Constraint(format!("k = {k} exceeds n = {n}")));
    }
    Ok(())
}

/// What to do with the best item of a step.
enum Verdict {
    Take,
    Stop(Termination),
}

/// Decision on a pivot `d`, i.e. a gain of `2 ln d`.
fn judge_pivot(d: f64, stop: bool) -> Verdict {
    if stop && d <= 1.0 {
        Verdict::Stop(Termination::NonPositiveGain { boundary: d == 1.0 })
    } else if !(d > PIVOT_FLOOR) {
        Verdict::Stop(Termination::Degenerate)
    } else {
        Verdict::Take
    }
}

/// Decision on a log-determinant gain.
fn judge_gain(g: f64, stop: bool) -> Verdict {
    if stop && g <= 0.0 {
        Verdict::Stop(Termination::NonPositiveGain { boundary: g == 0.0 })
    } else if g == f64::NEG_INFINITY || g.is_nan() {
        Verdict::Stop(Termination::Degenerate)
    } else {
        Verdict::Take
    }
}

fn finish_fast(report: &mut RunReport, state: &CholeskyState, evals: u64, start: Instant) {
    report.selection = state.selection().to_vec();
    report.objective = state.objective_trace().to_vec();
    report.offdiag = state.offdiag_count();
    report.kernel_evals = evals;
    report.timings.greedy_ms = elapsed_ms(start);
    report.timings.total_ms = report.timings.greedy_ms;
}

/// Greedy with every gain recomputed from scratch as
/// `ln det L[S ∪ {i}] − ln det L[S]`.
pub fn naive_greedy<K: Kernel + ?Sized>(kernel: &K, cfg: &GreedyConfig) -> Result<RunReport> {
    let n = kernel.len();
    check_k(n, cfg.k)?;
    let start = Instant::now();
    let kernel = Counted::new(kernel);
    let mut report = RunReport::new("naive", n, Some(cfg.k));
    let mut selected = vec![false; n];
    let mut set: Vec<usize> = Vec::with_capacity(cfg.k);
    let mut current = 0.0;

    for t in 0..cfg.k {
        if cfg.deadline.passed() {
            report.termination = Termination::Timeout;
            break;
        }
        report.t_stop = t + 1;
        let mut best: Option<(usize, f64, f64)> = None;
        for i in (0..n).filter(|&i| !selected[i]) {
            set.push(i);
            let value = log_det_kernel(&kernel, &set);
            set.pop();
            let gain = value - current;
            if best.is_none_or(|(_, g, _)| gain > g) {
                best = Some((i, gain, value));
            }
        }
        let (i, gain, value) = best.expect("k <= n leaves a candidate");
        match judge_gain(gain, cfg.stop_on_nonpositive) {
            Verdict::Take => {
                selected[i] = true;
                set.push(i);
                current = value;
                report.objective.push(value);
            }
            Verdict::Stop(why) => {
                report.termination = why;
                break;
            }
        }
    }
    report.selection = set;
    report.kernel_evals = kernel.evals();
    report.timings.greedy_ms = elapsed_ms(start);
    report.timings.total_ms = report.timings.greedy_ms;
    Ok(report)
}

/// Lazy greedy over log-determinant gains (no Cholesky reuse).
pub fn lazy_greedy<K: Kernel + ?Sized>(kernel: &K, cfg: &GreedyConfig) -> Result<RunReport> {
    let n = kernel.len();
    check_k(n, cfg.k)?;
    let start = Instant::now();
    let kernel = Counted::new(kernel);
    let mut report = RunReport::new("lazy", n, Some(cfg.k));
    let gains: Vec<f64> = (0..n).map(|i| log_det_kernel(&kernel, &[i])).collect();
    let mut queue = LazyMaxQueue::build(&gains);
    let mut stamp = vec![0usize; n];
    let mut set: Vec<usize> = Vec::with_capacity(cfg.k);
    let mut current = 0.0;

    'steps: for t in 0..cfg.k {
        if cfg.deadline.passed() {
            report.termination = Termination::Timeout;
            break;
        }
        report.t_stop = t + 1;
        loop {
            let (i, key) = queue.pop_max()?;
            if cfg.stop_on_nonpositive && key <= 0.0 {
                report.termination = Termination::NonPositiveGain {
                    boundary: key == 0.0,
                };
                break 'steps;
            }
            let (gain, value) = if stamp[i] == set.len() {
                (key, current + key)
            } else {
                set.push(i);
                let value = log_det_kernel(&kernel, &set);
                set.pop();
                stamp[i] = set.len();
                (value - current, value)
            };
            if !queue.peek_entry().is_none_or(|p| ranks_above(gain, i, p)) {
                queue.push(i, gain);
                continue;
            }
            match judge_gain(gain, cfg.stop_on_nonpositive) {
                Verdict::Take => {
                    set.push(i);
                    current = value;
                    report.objective.push(value);
                    break;
                }
                Verdict::Stop(why) => {
                    report.termination = why;
                    break 'steps;
                }
            }
        }
    }
    report.selection = set;
    report.kernel_evals = kernel.evals();
    report.pq_ops = queue.ops();
    report.timings.greedy_ms = elapsed_ms(start);
    report.timings.total_ms = report.timings.greedy_ms;
    Ok(report)
}

/// Fast greedy: every unselected Cholesky row is brought up to date after
/// each addition, and the next item is the largest pivot.
pub fn fast_greedy<K: Kernel + ?Sized>(kernel: &K, cfg: &GreedyConfig) -> Result<RunReport> {
    let n = kernel.len();
    check_k(n, cfg.k)?;
    let start = Instant::now();
    let kernel = Counted::new(kernel);
    let mut report = RunReport::new("fast", n, Some(cfg.k));
    let mut state = CholeskyState::new(&kernel);

    for t in 0..cfg.k {
        if cfg.deadline.passed() {
            report.termination = Termination::Timeout;
            break;
        }
        report.t_stop = t + 1;
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for i in (0..n).filter(|&i| !state.is_selected(i)) {
            let d = state.pivot(i);
            if best.0 == usize::MAX || d > best.1 {
                best = (i, d);
            }
        }
        let (i, d) = best;
        match judge_pivot(d, cfg.stop_on_nonpositive) {
            Verdict::Take => {
                state.commit(i)?;
            }
            Verdict::Stop(why) => {
                report.termination = why;
                break;
            }
        }
        if t + 1 < cfg.k {
            for r in 0..n {
                if !state.is_selected(r) {
                    state.update_row(r, &kernel)?;
                }
            }
        }
    }
    finish_fast(&mut report, &state, kernel.evals(), start);
    Ok(report)
}

/// Lazy + fast greedy.
///
/// Queue keys are pivots `dᵢ` from the last time row `i` was touched; since
/// pivots only shrink as `S` grows, each key bounds the current one. A popped
/// row is brought up to date and accepted only if it still ranks above the
/// next key, otherwise it goes back with its new pivot.
pub fn lazy_fast_greedy<K: Kernel + ?Sized>(kernel: &K, cfg: &GreedyConfig) -> Result<RunReport> {
    let n = kernel.len();
    check_k(n, cfg.k)?;
    let start = Instant::now();
    let kernel = Counted::new(kernel);
    let mut report = RunReport::new("lazyfast", n, Some(cfg.k));
    let mut state = CholeskyState::new(&kernel);
    let pivots: Vec<f64> = (0..n).map(|i| state.pivot(i)).collect();
    let mut queue = LazyMaxQueue::build(&pivots);

    'steps: for t in 0..cfg.k {
        if cfg.deadline.passed() {
            report.termination = Termination::Timeout;
            break;
        }
        report.t_stop = t + 1;
        loop {
            let (i, key) = queue.pop_max()?;
            if cfg.stop_on_nonpositive && key <= 1.0 {
                report.termination = Termination::NonPositiveGain {
                    boundary: key == 1.0,
                };
                break 'steps;
            }
            let d = state.update_row(i, &kernel)?;
            if !queue.peek_entry().is_none_or(|p| ranks_above(d, i, p)) {
                queue.push(i, d);
                continue;
            }
            match judge_pivot(d, cfg.stop_on_nonpositive) {
                Verdict::Take => {
                    state.commit(i)?;
                    break;
                }
                Verdict::Stop(why) => {
                    report.termination = why;
                    break 'steps;
                }
            }
        }
    }
    finish_fast(&mut report, &state, kernel.evals(), start);
    report.pq_ops = queue.ops();
    Ok(report)
}
