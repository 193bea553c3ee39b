//! Randomized double greedy for unconstrained MAP.
//!
//! Items are visited in order `0..n`. With `S` the items kept so far and
//! `T = [n] ∖ (removed so far)`, item `i` is kept with probability
//! `a / (a + b)` where `a = [f(S ∪ {i}) − f(S)]₊` and
//! `b = [f(T ∖ {i}) − f(T)]₊` (probability 1 when both are zero).
//!
//! The fast version gets `b` without touching `T`: for `g(X) = ln det L⁻¹[X]`,
//!
//! ```text
//! g(R ∪ {i}) − g(R) = f(R̄ ∖ {i}) − f(R̄),
//! ```
//!
//! so `b` is a marginal gain of `g` with respect to the removed set `R` and
//! comes from a second incremental Cholesky factor, over `L⁻¹`.

use std::time::Instant;

use crate::cholesky::CholeskyState;
use crate::error::{DppError, Result};
use crate::kernel::{Counted, Kernel, KernelKind, KernelOracle};
use crate::matrix::DenseMatrix;
use crate::reference::{inverse, log_det, log_det_kernel};
use crate::report::{elapsed_ms, Deadline, DoubleTrace, RunReport, Termination};
use crate::stream::DecisionStream;

/// Largest `‖L·L⁻¹ − I‖∞` accepted before declaring `L` singular.
pub const INVERSE_RESIDUAL: f64 = 1e-8;

fn gain_of(d: f64) -> f64 {
    if d == 0.0 {
        f64::NEG_INFINITY
    } else {
        2.0 * d.ln()
    }
}

/// Probability of keeping an item given its two raw gains.
pub fn add_probability(gain_add: f64, gain_remove: f64) -> f64 {
    let a = gain_add.max(0.0);
    let b = gain_remove.max(0.0);
    if a + b == 0.0 {
        1.0
    } else {
        a / (a + b)
    }
}

/// Both sides of `g(R ∪ {i}) − g(R) = f(R̄ ∖ {i}) − f(R̄)`, computed by
/// brute force. `i` must not be in `removed`.
pub fn jacobi_gain_check(
    l: &DenseMatrix,
    l_inv: &DenseMatrix,
    removed: &[usize],
    i: usize,
) -> Result<(f64, f64)> {
    let n = l.rows();
    if removed.contains(&i) {
        return Err(DppError::AlreadySelected(i));
    }
    let mut with_i = removed.to_vec();
    with_i.push(i);
    let lhs = log_det(l_inv, &with_i)? - log_det(l_inv, removed)?;
    let kept: Vec<usize> = (0..n).filter(|x| !removed.contains(x)).collect();
    let kept_minus: Vec<usize> = kept.iter().copied().filter(|&x| x != i).collect();
    let rhs = log_det(l, &kept_minus)? - log_det(l, &kept)?;
    Ok((lhs, rhs))
}

fn check_inverse(l: &DenseMatrix, inv: &DenseMatrix) -> Result<()> {
    let residual = l.matmul(inv)?.inf_norm_dev_from_identity();
    if !(residual <= INVERSE_RESIDUAL) {
        return Err(DppError::Singular(format!(
            "‖L·L⁻¹ − I‖∞ = {residual:e} exceeds {INVERSE_RESIDUAL:e}"
        )));
    }
    Ok(())
}

fn record(trace: &mut DoubleTrace, step: usize, a: f64, b: f64) -> f64 {
    let p = add_probability(a, b);
    trace.gain_add.push(a);
    trace.gain_remove.push(b);
    trace.add_probability.push(p);
    if a.max(0.0) + b.max(0.0) == 0.0 {
        trace.both_zero.push(step);
    }
    p
}

/// Fast double greedy. Needs `L` nonsingular; one `unit()` draw per item.
/// A passed deadline stops the scan between items.
pub fn fast_double_greedy(
    kernel: &KernelOracle,
    stream: &mut DecisionStream,
    deadline: Deadline,
) -> Result<RunReport> {
    let n = kernel.n();
    let mut report = RunReport::new("double-fast", n, None);

    let t0 = Instant::now();
    let l = kernel.materialize();
    if kernel.kind() != KernelKind::LDense {
        report.timings.product_ms = Some(elapsed_ms(t0));
    }
    let t1 = Instant::now();
    let l_inv = inverse(&l)?;
    check_inverse(&l, &l_inv)?;
    report.timings.inverse_ms = Some(elapsed_ms(t1));

    let start = Instant::now();
    let kl = Counted::new(&l);
    let ki = Counted::new(&l_inv);
    let mut keep = CholeskyState::new(&kl);
    let mut drop = CholeskyState::new(&ki);
    let mut trace = DoubleTrace::default();
    for i in 0..n {
        if deadline.passed() {
            report.termination = Termination::Timeout;
            break;
        }
        report.t_stop = i + 1;
        let a = gain_of(keep.update_row(i, &kl)?);
        let b = gain_of(drop.update_row(i, &ki)?);
        let p = record(&mut trace, i, a, b);
        if stream.unit() < p {
            keep.commit(i)?;
        } else {
            drop.commit(i)?;
        }
    }
    report.selection = keep.selection().to_vec();
    report.objective = keep.objective_trace().to_vec();
    report.offdiag = keep.offdiag_count() + drop.offdiag_count();
    report.kernel_evals = kl.evals() + ki.evals();
    report.extras.double = Some(trace);
    report.timings.greedy_ms = elapsed_ms(start);
    report.timings.total_ms = report.timings.greedy_ms
        + report.timings.inverse_ms.unwrap_or(0.0)
        + report.timings.product_ms.unwrap_or(0.0);
    Ok(report)
}

/// Double greedy with both gains recomputed by brute-force log-dets. Draws
/// from `stream` exactly like [`fast_double_greedy`].
pub fn naive_double_greedy<K: Kernel + ?Sized>(
    kernel: &K,
    stream: &mut DecisionStream,
    deadline: Deadline,
) -> Result<RunReport> {
    let n = kernel.len();
    let start = Instant::now();
    let kernel = Counted::new(kernel);
    let mut report = RunReport::new("double-naive", n, None);
    let mut kept: Vec<usize> = Vec::new();
    let mut top: Vec<usize> = (0..n).collect();
    let mut f_kept = 0.0;
    let mut f_top = log_det_kernel(&kernel, &top);
    let mut trace = DoubleTrace::default();
    for i in 0..n {
        if deadline.passed() {
            report.termination = Termination::Timeout;
            break;
        }
        report.t_stop = i + 1;
        kept.push(i);
        let f_kept_i = log_det_kernel(&kernel, &kept);
        kept.pop();
        let top_minus: Vec<usize> = top.iter().copied().filter(|&x| x != i).collect();
        let f_top_minus = log_det_kernel(&kernel, &top_minus);
        let p = record(&mut trace, i, f_kept_i - f_kept, f_top_minus - f_top);
        if stream.unit() < p {
            kept.push(i);
            f_kept = f_kept_i;
            report.objective.push(f_kept);
        } else {
            top = top_minus;
            f_top = f_top_minus;
        }
    }
    report.selection = kept;
    report.kernel_evals = kernel.evals();
    report.extras.double = Some(trace);
    report.timings.greedy_ms = elapsed_ms(start);
    report.timings.total_ms = report.timings.greedy_ms;
    Ok(report)
}
