//! Slow, independent oracles used to check the fast code paths.
//!
//! Nothing here shares code with [`cholesky`](crate::cholesky): log-dets come
//! from a textbook right-looking factorization of the extracted submatrix.

use crate::error::{DppError, Result};
use crate::kernel::{dense_dot, Counted, Kernel};
use crate::matrix::DenseMatrix;
use crate::report::{elapsed_ms, InterlaceTrace, RunReport, Termination};
use crate::stream::DecisionStream;
use crate::variants::{
    finish_interlace, require_epsilon, require_ground_set, stochastic_sample_size, SequenceRecord,
    VariantConfig,
};

/// Pivots at or below this make a submatrix count as singular.
pub const SINGULAR_PIVOT: f64 = 1e-14;

/// Largest ground set [`exhaustive_map`] will enumerate.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Right-looking Cholesky `a = RᵀR` of the `m × m` row-major `a` in place,
/// working on the upper triangle so every update runs along a row. Returns
/// `Σ ln a_jj` over the pivots, or `None` on a pivot `<= SINGULAR_PIVOT`.
fn factor_in_place(a: &mut [f64], m: usize) -> Option<f64> {
    let mut acc = 0.0;
    for j in 0..m {
        let p = a[j * m + j];
        if !(p > SINGULAR_PIVOT) {
            return None;
        }
        acc += p.ln();
        let s = p.sqrt();
        let (done, rest) = a.split_at_mut((j + 1) * m);
        let rj = &mut done[j * m..];
        rj[j] = s;
        for x in &mut rj[j + 1..] {
            *x /= s;
        }
        for i in j + 1..m {
            let r = rj[i];
            if r == 0.0 {
                continue;
            }
            let row = &mut rest[(i - j - 1) * m..(i - j) * m];
            for (x, &y) in row[i..].iter_mut().zip(&rj[i..]) {
                *x -= r * y;
            }
        }
    }
    Some(acc)
}

fn log_det_buffer(mut a: Vec<f64>, m: usize) -> f64 {
    factor_in_place(&mut a, m).unwrap_or(f64::NEG_INFINITY)
}

/// `ln det L[set]` of an explicit symmetric matrix; `ln det` of the empty
/// set is 0 and a singular submatrix gives `−∞`.
pub fn log_det(l: &DenseMatrix, set: &[usize]) -> Result<f64> {
    for &i in set {
        if i >= l.rows() || i >= l.cols() {
            return Err(DppError::IndexOutOfRange {
                index: i,
                len: l.rows().min(l.cols()),
            });
        }
    }
    let sub = l.principal(set);
    let (diff, i, j) = sub.asymmetry();
    let scale = sub.as_slice().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if diff > 1e-10 * scale {
        return Err(DppError::Asymmetric {
            i: set[i],
            j: set[j],
            diff,
        });
    }
    Ok(log_det_buffer(sub.into_vec(), set.len()))
}

/// `ln det L[set]` reading entries from a kernel.
pub fn log_det_kernel<K: Kernel + ?Sized>(kernel: &K, set: &[usize]) -> f64 {
    let m = set.len();
    let mut a = vec![0.0; m * m];
    for (r, &i) in set.iter().enumerate() {
        for (c, &j) in set.iter().enumerate().take(r + 1) {
            let v = if r == c {
                kernel.diag(i)
            } else {
                kernel.entry(i, j)
            };
            a[r * m + c] = v;
            a[c * m + r] = v;
        }
    }
    log_det_buffer(a, m)
}

/// Feasible sets for [`exhaustive_map`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cardinality {
    AtMost(usize),
    Unconstrained,
}

/// The set maximizing `ln det L[S]` by enumerating every feasible subset,
/// the empty set included. Ties go to the lexicographically smallest sorted
/// index list.
pub fn exhaustive_map<K: Kernel + ?Sized>(
    kernel: &K,
    card: Cardinality,
) -> Result<(Vec<usize>, f64)> {
    let n = kernel.len();
    if n > EXHAUSTIVE_LIMIT {
        return Err(DppError::TooLarge {
            n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let cap = match card {
        Cardinality::AtMost(k) => k.min(n),
        Cardinality::Unconstrained => n,
    };
    let mut best = (Vec::new(), 0.0);
    let mut current = Vec::with_capacity(cap);
    // Depth-first in preorder visits sorted index lists lexicographically.
    fn visit<K: Kernel + ?Sized>(
        kernel: &K,
        from: usize,
        cap: usize,
        current: &mut Vec<usize>,
        best: &mut (Vec<usize>, f64),
    ) {
        for i in from..kernel.len() {
            current.push(i);
            let v = log_det_kernel(kernel, current);
            if v > best.1 {
                *best = (current.clone(), v);
            }
            if current.len() < cap {
                visit(kernel, i + 1, cap, current, best);
            }
            current.pop();
        }
    }
    if cap > 0 {
        visit(kernel, 0, cap, &mut current, &mut best);
    }
    Ok(best)
}

/// `L⁻¹` through a Cholesky factorization, symmetrized.
pub fn inverse(l: &DenseMatrix) -> Result<DenseMatrix> {
    if !l.is_square() {
        return Err(DppError::Shape(format!(
            "cannot invert a {}x{} matrix",
            l.rows(),
            l.cols()
        )));
    }
    let n = l.rows();
    let mut a = l.as_slice().to_vec();
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(l.get(i, i)));
    if factor_in_place(&mut a, n).is_none() {
        return Err(DppError::Singular(
            "Cholesky factorization hit a nonpositive pivot".into(),
        ));
    }
    if (0..n).any(|j| a[j * n + j] * a[j * n + j] <= 1e-13 * max_diag) {
        return Err(DppError::Singular(
            "kernel is numerically rank deficient".into(),
        ));
    }
    // V = R⁻¹, upper triangular, built from the bottom row up.
    let mut v = vec![0.0; n * n];
    for i in (0..n).rev() {
        let (head, tail) = v.split_at_mut((i + 1) * n);
        let vi = &mut head[i * n..];
        vi[i] = 1.0;
        for k in i + 1..n {
            let r = a[i * n + k];
            if r == 0.0 {
                continue;
            }
            let vk = &tail[(k - i - 1) * n..(k - i) * n];
            for (x, &y) in vi[k..].iter_mut().zip(&vk[k..]) {
                *x -= r * y;
            }
        }
        let d = a[i * n + i];
        for x in &mut vi[i..] {
            *x /= d;
        }
    }
    // L⁻¹ = V Vᵀ, a block of rows of V at a time so each row j is reused.
    const IB: usize = 32;
    let mut inv = vec![0.0; n * n];
    for i0 in (0..n).step_by(IB) {
        let i1 = (i0 + IB).min(n);
        for j in i0..n {
            let vj = &v[j * n..(j + 1) * n];
            for i in i0..i1.min(j + 1) {
                let s = dense_dot(&v[i * n + j..(i + 1) * n], &vj[j..]);
                inv[i * n + j] = s;
                inv[j * n + i] = s;
            }
        }
    }
    DenseMatrix::from_vec(n, n, inv)
}

/// Every item not in `set`, with its gain `ln det L[set ∪ {i}] − base`,
/// sorted by gain descending, then index ascending.
fn ranked_gains<K: Kernel + ?Sized>(
    kernel: &K,
    set: &mut Vec<usize>,
    base: f64,
    candidates: impl Iterator<Item = usize>,
) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = candidates
        .map(|i| {
            set.push(i);
            let v = log_det_kernel(kernel, set);
            set.pop();
            (i, v - base)
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

fn finish(
    report: &mut RunReport,
    kernel: &Counted<'_, impl Kernel + ?Sized>,
    start: std::time::Instant,
) {
    report.kernel_evals = kernel.evals();
    report.timings.greedy_ms = elapsed_ms(start);
    report.timings.total_ms = report.timings.greedy_ms;
}

/// RandomGreedy with every gain recomputed: sort the complement by gain and
/// take the item of rank `l` if its gain is positive.
pub fn naive_random_greedy<K: Kernel + ?Sized>(
    kernel: &K,
    cfg: &VariantConfig,
    stream: &mut DecisionStream,
) -> Result<RunReport> {
    let n = kernel.len();
    let k = cfg.k;
    require_ground_set(n, k, 2, "RandomGreedy")?;
    let start = std::time::Instant::now();
    let kernel = Counted::new(kernel);
    let mut report = RunReport::new("random-naive", n, Some(k));
    let mut set = Vec::with_capacity(k);
    let mut selected = vec![false; n];
    let mut current = 0.0;
    let mut draws = Vec::with_capacity(k);
    let mut idle = Vec::new();
    let mut zero_gain = 0;
    for t in 0..k {
        if cfg.deadline.passed() {
            report.termination = Termination::Timeout;
            break;
        }
        report.t_stop = t + 1;
        let rank = stream.uniform_inclusive(1, k);
        draws.push(rank);
        let ranked = ranked_gains(&kernel, &mut set, current, (0..n).filter(|&i| !selected[i]));
        let (i, gain) = ranked[rank - 1];
        if gain > 0.0 {
            selected[i] = true;
            set.push(i);
            current = log_det_kernel(&kernel, &set);
            report.objective.push(current);
        } else {
            if gain == 0.0 {
                zero_gain += 1;
            }
            idle.push(t);
        }
    }
    report.selection = set;
    report.extras.rank_draws = Some(draws);
    report.extras.idle_steps = Some(idle);
    report.extras.zero_gain_events = zero_gain;
    finish(&mut report, &kernel, start);
    Ok(report)
}

/// StochasticGreedy with every gain recomputed over the sampled set.
pub fn naive_stochastic_greedy<K: Kernel + ?Sized>(
    kernel: &K,
    cfg: &VariantConfig,
    stream: &mut DecisionStream,
) -> Result<RunReport> {
    let n = kernel.len();
    let k = cfg.k;
    require_ground_set(n, k, 3, "StochasticGreedy")?;
    require_epsilon(cfg.epsilon)?;
    let start = std::time::Instant::now();
    let kernel = Counted::new(kernel);
    let s = stochastic_sample_size(n, k, cfg.epsilon);
    let mut report = RunReport::new("stochastic-naive", n, Some(k));
    report.epsilon = Some(cfg.epsilon);
    let mut set = Vec::with_capacity(k);
    let mut complement: Vec<usize> = (0..n).collect();
    let mut current = 0.0;
    let mut idle = Vec::new();
    let mut zero_gain = 0;
    for t in 0..k {
        if cfg.deadline.passed() {
            report.termination = Termination::Timeout;
            break;
        }
        report.t_stop = t + 1;
        let sample = stream.sample_subset(&complement, s);
        let ranked = ranked_gains(&kernel, &mut set, current, sample.into_iter());
        let (i, gain) = ranked[0];
        if gain > 0.0 {
            set.push(i);
            complement.retain(|&x| x != i);
            current = log_det_kernel(&kernel, &set);
            report.objective.push(current);
        } else {
            if gain == 0.0 {
                zero_gain += 1;
            }
            idle.push(t);
        }
    }
    report.selection = set;
    report.extras.sample_size = Some(s);
    report.extras.idle_steps = Some(idle);
    report.extras.zero_gain_events = zero_gain;
    finish(&mut report, &kernel, start);
    Ok(report)
}

fn naive_interlaced<K: Kernel + ?Sized>(
    kernel: &K,
    k: usize,
    first: Option<usize>,
) -> (SequenceRecord, SequenceRecord) {
    let n = kernel.len();
    let mut sides = [SequenceRecord::default(), SequenceRecord::default()];
    let mut values = [0.0f64; 2];
    let mut taken = vec![false; n];
    for side in sides.iter_mut() {
        side.sizes.push(0);
    }
    let mut t0 = 1;
    if let Some(j) = first {
        taken[j] = true;
        let v = log_det_kernel(kernel, &[j]);
        for (x, side) in sides.iter_mut().enumerate() {
            side.seq.push(j);
            side.prefix_values.push(v);
            side.sizes.push(1);
            values[x] = v;
        }
        t0 = 2;
    }
    for _ in t0..=k {
        for x in 0..2 {
            let side = &mut sides[x];
            let ranked = ranked_gains(
                kernel,
                &mut side.seq,
                values[x],
                (0..n).filter(|&i| !taken[i]),
            );
            if let Some(&(i, gain)) = ranked.first() {
                if gain >= 0.0 {
                    taken[i] = true;
                    side.seq.push(i);
                    values[x] = log_det_kernel(kernel, &side.seq);
                    side.prefix_values.push(values[x]);
                }
            }
            side.sizes.push(side.seq.len());
        }
    }
    let [a, b] = sides;
    (a, b)
}

/// InterlaceGreedy with every gain recomputed.
pub fn naive_interlace_greedy<K: Kernel + ?Sized>(
    kernel: &K,
    cfg: &VariantConfig,
) -> Result<RunReport> {
    let n = kernel.len();
    let k = cfg.k;
    require_ground_set(n, k, 4, "InterlaceGreedy")?;
    let start = std::time::Instant::now();
    let kernel = Counted::new(kernel);
    let mut report = RunReport::new("interlace-naive", n, Some(k));
    let (a, b) = naive_interlaced(&kernel, k, None);
    let (c, d) = match a.seq.first() {
        Some(&j) => naive_interlaced(&kernel, k, Some(j)),
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
    finish(&mut report, &kernel, start);
    Ok(report)
}

/// Prefix objectives of an interlace trace recomputed from scratch.
pub fn recompute_prefix_objectives<K: Kernel + ?Sized>(
    kernel: &K,
    trace: &InterlaceTrace,
) -> [Vec<f64>; 4] {
    std::array::from_fn(|x| {
        trace.sizes[x]
            .iter()
            .map(|&m| log_det_kernel(kernel, &trace.sequences[x][..m]))
            .collect()
    })
}
