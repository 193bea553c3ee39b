//! Kernel-entry access.
//!
//! A DPP kernel is either handed to us as a feature matrix `B` (`d × n`, one
//! column `φᵢ` per item, `L = BᵀB`), dense or sparse, or as a precomputed
//! `n × n` matrix `L`. Greedy algorithms only ever need individual entries
//! `L[i, j]`, so [`KernelOracle`] hides the representation behind [`Kernel`].
//!
//! Inner products sum in a fixed order (four lanes by feature index, each
//! ascending), which makes `entry(i, j)` bit-for-bit reproducible, exactly
//! symmetric, and identical between the dense and sparse feature layouts.
//!
//! An optional affine transform `scale · L + shift · I` is applied on access,
//! e.g. `0.9 · BᵀB + 0.1 · I` to keep double greedy well conditioned.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{DppError, Result};
use crate::matrix::DenseMatrix;

/// Read access to the entries of a symmetric PSD kernel.
pub trait Kernel {
    /// Number of items `n`.
    fn len(&self) -> usize;

    /// `L[i, j]`. Panics on out-of-range indices.
    fn entry(&self, i: usize, j: usize) -> f64;

    fn diag(&self, i: usize) -> f64 {
        self.entry(i, i)
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn len(&self) -> usize {
        (**self).len()
    }
    fn entry(&self, i: usize, j: usize) -> f64 {
        (**self).entry(i, j)
    }
    fn diag(&self, i: usize) -> f64 {
        (**self).diag(i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    BDense,
    BSparse,
    LDense,
}

/// Cost class of one `entry` call; informational only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryCost {
    /// Dense dot product over `d` features.
    Features(usize),
    /// Sparse merge over the nonzeros of two columns.
    Nonzeros,
    /// Direct lookup.
    Constant,
}

/// Borrowed view of one compressed sparse column.
#[derive(Clone, Copy, Debug)]
pub struct SparseColumn<'a> {
    pub indices: &'a [u32],
    pub values: &'a [f64],
}

impl SparseColumn<'_> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// Partial sums of a dot product. Feature `t` goes to lane `t % 4` and each
/// lane sums in ascending `t`, so the dense and sparse layouts agree bit for
/// bit while the dense loop still vectorizes.
const LANES: usize = 4;

#[inline]
fn fold_lanes(acc: [f64; LANES]) -> f64 {
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Σ a[t]·b[t] over equal-length slices.
#[inline]
pub fn dense_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; LANES];
    let (ca, cb) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    for (l, (x, y)) in ra.iter().zip(rb).enumerate() {
        acc[l] += x * y;
    }
    fold_lanes(acc)
}

/// Σ a[t]·b[t] over the shared support, merging the sorted index arrays.
pub fn sparse_dot(a: SparseColumn<'_>, b: SparseColumn<'_>) -> f64 {
    let (mut p, mut q) = (0, 0);
    let mut acc = [0.0; LANES];
    while p < a.indices.len() && q < b.indices.len() {
        match a.indices[p].cmp(&b.indices[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                acc[a.indices[p] as usize % LANES] += a.values[p] * b.values[q];
                p += 1;
                q += 1;
            }
        }
    }
    fold_lanes(acc)
}

/// Compressed sparse column storage of a `d × n` feature matrix.
///
/// Indices are strictly increasing within each column and no explicit zero
/// is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseColumns {
    d: usize,
    col_ptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseColumns {
    /// Builds from per-column `(feature index, value)` lists, which must be
    /// sorted by index. Zero values are dropped.
    pub fn from_columns(d: usize, columns: &[Vec<(u32, f64)>]) -> Result<Self> {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for (c, col) in columns.iter().enumerate() {
            let mut last: Option<u32> = None;
            for &(idx, v) in col {
                if idx as usize >= d {
                    return Err(DppError::Shape(format!(
                        "column {c}: feature index {idx} >= d = {d}"
                    )));
                }
                if last.is_some_and(|l| idx <= l) {
                    return Err(DppError::Shape(format!(
                        "column {c}: indices not strictly increasing at {idx}"
                    )));
                }
                if !v.is_finite() {
                    return Err(DppError::Shape(format!("column {c}: non-finite value")));
                }
                last = Some(idx);
                if v != 0.0 {
                    indices.push(idx);
                    values.push(v);
                }
            }
            col_ptr.push(indices.len());
        }
        Ok(Self {
            d,
            col_ptr,
            indices,
            values,
        })
    }

    /// Drops the zeros of a dense `d × n` feature matrix.
    pub fn from_dense(b: &DenseMatrix) -> Self {
        let (d, n) = (b.rows(), b.cols());
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for j in 0..n {
            for r in 0..d {
                let v = b.get(r, j);
                if v != 0.0 {
                    indices.push(r as u32);
                    values.push(v);
                }
            }
            col_ptr.push(indices.len());
        }
        Self {
            d,
            col_ptr,
            indices,
            values,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of columns (items).
    pub fn n(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn column(&self, j: usize) -> SparseColumn<'_> {
        let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
        SparseColumn {
            indices: &self.indices[lo..hi],
            values: &self.values[lo..hi],
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.d, self.n());
        for j in 0..self.n() {
            let c = self.column(j);
            for (&i, &v) in c.indices.iter().zip(c.values) {
                m.set(i as usize, j, v);
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
enum Storage {
    /// Feature columns stored contiguously: column `j` is `cols[j*d..(j+1)*d]`.
    BDense {
        d: usize,
        cols: Vec<f64>,
    },
    BSparse(SparseColumns),
    /// Row-major `n × n`.
    LDense(Vec<f64>),
}

/// Uniform, immutable access to `scale · L + shift · I` for any input setting.
#[derive(Clone, Debug)]
pub struct KernelOracle {
    n: usize,
    storage: Storage,
    scale: f64,
    shift: f64,
}

impl KernelOracle {
    /// B-input from a dense `d × n` feature matrix (items are columns).
    pub fn from_features(b: &DenseMatrix) -> Self {
        let (d, n) = (b.rows(), b.cols());
        let cols = b.transpose().into_vec();
        Self {
            n,
            storage: Storage::BDense { d, cols },
            scale: 1.0,
            shift: 0.0,
        }
    }

    /// B-input from sparse feature columns.
    pub fn from_sparse(b: SparseColumns) -> Self {
        Self {
            n: b.n(),
            storage: Storage::BSparse(b),
            scale: 1.0,
            shift: 0.0,
        }
    }

    /// L-input from a precomputed kernel. The matrix must be square and
    /// symmetric up to `1e-10` relative; it is then symmetrized exactly.
    pub fn from_kernel(l: DenseMatrix) -> Result<Self> {
        if !l.is_square() {
            return Err(DppError::Shape(format!(
                "kernel must be square, got {}x{}",
                l.rows(),
                l.cols()
            )));
        }
        let n = l.rows();
        let scale = l.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let (diff, i, j) = l.asymmetry();
        if diff > 1e-10 * scale {
            return Err(DppError::Asymmetric { i, j, diff });
        }
        let mut data = l.into_vec();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        for i in 0..n {
            if data[i * n + i] < 0.0 {
                return Err(DppError::Shape(format!(
                    "negative diagonal entry {} at {i}",
                    data[i * n + i]
                )));
            }
        }
        Ok(Self {
            n,
            storage: Storage::LDense(data),
            scale: 1.0,
            shift: 0.0,
        })
    }

    /// Reports `scale · L[i, j] + shift · [i = j]` from now on, `L` being the
    /// stored kernel. Replaces any earlier transform.
    pub fn with_transform(mut self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(DppError::Constraint(format!(
                "scale must be > 0, got {scale}"
            )));
        }
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(DppError::Constraint(format!(
                "shift must be >= 0, got {shift}"
            )));
        }
        self.scale = scale;
        self.shift = shift;
        Ok(self)
    }

    pub fn kind(&self) -> KernelKind {
        match self.storage {
            Storage::BDense { .. } => KernelKind::BDense,
            Storage::BSparse(_) => KernelKind::BSparse,
            Storage::LDense(_) => KernelKind::LDense,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Feature dimension; 0 for L-input.
    pub fn d(&self) -> usize {
        match &self.storage {
            Storage::BDense { d, .. } => *d,
            Storage::BSparse(s) => s.d(),
            Storage::LDense(_) => 0,
        }
    }

    pub fn cost(&self) -> EntryCost {
        match &self.storage {
            Storage::BDense { d, .. } => EntryCost::Features(*d),
            Storage::BSparse(_) => EntryCost::Nonzeros,
            Storage::LDense(_) => EntryCost::Constant,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Bounds-checked [`Kernel::entry`].
    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        for idx in [i, j] {
            if idx >= self.n {
                return Err(DppError::IndexOutOfRange {
                    index: idx,
                    len: self.n,
                });
            }
        }
        Ok(self.entry(i, j))
    }

    #[inline]
    fn raw(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::BDense { d, cols } => {
                dense_dot(&cols[i * d..(i + 1) * d], &cols[j * d..(j + 1) * d])
            }
            Storage::BSparse(s) => sparse_dot(s.column(i), s.column(j)),
            Storage::LDense(data) => data[i * self.n + j],
        }
    }

    /// Materializes the full (transformed) `n × n` kernel.
    pub fn materialize(&self) -> DenseMatrix {
        let n = self.n;
        // Blocks of rows so each column j is read once per block, not per row.
        const IB: usize = 32;
        let mut m = DenseMatrix::zeros(n, n);
        for i0 in (0..n).step_by(IB) {
            for j in i0..n {
                for i in i0..(i0 + IB).min(j + 1) {
                    let v = self.entry(i, j);
                    m.set(i, j, v);
                    m.set(j, i, v);
                }
            }
        }
        m
    }
}

impl Kernel for KernelOracle {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        let v = self.raw(i, j);
        let v = if self.scale == 1.0 { v } else { self.scale * v };
        if i == j && self.shift != 0.0 {
            v + self.shift
        } else {
            v
        }
    }
}

/// A square matrix read as an explicit kernel.
impl Kernel for DenseMatrix {
    fn len(&self) -> usize {
        self.rows()
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

/// Wraps a kernel and counts `entry`/`diag` calls for one run.
pub struct Counted<'a, K: ?Sized> {
    inner: &'a K,
    evals: Cell<u64>,
}

impl<'a, K: Kernel + ?Sized> Counted<'a, K> {
    pub fn new(inner: &'a K) -> Self {
        Self {
            inner,
            evals: Cell::new(0),
        }
    }

    pub fn evals(&self) -> u64 {
        self.evals.get()
    }
}

impl<K: Kernel + ?Sized> Kernel for Counted<'_, K> {
    fn len(&self) -> usize {
        self.inner.len()
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.evals.set(self.evals.get() + 1);
        self.inner.entry(i, j)
    }

    #[inline]
    fn diag(&self, i: usize) -> f64 {
        self.evals.set(self.evals.get() + 1);
        self.inner.diag(i)
    }
}
