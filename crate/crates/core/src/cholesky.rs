//! Row-wise incremental Cholesky factor.
//!
//! For a selection sequence `S = (j₁, …, j_m)` the factor `V` satisfies
//! `L[S ∪ {i}] = [V[S]; V[i,S] dᵢ] [V[S]; V[i,S] dᵢ]ᵀ` once row `i` is filled
//! up to column `m`, and then `2·ln dᵢ = ln det L[S ∪ {i}] − ln det L[S]`.
//!
//! Each row is filled independently of the others: computing `V[i, j_t]`
//! needs only row `i`'s first `t−1` entries, the already final row `j_t`,
//! and the pivot `d_{j_t}` frozen when `j_t` was selected. That is what lets
//! the lazy algorithms postpone a row until it reaches the top of a queue.
//!
//! Rows are stored as separate growable arrays so that filling one row
//! touches contiguous memory only.

use crate::error::{DppError, Result};
use crate::kernel::Kernel;

/// Smallest pivot that may be committed or divided by.
pub const PIVOT_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct CholeskyState {
    /// `rows[i]` holds `V[i, j₁..j_{uᵢ}]`; its length is the stamp `uᵢ`.
    rows: Vec<Vec<f64>>,
    /// Current `dᵢ`. `+∞` marks a row whose diagonal has not been read yet.
    pivots: Vec<f64>,
    selected: Vec<bool>,
    selection: Vec<usize>,
    /// `d_{j_t}` frozen at the time `j_t` was committed.
    pivot_log: Vec<f64>,
    /// Prefix sums of `2·ln pivot_log[t]`.
    objective: Vec<f64>,
    offdiag: u64,
}

impl CholeskyState {
    /// Reads all diagonals up front: `dᵢ = √L[i,i]`.
    pub fn new<K: Kernel + ?Sized>(kernel: &K) -> Self {
        let diag = (0..kernel.len())
            .map(|i| kernel.diag(i).max(0.0).sqrt())
            .collect();
        Self::from_pivots(diag)
    }

    /// Starts from given initial pivots `dᵢ = √L[i,i]`.
    pub fn from_pivots(pivots: Vec<f64>) -> Self {
        let n = pivots.len();
        Self {
            rows: vec![Vec::new(); n],
            pivots,
            selected: vec![false; n],
            selection: Vec::new(),
            pivot_log: Vec::new(),
            objective: Vec::new(),
            offdiag: 0,
        }
    }

    /// Leaves every diagonal unread; see [`CholeskyState::ensure_pivot`].
    pub fn deferred(n: usize) -> Self {
        Self::from_pivots(vec![f64::INFINITY; n])
    }

    /// Reads `L[i,i]` if row `i` has not been initialized yet.
    pub fn ensure_pivot<K: Kernel + ?Sized>(&mut self, i: usize, kernel: &K) -> f64 {
        if self.pivots[i] == f64::INFINITY {
            self.pivots[i] = kernel.diag(i).max(0.0).sqrt();
        }
        self.pivots[i]
    }

    pub fn n(&self) -> usize {
        self.pivots.len()
    }

    pub fn selection(&self) -> &[usize] {
        &self.selection
    }

    pub fn len(&self) -> usize {
        self.selection.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selection.is_empty()
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.selected[i]
    }

    /// `uᵢ`: how many leading selection columns of row `i` are filled.
    pub fn stamp(&self, i: usize) -> usize {
        self.rows[i].len()
    }

    pub fn is_fresh(&self, i: usize) -> bool {
        self.rows[i].len() == self.selection.len()
    }

    pub fn pivot(&self, i: usize) -> f64 {
        self.pivots[i]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn pivot_log(&self) -> &[f64] {
        &self.pivot_log
    }

    /// `ln det L[S^(t)]` for `t = 1..=|S|`.
    pub fn objective_trace(&self) -> &[f64] {
        &self.objective
    }

    /// `ln det L[S]`, 0 for the empty selection.
    pub fn objective(&self) -> f64 {
        self.objective.last().copied().unwrap_or(0.0)
    }

    /// Number of off-diagonal entries computed so far (`U`).
    pub fn offdiag_count(&self) -> u64 {
        self.offdiag
    }

    /// Fills row `i` up to the current selection and returns the new `dᵢ`.
    ///
    /// A no-op when the row is already fresh. The row of a selected item is
    /// final and may not be extended.
    pub fn update_row<K: Kernel + ?Sized>(&mut self, i: usize, kernel: &K) -> Result<f64> {
        if self.selected[i] {
            return Err(DppError::AlreadySelected(i));
        }
        let mut d = self.ensure_pivot(i, kernel);
        let m = self.selection.len();
        let start = self.rows[i].len();
        if start == m {
            return Ok(d);
        }
        let mut row = std::mem::take(&mut self.rows[i]);
        row.reserve(m - start);
        for t in start..m {
            let j = self.selection[t];
            let pivot = self.pivot_log[t];
            if pivot < PIVOT_FLOOR {
                self.rows[i] = row;
                return Err(DppError::SingularPivot { position: t, pivot });
            }
            let other = &self.rows[j][..t];
            let mut dot = 0.0;
            for (a, b) in row.iter().zip(other) {
                dot += a * b;
            }
            let v = (kernel.entry(i, j) - dot) / pivot;
            row.push(v);
            d = (d * d - v * v).max(0.0).sqrt();
        }
        self.offdiag += (m - start) as u64;
        self.rows[i] = row;
        self.pivots[i] = d;
        Ok(d)
    }

    /// `f_i(S) = 2·ln dᵢ` for a fresh row; `−∞` when `dᵢ = 0`.
    pub fn marginal_gain(&self, i: usize) -> Result<f64> {
        if !self.is_fresh(i) {
            return Err(DppError::StaleRow {
                row: i,
                filled: self.rows[i].len(),
                selected: self.selection.len(),
            });
        }
        let d = self.pivots[i];
        Ok(if d == 0.0 {
            f64::NEG_INFINITY
        } else {
            2.0 * d.ln()
        })
    }

    /// Appends a fresh row `i` to the selection and returns its position.
    pub fn commit(&mut self, i: usize) -> Result<usize> {
        if self.selected[i] {
            return Err(DppError::AlreadySelected(i));
        }
        if !self.is_fresh(i) {
            return Err(DppError::StaleRow {
                row: i,
                filled: self.rows[i].len(),
                selected: self.selection.len(),
            });
        }
        let d = self.pivots[i];
        let t = self.selection.len();
        if !(d > PIVOT_FLOOR) || !d.is_finite() {
            return Err(DppError::SingularPivot {
                position: t,
                pivot: d,
            });
        }
        self.selected[i] = true;
        self.selection.push(i);
        self.pivot_log.push(d);
        self.objective.push(self.objective() + 2.0 * d.ln());
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelOracle;
    use crate::matrix::DenseMatrix;

    fn two_by_two() -> KernelOracle {
        KernelOracle::from_kernel(DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 4.0]]).unwrap())
            .unwrap()
    }

    #[test]
    fn update_row_on_two_by_two() {
        let k = two_by_two();
        let mut st = CholeskyState::new(&k);
        assert_eq!(st.pivot(1), 2.0);
        st.commit(0).unwrap();
        let d = st.update_row(1, &k).unwrap();
        assert_eq!(st.row(1), &[1.0]);
        assert!((d - 3f64.sqrt()).abs() < 1e-15);
        assert!((st.marginal_gain(1).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(st.offdiag_count(), 1);
    }

    #[test]
    fn orthogonal_items_keep_unit_pivots() {
        let k = KernelOracle::from_kernel(DenseMatrix::identity(4)).unwrap();
        let mut st = CholeskyState::new(&k);
        st.commit(0).unwrap();
        for i in 1..4 {
            assert_eq!(st.update_row(i, &k).unwrap(), 1.0);
            assert_eq!(st.row(i), &[0.0]);
        }
    }

    #[test]
    fn fresh_row_update_is_noop() {
        let k = two_by_two();
        let mut st = CholeskyState::new(&k);
        st.commit(0).unwrap();
        st.update_row(1, &k).unwrap();
        let before = (st.pivot(1), st.offdiag_count());
        st.update_row(1, &k).unwrap();
        assert_eq!((st.pivot(1), st.offdiag_count()), before);
    }

    #[test]
    fn marginal_gain_boundaries() {
        let mut st = CholeskyState::from_pivots(vec![1.0, 3f64.sqrt(), 0.0]);
        assert_eq!(st.marginal_gain(0).unwrap(), 0.0);
        assert!((st.marginal_gain(1).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(st.marginal_gain(2).unwrap(), f64::NEG_INFINITY);
        st.commit(1).unwrap();
        assert!(matches!(
            st.marginal_gain(0),
            Err(DppError::StaleRow { .. })
        ));
    }

    #[test]
    fn commit_builds_objective_trace() {
        let k = two_by_two();
        let mut st = CholeskyState::new(&k);
        assert_eq!(st.commit(0).unwrap(), 0);
        assert!((st.objective() - 4f64.ln()).abs() < 1e-15);
        st.update_row(1, &k).unwrap();
        assert_eq!(st.commit(1).unwrap(), 1);
        let trace = st.objective_trace();
        assert!((trace[0] - 4f64.ln()).abs() < 1e-15);
        assert!((trace[1] - 12f64.ln()).abs() < 1e-14);
        assert_eq!(st.selection(), &[0, 1]);
    }

    #[test]
    fn commit_rejects_stale_selected_and_singular() {
        let k = two_by_two();
        let mut st = CholeskyState::new(&k);
        st.commit(0).unwrap();
        assert!(matches!(st.commit(1), Err(DppError::StaleRow { .. })));
        assert!(matches!(st.commit(0), Err(DppError::AlreadySelected(0))));
        assert!(matches!(
            st.update_row(0, &k),
            Err(DppError::AlreadySelected(0))
        ));

        let mut z = CholeskyState::from_pivots(vec![0.0, 1.0]);
        assert!(matches!(z.commit(0), Err(DppError::SingularPivot { .. })));
    }

    #[test]
    fn dependent_item_pivot_collapses() {
        // φ₁ = 2φ₀: row 1 becomes exactly dependent after selecting 0.
        let b = DenseMatrix::from_rows(&[[1.0, 2.0], [1.0, 2.0]]).unwrap();
        let k = KernelOracle::from_features(&b);
        let mut st = CholeskyState::new(&k);
        st.commit(0).unwrap();
        // Cancellation leaves a pivot at the square root of rounding noise.
        let d = st.update_row(1, &k).unwrap();
        assert!(d < 1e-7, "{d}");
        assert!(st.marginal_gain(1).unwrap() < -30.0);
    }

    #[test]
    fn deferred_pivots_read_on_first_touch() {
        let k = two_by_two();
        let mut st = CholeskyState::deferred(2);
        assert_eq!(st.pivot(1), f64::INFINITY);
        assert_eq!(st.update_row(1, &k).unwrap(), 2.0);
        st.commit(1).unwrap();
        assert!((st.update_row(0, &k).unwrap() - 3f64.sqrt()).abs() < 1e-15);
    }
}
