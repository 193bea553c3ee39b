//! Greedy MAP inference for determinantal point processes.
//!
//! The objective is `f(S) = ln det L[S]` for a PSD kernel `L`, given either
//! explicitly or as `L = BᵀB` from a `d × n` feature matrix. The crate
//! implements the lazy + fast greedy family: a row-wise incremental Cholesky
//! factor ([`cholesky`]) gives every marginal gain as `2 ln dᵢ`, and a queue of
//! stale pivots ([`pqueue`]) decides which rows are worth bringing up to date.
//!
//! ```
//! use dppmap::{greedy::{lazy_fast_greedy, GreedyConfig}, DenseMatrix, KernelOracle};
//!
//! let l = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 4.0]])?;
//! let kernel = KernelOracle::from_kernel(l)?;
//! let run = lazy_fast_greedy(&kernel, &GreedyConfig::new(2))?;
//! assert_eq!(run.selection, vec![0, 1]);
//! assert!((run.objective_value() - 12f64.ln()).abs() < 1e-12);
//! # Ok::<(), dppmap::DppError>(())
//! ```

pub mod algo;
pub mod cholesky;
pub mod datagen;
pub mod doublegreedy;
mod error;
pub mod greedy;
pub mod io;
pub mod kernel;
mod matrix;
pub mod pqueue;
pub mod reference;
pub mod report;
pub mod stream;
pub mod variants;
pub mod verify;

pub use error::{DppError, Result};
pub use kernel::{Kernel, KernelOracle, SparseColumns};
pub use matrix::DenseMatrix;
pub use report::{RunReport, Termination};
pub use stream::DecisionStream;
