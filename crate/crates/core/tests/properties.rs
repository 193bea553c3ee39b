//! Randomized invariants, each checked against a naive model.

use dppmap::cholesky::CholeskyState;
use dppmap::greedy::{fast_greedy, lazy_fast_greedy, lazy_greedy, naive_greedy, GreedyConfig};
use dppmap::io::{
    read_dense, read_dense_csv, read_sparse, write_dense, write_dense_csv, write_sparse,
};
use dppmap::pqueue::LazyMaxQueue;
use dppmap::reference::{exhaustive_map, log_det, Cardinality};
use dppmap::{DenseMatrix, Kernel, KernelOracle, SparseColumns};
use proptest::prelude::*;

fn features(max_d: usize, max_n: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_d, 1..=max_n).prop_flat_map(|(d, n)| {
        prop::collection::vec(-2.0f64..2.0, d * n)
            .prop_map(move |v| DenseMatrix::from_vec(d, n, v).unwrap())
    })
}

/// Features with roughly half the entries zeroed, so sparse paths see gaps.
fn sparse_features() -> impl Strategy<Value = DenseMatrix> {
    (1..=11usize, 1..=10usize).prop_flat_map(|(d, n)| {
        prop::collection::vec(prop_oneof![Just(0.0), -3.0f64..3.0], d * n)
            .prop_map(move |v| DenseMatrix::from_vec(d, n, v).unwrap())
    })
}

/// Determinant by cofactor expansion along the first row.
fn cofactor_det(m: &DenseMatrix) -> f64 {
    let n = m.rows();
    if n == 0 {
        return 1.0;
    }
    (0..n)
        .map(|j| {
            let rest: Vec<usize> = (1..n).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
            let minor = DenseMatrix::from_rows(
                &rest
                    .iter()
                    .map(|&r| cols.iter().map(|&c| m.get(r, c)).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            )
            .unwrap_or_else(|_| DenseMatrix::zeros(0, 0));
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * m.get(0, j) * cofactor_det(&minor)
        })
        .sum()
}

#[derive(Clone, Debug)]
enum QueueOp {
    Push(usize, f64),
    Exclude(usize),
    Pop,
}

fn queue_ops(n: usize) -> impl Strategy<Value = Vec<QueueOp>> {
    let op = prop_oneof![
        3 => (0..n, prop_oneof![-5.0f64..5.0, Just(1.0)]).prop_map(|(i, k)| QueueOp::Push(i, k)),
        1 => (0..n).prop_map(QueueOp::Exclude),
        2 => Just(QueueOp::Pop),
    ];
    prop::collection::vec(op, 0..60)
}

proptest! {
    #[test]
    fn queue_matches_linear_scan(init in prop::collection::vec(-5.0f64..5.0, 1..12), ops in queue_ops(12)) {
        let n = init.len();
        let mut q = LazyMaxQueue::build(&init);
        let mut model: Vec<Option<f64>> = init.iter().copied().map(Some).collect();
        let mut dead = vec![false; n];
        for op in ops {
            match op {
                QueueOp::Push(i, k) if i < n => { q.push(i, k); model[i] = Some(k); }
                QueueOp::Exclude(i) if i < n => { q.exclude(i); dead[i] = true; }
                QueueOp::Pop => {
                    let best = (0..n)
                        .filter(|&i| !dead[i])
                        .filter_map(|i| model[i].map(|k| (i, k)))
                        .fold(None, |acc: Option<(usize, f64)>, (i, k)| match acc {
                            Some((_, bk)) if bk >= k => acc,
                            _ => Some((i, k)),
                        });
                    prop_assert_eq!(q.try_pop_max(), best);
                    if let Some((i, _)) = best { model[i] = None; }
                }
                _ => {}
            }
        }
    }

    #[test]
    fn gain_matches_log_det_difference(b in features(5, 8), order in prop::collection::vec(0usize..8, 1..6)) {
        let k = KernelOracle::from_features(&b).with_transform(1.0, 0.5).unwrap();
        let l = k.materialize();
        let mut st = CholeskyState::new(&k);
        for i in order.into_iter().filter(|&i| i < k.n()) {
            if st.is_selected(i) { continue; }
            let d = st.update_row(i, &k).unwrap();
            let before = log_det(&l, st.selection()).unwrap();
            let mut with_i = st.selection().to_vec();
            with_i.push(i);
            let after = log_det(&l, &with_i).unwrap();
            prop_assert!((2.0 * d.ln() - (after - before)).abs() < 1e-9);
            // Pythagorean identity: pivot² + ‖row‖² = L_ii.
            let row_sq: f64 = st.row(i).iter().map(|x| x * x).sum();
            prop_assert!((d * d + row_sq - l.get(i, i)).abs() <= 1e-9 * l.get(i, i).max(1.0));
            st.commit(i).unwrap();
            prop_assert!((st.objective() - after).abs() < 1e-9);
        }
    }

    #[test]
    fn lazy_and_eager_rows_agree(b in features(4, 9), sel in prop::collection::vec(0usize..9, 1..5), probe in 0usize..9) {
        let k = KernelOracle::from_features(&b).with_transform(1.0, 0.2).unwrap();
        let n = k.n();
        let probe = probe % n;
        let mut eager = CholeskyState::new(&k);
        let mut lazy = CholeskyState::new(&k);
        for &s in &sel {
            let s = s % n;
            if s == probe || eager.is_selected(s) { continue; }
            eager.update_row(s, &k).unwrap();
            eager.update_row(probe, &k).unwrap();
            eager.commit(s).unwrap();
            lazy.update_row(s, &k).unwrap();
            lazy.commit(s).unwrap();
        }
        let de = eager.update_row(probe, &k).unwrap();
        let dl = lazy.update_row(probe, &k).unwrap();
        prop_assert_eq!(de.to_bits(), dl.to_bits());
        prop_assert_eq!(eager.row(probe), lazy.row(probe));
    }

    #[test]
    fn sparse_and_dense_kernels_agree(b in sparse_features()) {
        let dense = KernelOracle::from_features(&b);
        let sparse = KernelOracle::from_sparse(SparseColumns::from_dense(&b));
        let n = b.cols();
        for i in 0..n {
            for j in 0..n {
                let brute: f64 = (0..b.rows()).map(|r| b.get(r, i) * b.get(r, j)).sum();
                prop_assert!((dense.entry(i, j) - brute).abs() < 1e-12);
                prop_assert!((sparse.entry(i, j) - brute).abs() < 1e-12);
                prop_assert_eq!(dense.entry(i, j).to_bits(), sparse.entry(i, j).to_bits());
                prop_assert_eq!(dense.entry(i, j), dense.entry(j, i));
            }
        }
    }

    #[test]
    fn leading_minors_are_nonnegative(b in features(6, 6)) {
        let l = KernelOracle::from_features(&b).with_transform(1.0, 1e-3).unwrap().materialize();
        for m in 1..=l.rows() {
            let idx: Vec<usize> = (0..m).collect();
            prop_assert!(cofactor_det(&l.principal(&idx)) > -1e-9);
        }
    }

    #[test]
    fn log_det_matches_cofactors(b in features(5, 6), set in prop::collection::btree_set(0usize..6, 0..=4)) {
        let l = KernelOracle::from_features(&b).with_transform(1.0, 0.3).unwrap().materialize();
        let set: Vec<usize> = set.into_iter().filter(|&i| i < l.rows()).collect();
        let expect = cofactor_det(&l.principal(&set)).ln();
        prop_assert!((log_det(&l, &set).unwrap() - expect).abs() < 1e-8);
    }

    #[test]
    fn all_greedy_flavours_agree(b in features(4, 12), k in 1usize..6) {
        let kern = KernelOracle::from_features(&b).with_transform(1.0, 0.5).unwrap();
        let k = k.min(kern.n());
        let cfg = GreedyConfig::new(k);
        let base = naive_greedy(&kern, &cfg).unwrap();
        for r in [lazy_greedy(&kern, &cfg), fast_greedy(&kern, &cfg), lazy_fast_greedy(&kern, &cfg)] {
            let r = r.unwrap();
            prop_assert_eq!(&r.selection, &base.selection);
        }
        let fast = fast_greedy(&kern, &cfg).unwrap();
        let lf = lazy_fast_greedy(&kern, &cfg).unwrap();
        prop_assert!(lf.offdiag <= fast.offdiag);
    }

    #[test]
    fn greedy_never_beats_exhaustive(b in features(3, 8), k in 1usize..4) {
        let kern = KernelOracle::from_features(&b).with_transform(1.0, 0.5).unwrap();
        let k = k.min(kern.n());
        let (_, opt) = exhaustive_map(&kern, Cardinality::AtMost(k)).unwrap();
        let r = lazy_fast_greedy(&kern, &GreedyConfig::new(k)).unwrap();
        prop_assert!(r.objective_value() <= opt + 1e-9);
    }

    #[test]
    fn dense_binary_round_trip(b in features(5, 7)) {
        let mut buf = Vec::new();
        write_dense(&mut buf, &b).unwrap();
        prop_assert_eq!(read_dense(buf.as_slice()).unwrap(), b);
    }

    #[test]
    fn dense_csv_round_trip(b in features(5, 7)) {
        let mut buf = Vec::new();
        write_dense_csv(&mut buf, &b).unwrap();
        prop_assert_eq!(read_dense_csv(buf.as_slice()).unwrap(), b);
    }

    #[test]
    fn sparse_binary_round_trip(b in sparse_features()) {
        let s = SparseColumns::from_dense(&b);
        let mut buf = Vec::new();
        write_sparse(&mut buf, &s).unwrap();
        let back = read_sparse(buf.as_slice()).unwrap();
        prop_assert_eq!(back.nnz(), s.nnz());
        prop_assert_eq!(back.to_dense(), b);
    }
}
