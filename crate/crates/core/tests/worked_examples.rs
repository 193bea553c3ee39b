//! Small hand-checkable instances, each value recomputed here by an
//! independent route (closed-form determinants or brute force).

use dppmap::cholesky::CholeskyState;
use dppmap::doublegreedy::{fast_double_greedy, jacobi_gain_check, naive_double_greedy};
use dppmap::greedy::{fast_greedy, lazy_fast_greedy, lazy_greedy, naive_greedy, GreedyConfig};
use dppmap::kernel::{sparse_dot, SparseColumn};
use dppmap::pqueue::LazyMaxQueue;
use dppmap::reference::{
    exhaustive_map, inverse, log_det, naive_interlace_greedy, naive_stochastic_greedy, Cardinality,
};
use dppmap::report::Deadline;
use dppmap::variants::{interlace_greedy_lf, stochastic_greedy_lf, VariantConfig};
use dppmap::{DecisionStream, DenseMatrix, Kernel, KernelOracle};

fn two_by_two() -> DenseMatrix {
    DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 4.0]]).unwrap()
}

fn kernel(l: DenseMatrix) -> KernelOracle {
    KernelOracle::from_kernel(l).unwrap()
}

/// 2×2 determinant by the textbook formula.
fn det2(l: &DenseMatrix) -> f64 {
    l.get(0, 0) * l.get(1, 1) - l.get(0, 1) * l.get(1, 0)
}

#[test]
fn kernel_entries() {
    let b = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
    assert_eq!(KernelOracle::from_features(&b).entry(0, 1), 0.0);
    let b = DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, 1.0]]).unwrap();
    let k = KernelOracle::from_features(&b);
    assert_eq!(k.entry(0, 1), 2.0 * 1.0 + 0.0 * 1.0);
    assert_eq!(k.entry(1, 1), 1.0 + 1.0);
    let shifted = kernel(two_by_two()).with_transform(1.0, 0.1).unwrap();
    assert_eq!(shifted.entry(0, 0), 4.1);
    assert_eq!(shifted.entry(0, 1), 2.0);
}

#[test]
fn sparse_dots() {
    let col = |idx: &'static [u32], val: &'static [f64]| SparseColumn {
        indices: idx,
        values: val,
    };
    assert_eq!(sparse_dot(col(&[], &[]), col(&[3], &[1.0])), 0.0);
    assert_eq!(
        sparse_dot(col(&[1, 2], &[1.0, 1.0]), col(&[2, 5], &[1.0, 1.0])),
        1.0
    );
    assert_eq!(
        sparse_dot(col(&[0, 4], &[2.0, 3.0]), col(&[0, 4], &[2.0, 3.0])),
        2.0 * 2.0 + 3.0 * 3.0
    );
}

#[test]
fn update_row_matches_brute_force_gain() {
    let l = two_by_two();
    let k = kernel(l.clone());
    let mut st = CholeskyState::new(&k);
    st.commit(0).unwrap();
    let d = st.update_row(1, &k).unwrap();
    assert_eq!(st.row(1), &[l.get(1, 0) / l.get(0, 0).sqrt()]);
    let brute = det2(&l).ln() - l.get(0, 0).ln();
    assert!((2.0 * d.ln() - brute).abs() < 1e-15);
    assert!((d - 1.7320508075688772).abs() < 1e-15);
    st.commit(1).unwrap();
    let trace = st.objective_trace();
    assert!((trace[0] - 4f64.ln()).abs() < 1e-15);
    assert!((trace[1] - det2(&l).ln()).abs() < 1e-14);
    assert_eq!(st.offdiag_count(), 1);
}

#[test]
fn queue_examples() {
    let mut q = LazyMaxQueue::build(&[2.0, 2.0]);
    assert_eq!(q.pop_max().unwrap(), (0, 2.0));
    let mut q = LazyMaxQueue::new(2);
    q.push(1, 5.0);
    q.push(1, 3.0);
    assert_eq!(q.pop_max().unwrap(), (1, 3.0));
    let mut q = LazyMaxQueue::build(&[1.0, 4.0, 2.0]);
    q.exclude(1);
    assert_eq!(q.pop_max().unwrap(), (2, 2.0));
}

#[test]
fn greedy_examples() {
    let two_i = kernel(DenseMatrix::diagonal(&[2.0; 3]));
    let ident = kernel(DenseMatrix::identity(3));
    let l = kernel(two_by_two());
    type Algo = fn(&KernelOracle, &GreedyConfig) -> dppmap::Result<dppmap::RunReport>;
    for algo in [
        naive_greedy as Algo,
        lazy_greedy,
        fast_greedy,
        lazy_fast_greedy,
    ] {
        let r = algo(&two_i, &GreedyConfig::new(2)).unwrap();
        assert_eq!(r.selection, vec![0, 1]);
        assert!((r.objective_value() - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!(algo(&ident, &GreedyConfig::new(2))
            .unwrap()
            .selection
            .is_empty());
        let r = algo(&l, &GreedyConfig::new(2)).unwrap();
        assert_eq!(r.selection, vec![0, 1]);
        assert!((r.objective_value() - det2(&two_by_two()).ln()).abs() < 1e-14);
    }
}

#[test]
fn off_diagonal_counts() {
    let l = kernel(two_by_two());
    assert_eq!(fast_greedy(&l, &GreedyConfig::new(2)).unwrap().offdiag, 1);
    assert_eq!(
        lazy_fast_greedy(&l, &GreedyConfig::new(2)).unwrap().offdiag,
        1
    );

    // (k−1)(n−k/2) with n = k = 3, counted by hand: 2 rows after step 1,
    // 1 row after step 2.
    let two_i = kernel(DenseMatrix::diagonal(&[2.0; 3]));
    assert_eq!(
        fast_greedy(&two_i, &GreedyConfig::new(3)).unwrap().offdiag,
        2 + 1
    );

    let diag = kernel(DenseMatrix::diagonal(&[1.5, 3.0, 2.5, 0.2]));
    for algo in [fast_greedy, lazy_fast_greedy] {
        let r = algo(&diag, &GreedyConfig::new(1)).unwrap();
        assert_eq!((r.selection.clone(), r.offdiag), (vec![1], 0));
    }

    for (n, k) in [(6, 3), (10, 10), (9, 4)] {
        let r = lazy_fast_greedy(
            &kernel(DenseMatrix::diagonal(&vec![2.0; n])),
            &GreedyConfig::new(k),
        )
        .unwrap();
        assert_eq!(r.selection, (0..k).collect::<Vec<_>>());
        assert_eq!(r.offdiag as usize, k * (k - 1) / 2);
    }
}

#[test]
fn stochastic_with_full_sample_equals_greedy() {
    let b = dppmap::datagen::gen_synthetic(&dppmap::datagen::SyntheticSpec::square(12, 3)).unwrap();
    let k = KernelOracle::from_features(&b);
    let cfg = VariantConfig::new(3).with_epsilon(1e-12);
    let greedy = naive_greedy(&k, &GreedyConfig::new(3)).unwrap();
    let naive = naive_stochastic_greedy(&k, &cfg, &mut DecisionStream::new(0)).unwrap();
    let lf = stochastic_greedy_lf(&k, &cfg, &mut DecisionStream::new(0)).unwrap();
    assert_eq!(naive.selection, greedy.selection);
    assert_eq!(lf.selection, greedy.selection);
}

#[test]
fn interlace_on_scaled_identity_matches_reference() {
    let k = kernel(DenseMatrix::diagonal(&[2.0; 8]));
    let cfg = VariantConfig::new(2);
    let lf = interlace_greedy_lf(&k, &cfg).unwrap();
    let naive = naive_interlace_greedy(&k, &cfg).unwrap();
    assert_eq!(lf.selection, naive.selection);
    assert_eq!(
        lf.extras.interlace.unwrap().sequences,
        naive.extras.interlace.unwrap().sequences
    );
}

#[test]
fn complementary_minor_examples() {
    let l = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
    let inv = inverse(&l).unwrap();
    let hand = DenseMatrix::from_rows(&[[2.0 / 3.0, -1.0 / 3.0], [-1.0 / 3.0, 2.0 / 3.0]]).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((inv.get(i, j) - hand.get(i, j)).abs() < 1e-15);
        }
    }
    assert!(l.matmul(&inv).unwrap().max_abs_dev_from_identity() <= 1e-12);
    let (lhs, rhs) = jacobi_gain_check(&l, &inv, &[], 0).unwrap();
    let expect = (2.0f64 / 3.0).ln();
    assert!((lhs - expect).abs() < 1e-14 && (rhs - expect).abs() < 1e-14);

    let c = 3.5;
    let l = DenseMatrix::diagonal(&[c; 4]);
    let inv = inverse(&l).unwrap();
    let (lhs, rhs) = jacobi_gain_check(&l, &inv, &[1, 3], 0).unwrap();
    assert!((lhs + c.ln()).abs() < 1e-14 && (rhs + c.ln()).abs() < 1e-14);
}

#[test]
fn double_greedy_examples() {
    let k = kernel(DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap());
    for seed in 0..5 {
        let r = fast_double_greedy(&k, &mut DecisionStream::new(seed), Deadline::none()).unwrap();
        assert_eq!(r.selection, vec![0, 1]);
        let tr = r.extras.double.unwrap();
        assert!((tr.gain_add[0] - 2f64.ln()).abs() < 1e-14);
        assert!((tr.gain_remove[0] - (2f64.ln() - 3f64.ln())).abs() < 1e-14);
        assert!((tr.gain_add[1] - 1.5f64.ln()).abs() < 1e-14);
        assert_eq!(tr.add_probability, vec![1.0, 1.0]);
    }
    let diag = kernel(DenseMatrix::diagonal(&[1.5, 2.0, 7.0, 1.01]));
    for seed in 0..5 {
        let fast =
            fast_double_greedy(&diag, &mut DecisionStream::new(seed), Deadline::none()).unwrap();
        let naive =
            naive_double_greedy(&diag, &mut DecisionStream::new(seed), Deadline::none()).unwrap();
        assert_eq!(fast.selection, vec![0, 1, 2, 3]);
        assert_eq!(naive.selection, vec![0, 1, 2, 3]);
    }
}

#[test]
fn reference_examples() {
    let l = two_by_two();
    assert_eq!(log_det(&l, &[]).unwrap(), 0.0);
    assert!((log_det(&l, &[0, 1]).unwrap() - 2.4849066497880004).abs() < 1e-14);
    let i5 = DenseMatrix::identity(5);
    assert_eq!(log_det(&i5, &[0, 2, 4]).unwrap(), 0.0);

    let (s, v) = exhaustive_map(&kernel(two_by_two()), Cardinality::AtMost(1)).unwrap();
    assert_eq!((s, v), (vec![0], 4f64.ln()));
    let (s, v) = exhaustive_map(
        &kernel(DenseMatrix::diagonal(&[2.0; 3])),
        Cardinality::Unconstrained,
    )
    .unwrap();
    assert_eq!(s, vec![0, 1, 2]);
    assert!((v - 3.0 * 2f64.ln()).abs() < 1e-15);
}

#[test]
fn synthetic_mean_is_near_zero() {
    let b =
        dppmap::datagen::gen_synthetic(&dppmap::datagen::SyntheticSpec::square(1000, 1)).unwrap();
    let mean = b.as_slice().iter().sum::<f64>() / 1e6;
    assert!(mean.abs() <= 3.0 / 1e3, "{mean}");
    let k = KernelOracle::from_features(&b);
    assert!((0..1000).all(|i| k.diag(i) > 0.0));
}
