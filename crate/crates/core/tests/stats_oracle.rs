mod common;

use maxcorr::stats::{self, correlation_matrix, DataMatrix};
use proptest::prelude::*;

fn matrix(rows: &common::Rows) -> DataMatrix {
    DataMatrix::from_rows(rows).unwrap()
}

#[test]
fn correlation_20x10_matches_two_pass_formula() {
    let x = common::gaussian_rows(20, 10, 1);
    let c = correlation_matrix(&matrix(&x)).unwrap();
    for i in 0..10 {
        for j in i + 1..10 {
            assert!((c.get(i, j) - common::corr(&x, i, j)).abs() <= 1e-12, "({i},{j})");
        }
    }
    let l = stats::l_statistic(&matrix(&x)).unwrap();
    let (v, i, j) = common::l_stat(&x);
    assert!((l.value - v).abs() <= 1e-12);
    assert_eq!((l.i, l.j), (i, j));
}

#[test]
fn w_20x10_matches_double_loop() {
    let x = common::gaussian_rows(20, 10, 2);
    let w = stats::w_statistic(&matrix(&x)).unwrap();
    let (v, i, j) = common::w_stat(&x);
    assert!((w.value - v).abs() <= 1e-12);
    assert_eq!((w.i, w.j), (i, j));
}

#[test]
fn t_15x8_matches_double_loop() {
    let u = common::gaussian_rows(15, 8, 3);
    let v = common::gaussian_rows(15, 8, 4);
    let t = stats::t_statistic(&matrix(&u), &matrix(&v)).unwrap();
    let (val, i, j) = common::t_stat(&u, &v);
    assert!((t.value - val).abs() <= 1e-12);
    assert_eq!((t.i, t.j), (i, j));
}

#[test]
fn t_with_two_columns_is_the_larger_ordered_pair() {
    let u = vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, 1.0]];
    let v = vec![vec![0.5, -1.0], vec![2.0, 1.0], vec![1.0, 4.0]];
    let t = stats::t_statistic(&matrix(&u), &matrix(&v)).unwrap();
    let a = common::cross(&u, &v, 0, 1).abs();
    let b = common::cross(&u, &v, 1, 0).abs();
    assert_eq!(t.value, a.max(b));
}

#[test]
fn t_on_identical_arrays_dominates_w() {
    let x = matrix(&common::gaussian_rows(25, 9, 5));
    assert!(stats::t_statistic(&x, &x).unwrap().value >= stats::w_statistic(&x).unwrap().value);
}

#[test]
fn max_product_matches_enumeration() {
    let x: Vec<f64> = common::gaussian_rows(15, 1, 6).into_iter().map(|r| r[0]).collect();
    for m in 1..=4 {
        let got = stats::max_product_statistic(&x, m).unwrap();
        let want = common::max_product(&x, m);
        assert!((got - want).abs() <= 1e-12 * want.max(1.0), "m = {m}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Shapes crossing the 64-column panel and 256-row chunk boundaries.
    #[test]
    fn blocked_kernel_matches_double_loop(n in 1usize..300, p in 2usize..140, seed in any::<u64>()) {
        let x = common::gaussian_rows(n, p, seed);
        let w = stats::w_statistic(&matrix(&x)).unwrap();
        let (v, i, j) = common::w_stat(&x);
        prop_assert!((w.value - v).abs() <= 1e-12 * v.max(1.0));
        if w.value != v {
            // A near tie may resolve differently under rounding.
            prop_assert!((common::cross(&x, &x, w.i, w.j).abs() - v).abs() <= 1e-12 * v.max(1.0));
        } else {
            prop_assert_eq!((w.i, w.j), (i, j));
        }
    }

    #[test]
    fn sign_matrices_give_exact_integers(n in 1usize..200, p in 2usize..90, seed in any::<u64>()) {
        let x: common::Rows = common::gaussian_rows(n, p, seed)
            .into_iter()
            .map(|r| r.into_iter().map(|v| if v < 0.0 { -1.0 } else { 1.0 }).collect())
            .collect();
        let w = stats::w_statistic(&matrix(&x)).unwrap();
        prop_assert_eq!(w.value, common::w_stat(&x).0);
    }
}
