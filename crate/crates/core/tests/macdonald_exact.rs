//! Exact eigenvalue and recurrence checks for the multiplicative operators
//! over the full desk-scale range.

use ruijsenaars_core::macdonald::{
    d_eigen_holds, eigenvalues_separated, g_matches_one_row, genfun_check, h_eigen_holds, macdonald_poly,
    macdonald_poly_gram_schmidt, operator_wronski_trig_check, scalar_wronski_check, Partition, QTField,
};

#[test]
fn eigenvalues_for_small_partitions() {
    let qt = QTField::default();
    for n in 2..=3 {
        let parts = Partition::up_to(4, n);
        assert!(eigenvalues_separated(&parts, n, &qt));
        for lambda in &parts {
            let p = macdonald_poly(lambda, n, &qt).unwrap();
            for r in 0..=n {
                assert!(d_eigen_holds(&p, lambda, r, &qt).unwrap(), "D_{r} n={n} λ={lambda}");
            }
            for l in 0..=4 {
                assert!(h_eigen_holds(&p, lambda, l, &qt).unwrap(), "H_{l} n={n} λ={lambda}");
            }
        }
    }
}

#[test]
fn constructions_agree_in_four_variables() {
    let qt = QTField::parse("5/7", "-3/11").unwrap();
    for lambda in Partition::all(4, 4) {
        assert_eq!(
            macdonald_poly(&lambda, 4, &qt).unwrap(),
            macdonald_poly_gram_schmidt(&lambda, 4, &qt).unwrap(),
            "λ={lambda}"
        );
    }
}

#[test]
fn one_row_and_scalar_recurrence() {
    let qt = QTField::default();
    for n in 1..=3 {
        for l in 0..=4 {
            assert!(g_matches_one_row(l, n, &qt).unwrap());
        }
        assert!(scalar_wronski_check(4, n, &qt).unwrap());
    }
}

#[test]
fn operator_recurrence_through_four() {
    let qt = QTField::default();
    assert!(operator_wronski_trig_check(4, 2, &qt).unwrap());
    assert!(operator_wronski_trig_check(4, 3, &qt).unwrap());
}

#[test]
fn generating_functions_through_third_order() {
    let qt = QTField::default();
    for n in 1..=3 {
        for lambda in Partition::up_to(3, n) {
            assert!(genfun_check(&lambda, n, &qt, 3).unwrap(), "n={n} λ={lambda}");
        }
    }
}
