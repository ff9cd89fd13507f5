mod common;

use common::{matching_distance, oracle_eigenvalues, random_contraction};
use fractal_weyl::linalg::{CMat, C64};
use fractal_weyl::spectra::{matrix_eigenvalues, ordered_schur_matrix, SchurOrder};
use proptest::prelude::*;

fn moduli(v: &[C64]) -> Vec<f64> {
    v.iter().map(|z| z.norm()).collect()
}

#[test]
fn random_8x8_contraction_matches_oracle() {
    let a = random_contraction(8, 8);
    let s = ordered_schur_matrix(&a, SchurOrder::Fast).unwrap();
    let d = s.eigenvalues();
    assert!(moduli(&d).windows(2).all(|w| w[0] <= w[1]));
    assert!(matching_distance(&d, &oracle_eigenvalues(&a)) < 1e-8);
    assert!(s.reconstruction_residual(&a) < 1e-10);
    assert!(s.basis().unitarity_defect() < 1e-10);
    assert!(s.triangular().max_abs_below_diagonal() < 1e-10);
}

#[test]
fn fast_and_slow_are_mirror_images() {
    let a = random_contraction(20, 3);
    let fast = ordered_schur_matrix(&a, SchurOrder::Fast).unwrap();
    let slow = ordered_schur_matrix(&a, SchurOrder::Slow).unwrap();
    let f = moduli(&fast.eigenvalues());
    let mut s = moduli(&slow.eigenvalues());
    s.reverse();
    for (x, y) in f.iter().zip(&s) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!(matching_distance(&fast.eigenvalues(), &slow.eigenvalues()) < 1e-10);
    // Both leading subspaces are invariant and their sizes add up to K.
    let r = 7;
    assert!(fast.invariance_residual(&a, r).unwrap() < 1e-9);
    assert!(slow.invariance_residual(&a, a.nrows() - r).unwrap() < 1e-9);
}

#[test]
fn eigenvalue_only_path_matches_oracle() {
    for seed in 0..10 {
        let a = random_contraction(32, 100 + seed);
        let ev = matrix_eigenvalues(&a).unwrap();
        assert!(matching_distance(&ev, &oracle_eigenvalues(&a)) < 1e-8);
    }
}

#[test]
fn closed_unitary_block_sorts_by_phase() {
    // Diagonal unitary: all moduli tie, so the order is fixed by eigenphase.
    let phases = [2.5, -1.0, 0.3, -3.0, 1.1];
    let a = CMat::from_diagonal(&phases.iter().map(|&p| C64::from_polar(1.0, p)).collect::<Vec<_>>());
    let s = ordered_schur_matrix(&a, SchurOrder::Fast).unwrap();
    let got: Vec<f64> = s.eigenvalues().iter().map(|z| z.arg()).collect();
    assert!(got.windows(2).all(|w| w[0] < w[1]), "{got:?}");
    assert!(s.reconstruction_residual(&a) < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reordering_preserves_the_spectrum(n in 1usize..=32, seed in any::<u64>(), slow in any::<bool>()) {
        let a = random_contraction(n, seed);
        let order = if slow { SchurOrder::Slow } else { SchurOrder::Fast };
        let s = ordered_schur_matrix(&a, order).unwrap();
        let m = moduli(&s.eigenvalues());
        let sorted = match order {
            SchurOrder::Fast => m.windows(2).all(|w| w[0] <= w[1] + 1e-12),
            SchurOrder::Slow => m.windows(2).all(|w| w[0] + 1e-12 >= w[1]),
        };
        prop_assert!(sorted);
        prop_assert!(matching_distance(&s.eigenvalues(), &oracle_eigenvalues(&a)) < 1e-8);
        prop_assert!(s.reconstruction_residual(&a) < 1e-10);
        let r = 1 + (seed as usize) % n;
        prop_assert!(s.invariance_residual(&a, r).unwrap() < 1e-9);
    }
}
