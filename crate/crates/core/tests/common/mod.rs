#![allow(dead_code)]

use fractal_weyl::linalg::{CMat, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Eigenvalues from an unrelated implementation (faer's dense EVD).
pub fn oracle_eigenvalues(a: &CMat) -> Vec<C64> {
    let m = faer::Mat::<faer::c64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    m.eigenvalues().expect("oracle eigensolver failed")
}

/// Greedy matching on globally sorted pair distances; returns the worst matched distance.
pub fn matching_distance(x: &[C64], y: &[C64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mut pairs: Vec<(f64, usize, usize)> = x
        .iter()
        .enumerate()
        .flat_map(|(i, a)| y.iter().enumerate().map(move |(j, b)| ((a - b).norm(), i, j)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut used_x = vec![false; x.len()];
    let mut used_y = vec![false; y.len()];
    let mut worst = 0.0f64;
    for (d, i, j) in pairs {
        if !used_x[i] && !used_y[j] {
            used_x[i] = true;
            used_y[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

/// Random complex matrix scaled to Frobenius norm `scale ≤ 1`, hence a contraction.
pub fn random_contraction(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale: f64 = rng.random_range(0.3..1.0);
    let g = CMat::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let f = g.frobenius_norm();
    CMat::from_fn(n, n, |i, j| g[(i, j)] * (scale / f))
}
