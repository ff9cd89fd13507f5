use super::{CMat, Givens};

/// Exchanges the diagonal entries at positions `k` and `k+1` of the upper
/// triangular `t` by a unitary similarity, accumulating into `z`.
///
/// Returns the modulus of the subdiagonal entry the rotation left behind
/// before it is flushed to zero; a large value means the swap was not
/// numerically a similarity of triangular matrices.
pub fn swap_adjacent(t: &mut CMat, z: Option<&mut CMat>, k: usize) -> f64 {
    let n = t.nrows();
    assert!(k + 1 < n, "swap position {k} out of range for order {n}");
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    // Rotate the eigenvector of t22, (t12, t22 − t11), onto e1.
    let (rot, _) = Givens::zeroing(t[(k, k + 1)], t22 - t11);
    rot.apply_rows(t, k, k..n);
    rot.apply_cols(t, k, 0..k + 2);
    if let Some(z) = z {
        let rows = z.nrows();
        rot.apply_cols(z, k, 0..rows);
    }
    let residual = t[(k + 1, k)].norm();
    t[(k + 1, k)] = super::C64::new(0.0, 0.0);
    residual
}
