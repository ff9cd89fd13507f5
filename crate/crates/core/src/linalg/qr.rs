use thiserror::Error;

use super::{abs1, CMat, Givens, C64};

/// The shifted QR iteration stalled before the eigenvalue at `index` split off.
#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
#[error("QR iteration did not converge for the eigenvalue at position {index} after {iterations} sweeps")]
pub struct QrConvergenceError {
    pub index: usize,
    pub iterations: usize,
}

const EXCEPTIONAL_EVERY: usize = 10;
const EXCEPTIONAL_SCALE: f64 = 0.75;

/// Single-shift complex QR iteration on an upper Hessenberg matrix.
///
/// On success `h` holds the eigenvalues on its diagonal. With `want_t` the
/// whole matrix is updated and ends upper triangular (the Schur factor);
/// without it only the active diagonal blocks are touched, which is enough
/// for eigenvalues and roughly three times cheaper. Rotations are
/// accumulated into `z` (`A = Z T Z†` when `z` starts as the Hessenberg
/// basis).
pub fn schur_qr(h: &mut CMat, mut z: Option<&mut CMat>, want_t: bool) -> Result<(), QrConvergenceError> {
    assert!(h.is_square());
    let n = h.nrows();
    if let Some(z) = z.as_deref() {
        assert_eq!(z.ncols(), n, "basis has wrong width");
    }
    if n == 0 {
        return Ok(());
    }
    let zero = C64::new(0.0, 0.0);
    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / ulp);
    let itmax = 30 * n.max(10);

    // Rows/columns l..=bottom form the active unreduced block.
    let mut end = n;
    let mut since_deflation = 0usize;
    while end > 0 {
        let bottom = end - 1;
        let mut l = 0usize;
        let mut split = false;
        for _ in 0..=itmax {
            let mut k = bottom;
            while k > l && !negligible_subdiagonal(h, k, l, bottom, ulp, smlnum) {
                k -= 1;
            }
            l = k;
            if l > 0 {
                h[(l, l - 1)] = zero;
            }
            if l >= bottom {
                split = true;
                break;
            }
            since_deflation += 1;

            let shift = choose_shift(h, l, bottom, since_deflation);
            let (row_lo, col_hi) = if want_t { (0, n) } else { (l, bottom + 1) };

            for k in l..bottom {
                let rot = if k == l {
                    Givens::zeroing(h[(l, l)] - shift, h[(l + 1, l)]).0
                } else {
                    let (rot, r) = Givens::zeroing(h[(k, k - 1)], h[(k + 1, k - 1)]);
                    h[(k, k - 1)] = r;
                    h[(k + 1, k - 1)] = zero;
                    rot
                };
                rot.apply_rows(h, k, k..col_hi);
                rot.apply_cols(h, k, row_lo..(k + 3).min(bottom + 1));
                if let Some(z) = z.as_deref_mut() {
                    let rows = z.nrows();
                    rot.apply_cols(z, k, 0..rows);
                }
            }
        }
        if !split {
            return Err(QrConvergenceError {
                index: bottom,
                iterations: itmax,
            });
        }
        since_deflation = 0;
        end = l;
    }
    Ok(())
}

/// Deflation test for `h[k, k-1]` (Ahues & Tisseur criterion).
fn negligible_subdiagonal(h: &CMat, k: usize, l: usize, bottom: usize, ulp: f64, smlnum: f64) -> bool {
    let sub = abs1(h[(k, k - 1)]);
    if sub <= smlnum {
        return true;
    }
    let mut tst = abs1(h[(k - 1, k - 1)]) + abs1(h[(k, k)]);
    if tst == 0.0 {
        if k >= l + 2 {
            tst += abs1(h[(k - 1, k - 2)]);
        }
        if k < bottom {
            tst += abs1(h[(k + 1, k)]);
        }
    }
    if sub > ulp * tst {
        return false;
    }
    let sup = abs1(h[(k - 1, k)]);
    let (ab, ba) = (sub.max(sup), sub.min(sup));
    let gap = abs1(h[(k - 1, k - 1)] - h[(k, k)]);
    let diag = abs1(h[(k, k)]);
    let (aa, bb) = (diag.max(gap), diag.min(gap));
    let s = aa + ab;
    ba * (ab / s) <= smlnum.max(ulp * (bb * (aa / s)))
}

fn choose_shift(h: &CMat, l: usize, bottom: usize, since_deflation: usize) -> C64 {
    if since_deflation.is_multiple_of(2 * EXCEPTIONAL_EVERY) {
        return h[(bottom, bottom)] + EXCEPTIONAL_SCALE * abs1(h[(bottom, bottom - 1)]);
    }
    if since_deflation.is_multiple_of(EXCEPTIONAL_EVERY) {
        return h[(l, l)] + EXCEPTIONAL_SCALE * abs1(h[(l + 1, l)]);
    }
    // Wilkinson: eigenvalue of the trailing 2×2 block closest to its corner.
    let t = h[(bottom, bottom)];
    let u = h[(bottom - 1, bottom)].sqrt() * h[(bottom, bottom - 1)].sqrt();
    let mut s = abs1(u);
    if s == 0.0 {
        return t;
    }
    let x = 0.5 * (h[(bottom - 1, bottom - 1)] - t);
    let sx = abs1(x);
    s = s.max(sx);
    let mut y = s * ((x / s) * (x / s) + (u / s) * (u / s)).sqrt();
    if sx > 0.0 && (x.re / sx) * y.re + (x.im / sx) * y.im < 0.0 {
        y = -y;
    }
    t - u * (u / (x + y))
}

#[cfg(test)]
mod tests {
    use super::super::hessenberg;
    use super::*;

    fn lcg_matrix(n: usize, mut seed: u64) -> CMat {
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        CMat::from_fn(n, n, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn schur_form_reconstructs_input() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (24, 4), (60, 5)] {
            let a = lcg_matrix(n, seed);
            let (mut t, q) = hessenberg(&a, true);
            let mut z = q.unwrap();
            schur_qr(&mut t, Some(&mut z), true).unwrap();
            assert!(t.max_abs_below_diagonal() == 0.0);
            assert!(z.unitarity_defect() < 1e-12);
            let back = z.matmul(&t).matmul(&z.adjoint());
            assert!(back.sub(&a).max_abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn eigenvalue_only_mode_agrees_with_full_mode() {
        let a = lcg_matrix(40, 9);
        let (mut full, _) = hessenberg(&a, false);
        let mut cheap = full.clone();
        schur_qr(&mut full, None, true).unwrap();
        schur_qr(&mut cheap, None, false).unwrap();
        let mut x: Vec<_> = full.diagonal();
        let mut y: Vec<_> = cheap.diagonal();
        let key = |z: &C64| (z.re, z.im);
        x.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        y.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).norm() < 1e-10);
        }
    }

    #[test]
    fn triangular_input_is_left_alone() {
        let mut t = CMat::from_rows(&[
            vec![C64::new(0.9, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.1, 0.0)],
        ]);
        let before = t.clone();
        schur_qr(&mut t, None, true).unwrap();
        assert_eq!(t, before);
    }

    #[test]
    fn jordan_block_converges() {
        // Defective input: a single eigenvalue of multiplicity 6.
        let n = 6;
        let mut h = CMat::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(0.5, 0.5)
            } else if j == i + 1 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        // Adjoint puts the ones on the subdiagonal and conjugates the diagonal.
        h = h.adjoint();
        schur_qr(&mut h, None, true).unwrap();
        for d in h.diagonal() {
            assert!((d - C64::new(0.5, -0.5)).norm() < 1e-2);
        }
    }
}
