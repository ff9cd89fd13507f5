use super::{norm, CMat, C64};

/// Householder reduction `A = Q H Q†` to upper Hessenberg form.
///
/// Uses Hermitian reflectors `P = I − 2vv†/(v†v)`, so subdiagonal entries
/// of `H` are complex in general. `Q` is only accumulated on request.
pub fn hessenberg(a: &CMat, want_q: bool) -> (CMat, Option<CMat>) {
    assert!(a.is_square(), "hessenberg needs a square matrix");
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = want_q.then(|| CMat::identity(n));
    let zero = C64::new(0.0, 0.0);

    let mut v = vec![zero; n];
    let mut w = vec![zero; n];
    for j in 0..n.saturating_sub(2) {
        let x = &h.col(j)[j + 1..];
        let tail = norm(&x[1..]);
        if tail == 0.0 {
            continue;
        }
        let xnorm = norm(x);
        let x0 = x[0];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let m = n - j - 1;
        let v = &mut v[..m];
        v.copy_from_slice(x);
        v[0] += phase * xnorm;
        let beta = 2.0 / v.iter().map(|z| z.norm_sqr()).sum::<f64>();

        // Left: rows j+1.., columns j+1..
        {
            let col = h.col_mut(j);
            col[j + 1] = -phase * xnorm;
            col[j + 2..].iter_mut().for_each(|z| *z = zero);
        }
        for c in (j + 1)..n {
            let col = &mut h.col_mut(c)[j + 1..];
            let dot: C64 = v.iter().zip(col.iter()).map(|(vi, ai)| vi.conj() * ai).sum();
            let f = dot * beta;
            for (ai, vi) in col.iter_mut().zip(v.iter()) {
                *ai -= vi * f;
            }
        }

        // Right: all rows, columns j+1..
        apply_right(&mut h, j + 1, v, beta, &mut w);
        if let Some(q) = q.as_mut() {
            apply_right(q, j + 1, v, beta, &mut w);
        }
    }
    (h, q)
}

/// `m[:, off..] ← m[:, off..] (I − β v v†)`.
fn apply_right(m: &mut CMat, off: usize, v: &[C64], beta: f64, w: &mut [C64]) {
    let rows = m.nrows();
    let w = &mut w[..rows];
    w.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
    for (c, &vc) in v.iter().enumerate() {
        for (wi, &a) in w.iter_mut().zip(m.col(off + c)) {
            *wi += a * vc;
        }
    }
    w.iter_mut().for_each(|z| *z *= beta);
    for (c, &vc) in v.iter().enumerate() {
        let f = vc.conj();
        for (a, wi) in m.col_mut(off + c).iter_mut().zip(w.iter()) {
            *a -= wi * f;
        }
    }
}
