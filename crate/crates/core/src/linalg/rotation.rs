use std::ops::Range;

use super::{CMat, C64};

/// Plane rotation `G = [c s; -s̄ c]` with real cosine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Givens {
    pub c: f64,
    pub s: C64,
}

impl Givens {
    /// Returns the rotation and `r` such that `G · [f; g] = [r; 0]`.
    pub fn zeroing(f: C64, g: C64) -> (Self, C64) {
        let zero = C64::new(0.0, 0.0);
        if g == zero {
            return (Self { c: 1.0, s: zero }, f);
        }
        let ag = g.norm();
        if f == zero {
            return (Self { c: 0.0, s: g.conj() / ag }, C64::new(ag, 0.0));
        }
        let af = f.norm();
        let nrm = af.hypot(ag);
        let phase = f / af;
        let rot = Self {
            c: af / nrm,
            s: phase * g.conj() / nrm,
        };
        (rot, phase * nrm)
    }

    /// Rows `k`, `k+1` of `m` over columns `cols`: `m ← G m`.
    #[inline]
    pub fn apply_rows(&self, m: &mut CMat, k: usize, cols: Range<usize>) {
        let (c, s) = (self.c, self.s);
        let sc = s.conj();
        for j in cols {
            let col = m.col_mut(j);
            let a = col[k];
            let b = col[k + 1];
            col[k] = a * c + s * b;
            col[k + 1] = b * c - sc * a;
        }
    }

    /// Columns `k`, `k+1` of `m` over rows `rows`: `m ← m G†`.
    #[inline]
    pub fn apply_cols(&self, m: &mut CMat, k: usize, rows: Range<usize>) {
        let (c, s) = (self.c, self.s);
        let sc = s.conj();
        let (x, y) = m.two_cols_mut(k, k + 1);
        for (a, b) in x[rows.clone()].iter_mut().zip(&mut y[rows]) {
            let (va, vb) = (*a, *b);
            *a = va * c + vb * sc;
            *b = vb * c - va * s;
        }
    }
}
