//! Resonance spectra of the open map and modulus-ordered Schur forms.
//!
//! An eigenvalue `μ = exp(−iE − γ/2)` inside the unit disk carries the decay
//! rate `γ = −2 ln|μ|` and lifetime `τ = 1/γ` (in map steps). The Schur form
//! `A = U T U†` is reordered so that the leading columns of `U` span the
//! invariant subspace of the fastest (or slowest) decaying resonances.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{hessenberg, schur_qr, swap_adjacent, CMat, C64};
use crate::rotor::{OpenMap, OpenMapSpec};

/// Slack allowed on `|μ| ≤ 1` (and `|μ| ≥ 0`) before a modulus is rejected.
pub const MODULUS_SLACK: f64 = 1e-8;
/// Moduli closer than this count as tied when ordering the Schur form.
pub const MODULUS_TIE: f64 = 1e-12;
/// Moduli within this distance of 1 count as exactly unimodular.
///
/// Resonances supported on regions sealed off from the opening come out of
/// the eigensolver at `1 ± O(Kε)`; without snapping, strict band edges at 1
/// would split them by rounding noise.
pub const UNIMODULAR_TOLERANCE: f64 = 1e-12;
/// Adjacent diagonal entries closer than this are not swapped.
pub const COINCIDENT_EIGENVALUES: f64 = 1e-12;
/// Largest acceptable residual of one adjacent swap, relative to the 2×2 block.
const SWAP_TOLERANCE: f64 = 1e-10;

/// All eigenvalues of one open map, with multiplicity.
#[derive(Clone, Debug)]
pub struct ResonanceSet {
    eigenvalues: Vec<C64>,
    spec: Option<OpenMapSpec>,
}

impl ResonanceSet {
    /// Wraps an arbitrary eigenvalue list (no originating map).
    pub fn from_eigenvalues(eigenvalues: Vec<C64>) -> Self {
        Self {
            eigenvalues,
            spec: None,
        }
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn spec(&self) -> Option<&OpenMapSpec> {
        self.spec.as_ref()
    }

    /// Problem dimension `K`.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn moduli(&self) -> impl Iterator<Item = f64> + '_ {
        self.eigenvalues.iter().map(|z| z.norm())
    }

    /// Moduli as used for counting, see [`effective_modulus`].
    pub fn effective_moduli(&self) -> impl Iterator<Item = f64> + '_ {
        self.eigenvalues.iter().map(|&z| effective_modulus(z))
    }

    /// `#{n : |μ_n| < threshold}`, the size of the leading FAST subspace.
    pub fn count_below(&self, threshold: f64) -> usize {
        self.effective_moduli().filter(|&m| m < threshold).count()
    }

    /// `#{n : |μ_n| > threshold}`, the size of the leading SLOW subspace.
    pub fn count_above(&self, threshold: f64) -> usize {
        self.effective_moduli().filter(|&m| m > threshold).count()
    }

    pub fn max_modulus(&self) -> f64 {
        self.moduli().fold(0.0, f64::max)
    }

    /// `#{n : lo < |μ_n| < hi}`.
    pub fn count_in_band(&self, lo: f64, hi: f64) -> Result<usize> {
        count_in_band(self, lo, hi)
    }

    /// Writes `n,re,im,modulus,gamma,tau`; infinite rates or lifetimes are left empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,re,im,modulus,gamma,tau")?;
        for (n, z) in self.eigenvalues.iter().enumerate() {
            let modulus = z.norm();
            let decay = modulus_to_rate(modulus)?;
            writeln!(
                out,
                "{n},{},{},{},{},{}",
                z.re,
                z.im,
                modulus,
                finite_or_empty(decay.rate),
                finite_or_empty(decay.lifetime)
            )?;
        }
        Ok(())
    }
}

fn finite_or_empty(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

/// Decay rate per step and lifetime in steps for one eigenvalue modulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decay {
    /// `γ = −2 ln μ`; `+∞` for `μ = 0`.
    pub rate: f64,
    /// `τ = 1/γ`; `+∞` for `μ = 1`.
    pub lifetime: f64,
}

pub fn modulus_to_rate(modulus: f64) -> Result<Decay> {
    if !(-MODULUS_SLACK..=1.0 + MODULUS_SLACK).contains(&modulus) {
        return Err(invalid(format!("modulus {modulus} lies outside [0, 1]")));
    }
    let mu = modulus.clamp(0.0, 1.0);
    if mu == 0.0 {
        return Ok(Decay {
            rate: f64::INFINITY,
            lifetime: 0.0,
        });
    }
    if mu == 1.0 {
        return Ok(Decay {
            rate: 0.0,
            lifetime: f64::INFINITY,
        });
    }
    let rate = -2.0 * mu.ln();
    Ok(Decay {
        rate,
        lifetime: rate.recip(),
    })
}

/// Eigenvalues of an arbitrary square matrix, in solver order.
pub fn matrix_eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if !a.is_finite() {
        return Err(invalid("matrix has non-finite entries"));
    }
    let (mut h, _) = hessenberg(a, false);
    schur_qr(&mut h, None, false).map_err(|source| Error::NoConvergence {
        context: format!("matrix of order {}", a.nrows()),
        source,
    })?;
    Ok(h.diagonal())
}

/// All `K` resonances of the open map.
pub fn eigenvalues(map: &OpenMap) -> Result<ResonanceSet> {
    let eigenvalues = matrix_eigenvalues(map.matrix()).map_err(|e| with_spec(e, map.spec()))?;
    Ok(ResonanceSet {
        eigenvalues,
        spec: Some(map.spec().clone()),
    })
}

fn with_spec(err: Error, spec: &OpenMapSpec) -> Error {
    match err {
        Error::NoConvergence { source, .. } => Error::NoConvergence {
            context: spec.to_string(),
            source,
        },
        other => other,
    }
}

/// Modulus clamped to `[0, 1]`, with values within [`UNIMODULAR_TOLERANCE`]
/// of 1 snapped onto 1.
pub fn effective_modulus(z: C64) -> f64 {
    let m = z.norm();
    if m >= 1.0 - UNIMODULAR_TOLERANCE {
        1.0
    } else {
        m
    }
}

/// `#{n : lo < |μ_n| < hi}` with strict inequalities.
pub fn count_in_band(res: &ResonanceSet, lo: f64, hi: f64) -> Result<usize> {
    check_band(lo, hi)?;
    Ok(res.effective_moduli().filter(|&m| m > lo && m < hi).count())
}

/// Size of the leading Schur subspace covering the band `(lo, hi)`.
///
/// The band must be a prefix of the ordered spectrum: FAST bands start at 0
/// and count `|μ| < hi`; SLOW bands end at 1 and count `|μ| > lo`.
pub fn leading_count(res: &ResonanceSet, order: SchurOrder, lo: f64, hi: f64) -> Result<usize> {
    check_band(lo, hi)?;
    match order {
        SchurOrder::Fast if lo == 0.0 => Ok(res.count_below(hi)),
        SchurOrder::Slow if hi == 1.0 => Ok(res.count_above(lo)),
        SchurOrder::Fast => Err(invalid(format!("a fast subspace band must start at 0, got ({lo}, {hi})"))),
        SchurOrder::Slow => Err(invalid(format!("a slow subspace band must end at 1, got ({lo}, {hi})"))),
    }
}

pub(crate) fn check_band(lo: f64, hi: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lo) || !(hi > lo && hi <= 1.0) {
        return Err(invalid(format!("band ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1")));
    }
    Ok(())
}

/// Which end of the spectrum the leading Schur vectors describe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchurOrder {
    /// Ascending `|μ|`: fastest decay first.
    Fast,
    /// Descending `|μ|`: slowest decay first.
    Slow,
}

impl std::str::FromStr for SchurOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fast" => Ok(Self::Fast),
            "slow" => Ok(Self::Slow),
            other => Err(invalid(format!("unknown Schur order {other:?}"))),
        }
    }
}

/// `A = U T U†` with the diagonal of `T` sorted by modulus.
#[derive(Clone, Debug)]
pub struct SchurForm {
    basis: CMat,
    triangular: CMat,
    order: SchurOrder,
}

impl SchurForm {
    /// `U`; column `m` is the Schur vector `u_m`.
    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    /// `T`.
    pub fn triangular(&self) -> &CMat {
        &self.triangular
    }

    pub fn order(&self) -> SchurOrder {
        self.order
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.triangular.diagonal()
    }

    /// The first `r` Schur vectors, as the columns of a `K×r` matrix.
    pub fn subspace_basis(&self, r: usize) -> Result<CMat> {
        if r == 0 || r > self.dimension() {
            return Err(invalid(format!(
                "subspace size r={r} outside 1..={}",
                self.dimension()
            )));
        }
        Ok(self.basis.leading_columns(r))
    }

    /// Frobenius norm of `(I − P_r) A P_r`, zero for an exactly invariant span.
    pub fn invariance_residual(&self, a: &CMat, r: usize) -> Result<f64> {
        let ur = self.subspace_basis(r)?;
        let aur = a.matmul(&ur);
        let coeffs = ur.adjoint_matmul(&aur);
        Ok(aur.sub(&ur.matmul(&coeffs)).frobenius_norm())
    }

    /// Unit-norm right eigenvectors for the diagonal positions in `range`,
    /// by back-substitution on `T`.
    pub fn eigenvectors(&self, range: std::ops::Range<usize>) -> Result<CMat> {
        let k = self.dimension();
        if range.start > range.end || range.end > k {
            return Err(invalid(format!("eigenvector range {range:?} outside 0..{k}")));
        }
        let t = &self.triangular;
        let scale = t.max_abs().max(f64::MIN_POSITIVE);
        let floor = f64::EPSILON * scale;
        let mut out = CMat::zeros(k, range.len());
        let mut y = vec![C64::new(0.0, 0.0); k];
        for (col, j) in range.enumerate() {
            let lambda = t[(j, j)];
            y[..=j].iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            y[j] = C64::new(1.0, 0.0);
            for i in (0..j).rev() {
                let mut acc = C64::new(0.0, 0.0);
                for l in (i + 1)..=j {
                    acc += t[(i, l)] * y[l];
                }
                let mut pivot = t[(i, i)] - lambda;
                if pivot.norm() < floor {
                    pivot = C64::new(floor, 0.0);
                }
                y[i] = -acc / pivot;
            }
            let x = self.basis.mul_vec_prefix(&y[..=j]);
            let nrm = crate::linalg::norm(&x);
            for (dst, v) in out.col_mut(col).iter_mut().zip(x) {
                *dst = v / nrm;
            }
        }
        Ok(out)
    }

    /// Diagonal positions whose effective modulus lies in `(lo, hi)`.
    ///
    /// Contiguous because the diagonal is sorted by modulus.
    pub fn band_range(&self, lo: f64, hi: f64) -> Result<std::ops::Range<usize>> {
        check_band(lo, hi)?;
        let inside: Vec<bool> = self
            .triangular
            .diagonal()
            .into_iter()
            .map(|z| {
                let m = effective_modulus(z);
                m > lo && m < hi
            })
            .collect();
        let Some(start) = inside.iter().position(|&b| b) else {
            return Ok(0..0);
        };
        let end = start + inside[start..].iter().take_while(|&&b| b).count();
        debug_assert!(inside[end..].iter().all(|&b| !b));
        Ok(start..end)
    }

    /// `max |U T U† − A|`.
    pub fn reconstruction_residual(&self, a: &CMat) -> f64 {
        self.basis
            .matmul(&self.triangular)
            .matmul(&self.basis.adjoint())
            .sub(a)
            .max_abs()
    }
}

/// Modulus-ordered Schur form of the open map.
pub fn ordered_schur(map: &OpenMap, order: SchurOrder) -> Result<SchurForm> {
    ordered_schur_matrix(map.matrix(), order).map_err(|e| with_spec(e, map.spec()))
}

/// Modulus-ordered Schur form of any square matrix.
pub fn ordered_schur_matrix(a: &CMat, order: SchurOrder) -> Result<SchurForm> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if !a.is_finite() {
        return Err(invalid("matrix has non-finite entries"));
    }
    let (mut t, q) = hessenberg(a, true);
    let mut u = q.expect("basis requested");
    schur_qr(&mut t, Some(&mut u), true).map_err(|source| Error::NoConvergence {
        context: format!("matrix of order {}", a.nrows()),
        source,
    })?;
    reorder(&mut t, &mut u, order)?;
    Ok(SchurForm {
        basis: u,
        triangular: t,
        order,
    })
}

/// Eigenphase in `(−π, π]`.
fn eigenphase(z: C64) -> f64 {
    let phase = z.arg();
    if phase <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        phase
    }
}

/// Target arrangement of the current diagonal positions.
///
/// Sorted by modulus; runs of moduli within [`MODULUS_TIE`] of the run's
/// first member are ordered by ascending eigenphase, then by position.
fn target_order(diag: &[C64], order: SchurOrder) -> Vec<usize> {
    let moduli: Vec<f64> = diag.iter().map(|z| z.norm()).collect();
    let mut idx: Vec<usize> = (0..diag.len()).collect();
    idx.sort_by(|&a, &b| {
        let by_modulus = moduli[a].total_cmp(&moduli[b]);
        let by_modulus = match order {
            SchurOrder::Fast => by_modulus,
            SchurOrder::Slow => by_modulus.reverse(),
        };
        by_modulus.then(a.cmp(&b))
    });
    let mut start = 0;
    while start < idx.len() {
        let head = moduli[idx[start]];
        let mut end = start + 1;
        while end < idx.len() && (moduli[idx[end]] - head).abs() <= MODULUS_TIE {
            end += 1;
        }
        idx[start..end].sort_by(|&a, &b| {
            eigenphase(diag[a])
                .partial_cmp(&eigenphase(diag[b]))
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        start = end;
    }
    idx
}

/// Sorts the Schur form in place by adjacent unitary swaps.
fn reorder(t: &mut CMat, u: &mut CMat, order: SchurOrder) -> Result<()> {
    let target = target_order(&t.diagonal(), order);
    // slot[p] = original position of the eigenvalue currently at p.
    let mut slot: Vec<usize> = (0..target.len()).collect();
    for (dest, &label) in target.iter().enumerate() {
        let from = dest
            + slot[dest..]
                .iter()
                .position(|&s| s == label)
                .expect("every label is present once");
        for p in (dest..from).rev() {
            let (a, b) = (t[(p, p)], t[(p + 1, p + 1)]);
            if (a - b).norm() > COINCIDENT_EIGENVALUES {
                let scale = 1.0 + a.norm() + b.norm() + t[(p, p + 1)].norm();
                let residual = swap_adjacent(t, Some(u), p);
                if !(residual <= SWAP_TOLERANCE * scale) {
                    return Err(Error::ReorderFailure { position: p, residual });
                }
            }
            slot.swap(p, p + 1);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_10;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rate_examples() {
        let d = modulus_to_rate(0.1).unwrap();
        assert!((d.lifetime - 1.0 / (2.0 * LN_10)).abs() < 1e-15);
        assert!((d.lifetime - 0.2171).abs() < 1e-4);

        let d = modulus_to_rate(1.0).unwrap();
        assert_eq!(d.rate, 0.0);
        assert!(d.lifetime.is_infinite());

        let d = modulus_to_rate((-0.5f64).exp()).unwrap();
        assert!((d.rate - 1.0).abs() < 1e-15);
        assert!((d.lifetime - 1.0).abs() < 1e-15);

        let d = modulus_to_rate(0.0).unwrap();
        assert!(d.rate.is_infinite());
        assert_eq!(d.lifetime, 0.0);
    }

    #[test]
    fn rate_rejects_out_of_range_moduli() {
        assert!(modulus_to_rate(1.0 + 1e-9).is_ok());
        assert!(modulus_to_rate(1.0 + 1e-6).is_err());
        assert!(modulus_to_rate(-1e-6).is_err());
        assert!(modulus_to_rate(f64::NAN).is_err());
    }

    #[test]
    fn band_counts_are_strict() {
        let unit = ResonanceSet::from_eigenvalues(vec![
            c(1.0, 0.0),
            c(0.0, 1.0),
            c(-1.0, 0.0),
            C64::from_polar(1.0 - 2e-15, 0.4),
            C64::from_polar(1.0 + 2e-15, -0.4),
        ]);
        assert_eq!(count_in_band(&unit, 0.1, 0.98).unwrap(), 0);
        assert_eq!(count_in_band(&unit, 0.0, 1.0).unwrap(), 0);
        let mixed = ResonanceSet::from_eigenvalues(vec![c(0.1, 0.0), c(0.5, 0.0), c(0.0, 0.05)]);
        assert_eq!(count_in_band(&mixed, 0.0, 0.1).unwrap(), 1);
        assert_eq!(mixed.count_below(0.1), 1);
        assert_eq!(mixed.count_above(0.1), 1);
        assert_eq!(unit.count_above(0.98), 5);
        assert!(count_in_band(&mixed, 0.5, 0.5).is_err());
        assert!(count_in_band(&mixed, -0.1, 0.5).is_err());
        assert!(count_in_band(&mixed, 0.1, 1.5).is_err());
    }

    #[test]
    fn diagonal_input_is_permuted() {
        let a = CMat::from_diagonal(&[c(0.9, 0.0), c(0.1, 0.0)]);
        let s = ordered_schur_matrix(&a, SchurOrder::Fast).unwrap();
        let d = s.eigenvalues();
        assert!((d[0] - c(0.1, 0.0)).norm() < 1e-15);
        assert!((d[1] - c(0.9, 0.0)).norm() < 1e-15);
        // U is a permutation up to phases.
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i != j { 1.0 } else { 0.0 };
                assert!((s.basis()[(i, j)].norm() - expected).abs() < 1e-15);
            }
        }
        // The leading FAST vector spans the second coordinate axis.
        let b = s.subspace_basis(1).unwrap();
        assert!(b[(0, 0)].norm() < 1e-15);
        assert!((b[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn upper_triangular_two_by_two() {
        let a = CMat::from_rows(&[vec![c(0.9, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.1, 0.0)]]);
        let s = ordered_schur_matrix(&a, SchurOrder::Fast).unwrap();
        let d = s.eigenvalues();
        assert!((d[0] - c(0.1, 0.0)).norm() < 1e-14);
        assert!((d[1] - c(0.9, 0.0)).norm() < 1e-14);
        assert!(s.reconstruction_residual(&a) < 1e-12);
        assert!(s.basis().unitarity_defect() < 1e-12);

        let slow = ordered_schur_matrix(&a, SchurOrder::Slow).unwrap();
        assert!((slow.eigenvalues()[0] - c(0.9, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn ties_are_broken_by_eigenphase() {
        let diag = [c(0.0, 1.0), c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0)];
        let order = target_order(&diag, SchurOrder::Fast);
        // Phases: π/2, 0, −π/2, π.
        assert_eq!(order, vec![2, 1, 0, 3]);
        let a = CMat::from_diagonal(&diag);
        let s = ordered_schur_matrix(&a, SchurOrder::Slow).unwrap();
        let phases: Vec<f64> = s.eigenvalues().into_iter().map(eigenphase).collect();
        assert!(phases.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn subspace_size_is_checked() {
        let a = CMat::from_diagonal(&[c(0.9, 0.0), c(0.1, 0.0)]);
        let s = ordered_schur_matrix(&a, SchurOrder::Fast).unwrap();
        assert!(s.subspace_basis(0).is_err());
        assert!(s.subspace_basis(3).is_err());
        assert_eq!(s.subspace_basis(2).unwrap().ncols(), 2);
        assert!(s.invariance_residual(&a, 2).unwrap() < 1e-15);
    }

    #[test]
    fn band_ranges_and_leading_counts() {
        let a = CMat::from_diagonal(&[c(0.9, 0.0), c(0.05, 0.0), c(0.0, 1.0), c(0.5, 0.0)]);
        let res = ResonanceSet::from_eigenvalues(matrix_eigenvalues(&a).unwrap());
        assert_eq!(leading_count(&res, SchurOrder::Fast, 0.0, 0.6).unwrap(), 2);
        assert_eq!(leading_count(&res, SchurOrder::Slow, 0.6, 1.0).unwrap(), 2);
        assert!(leading_count(&res, SchurOrder::Fast, 0.1, 0.6).is_err());
        assert!(leading_count(&res, SchurOrder::Slow, 0.6, 0.99).is_err());
        let fast = ordered_schur_matrix(&a, SchurOrder::Fast).unwrap();
        assert_eq!(fast.band_range(0.1, 0.95).unwrap(), 1..3);
        let slow = ordered_schur_matrix(&a, SchurOrder::Slow).unwrap();
        assert_eq!(slow.band_range(0.1, 0.95).unwrap(), 1..3);
        assert_eq!(slow.band_range(0.6, 0.8).unwrap(), 0..0);
    }

    #[test]
    fn csv_leaves_infinite_fields_empty() {
        let set = ResonanceSet::from_eigenvalues(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, (-0.5f64).exp())]);
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,re,im,modulus,gamma,tau");
        assert_eq!(lines[1], "0,0,0,0,,0");
        assert_eq!(lines[2], "1,1,0,1,0,");
        let fields: Vec<f64> = lines[3].split(',').map(|f| f.parse().unwrap()).collect();
        assert!((fields[4] - 1.0).abs() < 1e-14 && (fields[5] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite_input() {
        let a = CMat::from_diagonal(&[c(f64::NAN, 0.0), c(0.1, 0.0)]);
        assert!(matrix_eigenvalues(&a).is_err());
        assert!(ordered_schur_matrix(&a, SchurOrder::Fast).is_err());
    }
}
