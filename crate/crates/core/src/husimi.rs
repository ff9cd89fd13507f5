//! Torus coherent states and Husimi phase-space densities.
//!
//! A coherent state centred at `x = (q₀, p₀)` is the periodised Gaussian
//!
//! ```text
//! a_n ∝ Σ_{ν=−V..V} exp(−πM (q_n − q₀ − ν)² + 2πi M p₀ (q_n − ν))
//! ```
//!
//! and the Husimi density of a set of vectors is `H(x) = Σ_m |⟨x|v_m⟩|²`.
//! Feeding it the leading Schur vectors of an ordered Schur form gives the
//! fast or slow Husimi-Schur representation; since those vectors are
//! orthonormal, `H` partitions into Planck cells without the overcounting
//! that overlapping resonance eigenvectors suffer from.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gridfile::{read_f64_grid, write_f64_grid, HUSIMI_MAGIC};
use crate::linalg::{CMat, C64};
use crate::rotor::{OpenMap, OpenMapSpec, SiteConvention};
use crate::spectra::{SchurForm, SchurOrder};

/// Winding images kept on each side of the periodised Gaussian.
pub const DEFAULT_IMAGES: usize = 4;
/// Sites whose Gaussian envelope is below this fraction of the peak are skipped.
const ENVELOPE_CUTOFF: f64 = 1e-17;

/// Grid resolution `nq × np`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub nq: usize,
    pub np: usize,
}

impl GridDims {
    pub fn new(nq: usize, np: usize) -> Result<Self> {
        if nq == 0 || np == 0 {
            return Err(invalid(format!("grid {nq}x{np} must be non-empty")));
        }
        Ok(Self { nq, np })
    }

    pub fn cells(&self) -> usize {
        self.nq * self.np
    }

    /// Cell-centred sample points on `[0, 1)`.
    pub fn q_axis(&self) -> Vec<f64> {
        cell_centres(self.nq)
    }

    pub fn p_axis(&self) -> Vec<f64> {
        cell_centres(self.np)
    }
}

impl Default for GridDims {
    fn default() -> Self {
        Self { nq: 256, np: 256 }
    }
}

impl fmt::Display for GridDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.nq, self.np)
    }
}

impl FromStr for GridDims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| invalid(format!("grid {s:?} is not of the form NQxNP")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| invalid(format!("grid {s:?} is not of the form NQxNP")))
        };
        Self::new(parse(a)?, parse(b)?)
    }
}

pub(crate) fn cell_centres(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

/// Periodised Gaussian wavepacket on the `M`-site torus.
#[derive(Clone, Debug)]
pub struct TorusCoherentState {
    pub dimension: usize,
    pub center: (f64, f64),
    pub images: usize,
    pub amplitudes: Vec<C64>,
}

impl TorusCoherentState {
    /// `⟨self|v⟩` for a full `M`-dimensional vector.
    pub fn overlap(&self, v: &[C64]) -> C64 {
        assert_eq!(v.len(), self.dimension);
        self.amplitudes.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
    }
}

pub fn coherent_state(
    dimension: usize,
    q0: f64,
    p0: f64,
    images: usize,
    sites: SiteConvention,
) -> Result<TorusCoherentState> {
    if dimension < 2 {
        return Err(invalid(format!("dimension M={dimension} must be at least 2")));
    }
    if images < 2 {
        return Err(invalid(format!("need at least 2 winding images, got {images}")));
    }
    if !(q0.is_finite() && p0.is_finite()) {
        return Err(invalid("coherent-state centre must be finite"));
    }
    let row = CoherentRow::new(dimension, q0, images, sites, false);
    let mut amplitudes = vec![C64::new(0.0, 0.0); dimension];
    let norm2 = row.fill(p0, &mut amplitudes);
    let inv = norm2.sqrt().recip();
    amplitudes.iter_mut().for_each(|a| *a *= inv);
    Ok(TorusCoherentState {
        dimension,
        center: (q0, p0),
        images,
        amplitudes,
    })
}

/// Precomputed `p₀`-independent pieces of the coherent states along one `q₀`.
struct CoherentRow {
    images: usize,
    /// Gaussian factors `g[n·(2V+1) + ν]` for the active sites.
    gauss: Vec<f64>,
    /// Active sites (ascending) and their positions `q_n`.
    active: Vec<(usize, f64)>,
    dimension: f64,
}

impl CoherentRow {
    fn new(dimension: usize, q0: f64, images: usize, sites: SiteConvention, windowed: bool) -> Self {
        let mf = dimension as f64;
        let width = 2 * images + 1;
        let mut gauss = Vec::with_capacity(dimension * width);
        let mut active = Vec::with_capacity(dimension);
        let mut envelopes = Vec::with_capacity(dimension);
        for n in 0..dimension {
            let q = sites.position(n, dimension);
            let start = gauss.len();
            let mut env = 0.0;
            for nu in 0..width {
                let shift = nu as f64 - images as f64;
                let d = q - q0 - shift;
                let g = (-PI * mf * d * d).exp();
                env += g;
                gauss.push(g);
            }
            envelopes.push((n, q, env, start));
        }
        let peak = envelopes.iter().map(|e| e.2).fold(0.0, f64::max);
        let mut kept_gauss = Vec::with_capacity(gauss.len());
        for (n, q, env, start) in envelopes {
            if windowed && env <= ENVELOPE_CUTOFF * peak {
                continue;
            }
            active.push((n, q));
            kept_gauss.extend_from_slice(&gauss[start..start + width]);
        }
        Self {
            images,
            gauss: kept_gauss,
            active,
            dimension: mf,
        }
    }

    /// Writes unnormalised amplitudes of the active sites into `out`
    /// (indexed by site) and returns their squared norm.
    fn fill(&self, p0: f64, out: &mut [C64]) -> f64 {
        let width = 2 * self.images + 1;
        let mp = self.dimension * p0;
        let winding: Vec<C64> = (0..width)
            .map(|nu| {
                let shift = nu as f64 - self.images as f64;
                C64::from_polar(1.0, -2.0 * PI * (mp * shift).fract())
            })
            .collect();
        let mut norm2 = 0.0;
        for (slot, &(n, q)) in self.active.iter().enumerate() {
            let g = &self.gauss[slot * width..(slot + 1) * width];
            let sum: C64 = g.iter().zip(&winding).map(|(&gi, &w)| w * gi).sum();
            let a = C64::from_polar(1.0, 2.0 * PI * (mp * q).fract()) * sum;
            norm2 += a.norm_sqr();
            out[n] = a;
        }
        norm2
    }
}

/// What a Husimi grid was computed from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: Option<OpenMapSpec>,
    /// Free-form description, e.g. `"schur"` or `"eigenvectors"`.
    pub source: String,
    pub order: Option<SchurOrder>,
    pub band: Option<(f64, f64)>,
    /// Number of vectors summed.
    pub r: usize,
    pub images: usize,
}

/// Non-negative density sampled at cell centres of `[0, 1)²`.
#[derive(Clone, Debug, PartialEq)]
pub struct HusimiGrid {
    dims: GridDims,
    /// Hilbert dimension `M` (Planck cells per unit area).
    dimension: usize,
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl HusimiGrid {
    pub fn from_values(dims: GridDims, dimension: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.cells() {
            return Err(Error::DimensionMismatch {
                expected: dims.cells(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("Husimi values must be finite and non-negative"));
        }
        Ok(Self {
            dims,
            dimension,
            values,
            provenance: Provenance::default(),
        })
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Row-major, `q` outer.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, iq: usize, ip: usize) -> f64 {
        self.values[iq * self.dims.np + ip]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Grid cell holding the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        (i / self.dims.np, i % self.dims.np)
    }

    /// Fraction of the total weight in cells where `inside(iq, ip)` holds.
    pub fn weight_fraction(&self, mut inside: impl FnMut(usize, usize) -> bool) -> Result<f64> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::EmptyGrid);
        }
        let mut part = 0.0;
        for iq in 0..self.dims.nq {
            for ip in 0..self.dims.np {
                if inside(iq, ip) {
                    part += self.value(iq, ip);
                }
            }
        }
        Ok(part / total)
    }

    pub fn write_binary<W: Write>(&self, out: W) -> Result<()> {
        write_f64_grid(out, HUSIMI_MAGIC, self.dims.nq, self.dims.np, &self.values)
    }

    /// Reads a `HUSIGRID` payload; `dimension` comes from the sidecar.
    pub fn read_binary<R: Read>(input: R, dimension: usize) -> Result<Self> {
        let (nq, np, values) = read_f64_grid(input, HUSIMI_MAGIC)?;
        Self::from_values(GridDims::new(nq, np)?, dimension, values)
    }

    pub fn sidecar(&self) -> GridSidecar {
        GridSidecar {
            format: "HUSIGRID".into(),
            nq: self.dims.nq,
            np: self.dims.np,
            dimension: self.dimension,
            q_axis: self.dims.q_axis(),
            p_axis: self.dims.p_axis(),
            provenance: self.provenance.clone(),
        }
    }
}

/// JSON companion of a `HUSIGRID` file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub format: String,
    pub nq: usize,
    pub np: usize,
    pub dimension: usize,
    pub q_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub provenance: Provenance,
}

/// Husimi density `Σ_m |⟨x|v_m⟩|²` of the columns of `vectors`.
///
/// Each column lives on `kept_sites` and is zero-padded to the full
/// `M`-dimensional space of `sites` before the overlap is taken.
pub fn husimi_states(
    vectors: &CMat,
    kept_sites: &[usize],
    dimension: usize,
    sites: SiteConvention,
    dims: GridDims,
) -> Result<HusimiGrid> {
    husimi_states_with_images(vectors, kept_sites, dimension, sites, dims, DEFAULT_IMAGES)
}

pub fn husimi_states_with_images(
    vectors: &CMat,
    kept_sites: &[usize],
    dimension: usize,
    sites: SiteConvention,
    dims: GridDims,
    images: usize,
) -> Result<HusimiGrid> {
    if vectors.nrows() != kept_sites.len() {
        return Err(Error::DimensionMismatch {
            expected: kept_sites.len(),
            found: vectors.nrows(),
        });
    }
    if let Some(&bad) = kept_sites.iter().find(|&&s| s >= dimension) {
        return Err(invalid(format!("kept site {bad} outside 0..{dimension}")));
    }
    if !kept_sites.windows(2).all(|w| w[0] < w[1]) {
        return Err(invalid("kept sites must be strictly ascending"));
    }
    if images < 2 {
        return Err(invalid(format!("need at least 2 winding images, got {images}")));
    }
    // kept position of each full-space site, if any
    let mut slot_of = vec![usize::MAX; dimension];
    for (j, &s) in kept_sites.iter().enumerate() {
        slot_of[s] = j;
    }
    let r = vectors.ncols();
    let q_axis = dims.q_axis();
    let p_axis = dims.p_axis();

    let rows: Vec<Vec<f64>> = q_axis
        .par_iter()
        .map(|&q0| {
            let row = CoherentRow::new(dimension, q0, images, sites, true);
            let overlap_sites: Vec<(usize, usize)> = row
                .active
                .iter()
                .filter_map(|&(n, _)| (slot_of[n] != usize::MAX).then_some((n, slot_of[n])))
                .collect();
            let mut amps = vec![C64::new(0.0, 0.0); dimension];
            let mut bra = Vec::with_capacity(overlap_sites.len());
            p_axis
                .iter()
                .map(|&p0| {
                    if r == 0 {
                        return 0.0;
                    }
                    let norm2 = row.fill(p0, &mut amps);
                    bra.clear();
                    bra.extend(overlap_sites.iter().map(|&(n, j)| (j, amps[n].conj())));
                    let mut h = 0.0;
                    for m in 0..r {
                        let v = vectors.col(m);
                        let s: C64 = bra.iter().map(|&(j, a)| a * v[j]).sum();
                        h += s.norm_sqr();
                    }
                    h / norm2
                })
                .collect()
        })
        .collect();

    let mut grid = HusimiGrid::from_values(dims, dimension, rows.concat())?;
    grid.provenance.r = r;
    grid.provenance.images = images;
    Ok(grid)
}

/// Fast or slow Husimi-Schur density of the leading `r` Schur vectors.
pub fn husimi_schur(schur: &SchurForm, r: usize, map: &OpenMap, dims: GridDims) -> Result<HusimiGrid> {
    if schur.dimension() != map.dimension() {
        return Err(Error::DimensionMismatch {
            expected: map.dimension(),
            found: schur.dimension(),
        });
    }
    let basis = schur.subspace_basis(r)?;
    let spec = map.spec();
    let mut grid = husimi_states(&basis, map.kept_sites(), spec.dimension, spec.sites, dims)?;
    grid.provenance.spec = Some(spec.clone());
    grid.provenance.source = "schur".into();
    grid.provenance.order = Some(schur.order());
    Ok(grid)
}

/// Planck cells needed to hold fraction `f` of the grid's weight.
///
/// Cells are taken in order of decreasing density; each grid cell counts as
/// `M / (nq·np)` Planck cells so that the whole torus is `M` cells.
pub fn support_cells(grid: &HusimiGrid, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid(format!("weight fraction {fraction} must lie in (0, 1]")));
    }
    let total = grid.total();
    if total <= 0.0 {
        return Err(Error::EmptyGrid);
    }
    let mut sorted = grid.values.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let goal = fraction * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    let mut taken = sorted.len();
    for (i, v) in sorted.iter().enumerate() {
        acc += v;
        if acc >= goal {
            taken = i + 1;
            break;
        }
    }
    Ok(taken as f64 * grid.dimension as f64 / grid.dims.cells() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    /// Term-by-term evaluation of the periodised Gaussian, unnormalised.
    fn direct_amplitudes(m: usize, q0: f64, p0: f64, images: i64) -> Vec<C64> {
        let mf = m as f64;
        (0..m)
            .map(|n| {
                let q = n as f64 / mf;
                (-images..=images)
                    .map(|nu| {
                        let d = q - q0 - nu as f64;
                        C64::from_polar((-PI * mf * d * d).exp(), 2.0 * PI * mf * p0 * (q - nu as f64))
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn coherent_state_matches_direct_sum() {
        let s = coherent_state(24, 0.3, 0.7, 4, SiteConvention::Left).unwrap();
        let mut d = direct_amplitudes(24, 0.3, 0.7, 4);
        let nd = norm(&d);
        d.iter_mut().for_each(|z| *z /= nd);
        for (a, b) in s.amplitudes.iter().zip(&d) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((norm(&s.amplitudes) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_is_periodic_in_q() {
        for (q0, p0) in [(0.1, 0.2), (0.95, 0.5), (0.5, 0.999)] {
            let a = coherent_state(32, q0, p0, 6, SiteConvention::Left).unwrap();
            let b = coherent_state(32, q0 + 1.0, p0, 6, SiteConvention::Left).unwrap();
            assert!((a.overlap(&b.amplitudes).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_has_converged_at_three_images() {
        for (q0, p0) in [(0.0, 0.0), (0.37, 0.81), (0.999, 0.5)] {
            let a = coherent_state(64, q0, p0, 3, SiteConvention::Left).unwrap();
            let b = coherent_state(64, q0, p0, 10, SiteConvention::Left).unwrap();
            let diff = a
                .amplitudes
                .iter()
                .zip(&b.amplitudes)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-12, "{diff}");
        }
    }

    #[test]
    fn rejects_bad_coherent_state_input() {
        assert!(coherent_state(1, 0.0, 0.0, 4, SiteConvention::Left).is_err());
        assert!(coherent_state(16, 0.0, 0.0, 1, SiteConvention::Left).is_err());
        assert!(coherent_state(16, f64::NAN, 0.0, 4, SiteConvention::Left).is_err());
    }

    #[test]
    fn empty_vector_set_gives_zero_grid() {
        let kept: Vec<usize> = (0..16).collect();
        let v = CMat::zeros(16, 0);
        let g = husimi_states(&v, &kept, 16, SiteConvention::Left, GridDims::new(8, 8).unwrap()).unwrap();
        assert!(g.values().iter().all(|&x| x == 0.0));
        assert!(matches!(support_cells(&g, 0.5), Err(Error::EmptyGrid)));
    }

    #[test]
    fn single_coherent_state_peaks_at_its_centre() {
        let m = 40;
        let dims = GridDims::new(40, 40).unwrap();
        let (q0, p0) = (dims.q_axis()[13], dims.p_axis()[29]);
        let s = coherent_state(m, q0, p0, DEFAULT_IMAGES, SiteConvention::Left).unwrap();
        let v = CMat::from_fn(m, 1, |i, _| s.amplitudes[i]);
        let kept: Vec<usize> = (0..m).collect();
        let g = husimi_states(&v, &kept, m, SiteConvention::Left, dims).unwrap();
        assert_eq!(g.argmax(), (13, 29));
        assert!((g.value(13, 29) - 1.0).abs() < 1e-12);
        // O(1) Planck cells hold 90% of a single coherent state.
        assert!(support_cells(&g, 0.9).unwrap() <= 5.0);
    }

    #[test]
    fn uniform_grid_needs_every_cell() {
        let dims = GridDims::new(10, 20).unwrap();
        let g = HusimiGrid::from_values(dims, 50, vec![0.25; 200]).unwrap();
        assert!((support_cells(&g, 1.0).unwrap() - 50.0).abs() < 1e-12);
        assert!((support_cells(&g, 0.5).unwrap() - 25.0).abs() < 1e-12);
        assert!(support_cells(&g, 0.0).is_err());
        assert!(support_cells(&g, 1.5).is_err());
    }

    #[test]
    fn grid_dims_parse() {
        assert_eq!("256x128".parse::<GridDims>().unwrap(), GridDims { nq: 256, np: 128 });
        assert!("256".parse::<GridDims>().is_err());
        assert!("0x4".parse::<GridDims>().is_err());
    }

    #[test]
    fn mismatched_vectors_are_rejected() {
        let kept = vec![0, 2, 3];
        let v = CMat::zeros(4, 1);
        let dims = GridDims::new(4, 4).unwrap();
        assert!(husimi_states(&v, &kept, 8, SiteConvention::Left, dims).is_err());
        let v = CMat::zeros(3, 1);
        assert!(husimi_states(&v, &[0, 2, 9], 8, SiteConvention::Left, dims).is_err());
        assert!(husimi_states(&v, &[2, 0, 3], 8, SiteConvention::Left, dims).is_err());
    }

    #[test]
    fn binary_round_trip_keeps_values() {
        let dims = GridDims::new(3, 2).unwrap();
        let g = HusimiGrid::from_values(dims, 6, vec![0.0, 1.5, 2.0, 1e-300, 3.0, 0.25]).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 6 * 8);
        let back = HusimiGrid::read_binary(&buf[..], 6).unwrap();
        assert_eq!(back.values(), g.values());
    }
}
