//! The kicked rotator on an `M`-site lattice and its truncation to an open map.
//!
//! The closed one-step propagator is
//!
//! ```text
//! F_nm = (iM)^{-1/2} exp[ iπ(m−n)²/M − iMk/(4π) (cos 2πn/M + cos 2πm/M) ]
//! ```
//!
//! and the open map keeps only the rows and columns of sites whose
//! position `q_n` lies outside the absorbing interval.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{CMat, C64};

/// Sites closer than this to an opening edge are snapped onto it.
const EDGE_SNAP: f64 = 1e-12;

/// Where lattice site `n` sits on the unit circle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteConvention {
    /// `q_n = n / M`
    #[default]
    Left,
    /// `q_n = (n + ½) / M`
    Centered,
}

impl SiteConvention {
    #[inline]
    pub fn position(self, n: usize, dimension: usize) -> f64 {
        let offset = match self {
            SiteConvention::Left => 0.0,
            SiteConvention::Centered => 0.5,
        };
        (n as f64 + offset) / dimension as f64
    }
}

impl std::str::FromStr for SiteConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Self::Left),
            "centered" | "centred" => Ok(Self::Centered),
            other => Err(invalid(format!("unknown site convention {other:?}"))),
        }
    }
}

/// Half-open interval `[start, end)` of the position coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Opening {
    start: f64,
    end: f64,
}

impl Opening {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || start < 0.0 || end > 1.0 || start >= end {
            return Err(invalid(format!(
                "opening [{start}, {end}) must satisfy 0 <= start < end <= 1"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    /// Membership of a wrapped coordinate `q ∈ [0, 1)`.
    #[inline]
    pub fn contains(&self, q: f64) -> bool {
        q >= self.start && q < self.end
    }

    /// Membership of lattice position `q`, tolerant of rounding at the edges.
    #[inline]
    fn contains_site(&self, q: f64) -> bool {
        q >= self.start - EDGE_SNAP && q < self.end - EDGE_SNAP
    }
}

impl fmt::Display for Opening {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// One open kicked-rotator instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenMapSpec {
    /// Hilbert-space dimension `M`, the inverse effective Planck constant.
    pub dimension: usize,
    /// Kicking strength `k`.
    pub kick: f64,
    pub opening: Opening,
    #[serde(default)]
    pub sites: SiteConvention,
}

impl OpenMapSpec {
    pub fn new(dimension: usize, kick: f64, opening: Opening, sites: SiteConvention) -> Result<Self> {
        let spec = Self {
            dimension,
            kick,
            opening,
            sites,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(invalid(format!("dimension M={} must be at least 2", self.dimension)));
        }
        if !self.kick.is_finite() || self.kick < 0.0 {
            return Err(invalid(format!("kicking strength k={} must be finite and >= 0", self.kick)));
        }
        // Re-run the interval checks in case the spec was deserialized.
        Opening::new(self.opening.start, self.opening.end)?;
        if self.opening.width() >= 1.0 {
            return Err(invalid("opening must leave part of the circle closed"));
        }
        Ok(())
    }

    pub fn site_position(&self, n: usize) -> f64 {
        self.sites.position(n, self.dimension)
    }
}

impl fmt::Display for OpenMapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M={} k={} opening={} sites={:?}",
            self.dimension, self.kick, self.opening, self.sites
        )
    }
}

/// Dense unitary matrix (the closed-system Floquet operator).
#[derive(Clone, Debug)]
pub struct UnitaryMatrix(CMat);

impl UnitaryMatrix {
    pub fn dimension(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }
}

/// Removed and kept lattice sites, both ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteSplit {
    pub removed: Vec<usize>,
    pub kept: Vec<usize>,
}

/// The open map restricted to its kept sites.
#[derive(Clone, Debug)]
pub struct OpenMap {
    kept_sites: Vec<usize>,
    matrix: CMat,
    spec: OpenMapSpec,
}

impl OpenMap {
    pub fn kept_sites(&self) -> &[usize] {
        &self.kept_sites
    }

    /// The `K×K` kept-site block of `F`.
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn spec(&self) -> &OpenMapSpec {
        &self.spec
    }

    /// `K = M − N_open`.
    pub fn dimension(&self) -> usize {
        self.kept_sites.len()
    }

    pub fn removed_count(&self) -> usize {
        self.spec.dimension - self.kept_sites.len()
    }

    /// Embeds the block back into the full space as `QFQ`.
    pub fn embedded(&self) -> CMat {
        let m = self.spec.dimension;
        let mut full = CMat::zeros(m, m);
        for (j, &sj) in self.kept_sites.iter().enumerate() {
            for (i, &si) in self.kept_sites.iter().enumerate() {
                full[(si, sj)] = self.matrix[(i, j)];
            }
        }
        full
    }
}

/// Floquet matrix of the closed kicked rotator.
pub fn build_floquet(spec: &OpenMapSpec) -> Result<UnitaryMatrix> {
    spec.validate()?;
    Ok(UnitaryMatrix(floquet_entries(spec.dimension, spec.kick)))
}

/// Evaluates the Floquet matrix for any `M ≥ 1`; callers validate.
pub(crate) fn floquet_entries(m: usize, kick: f64) -> CMat {
    let mf = m as f64;
    // Principal branch: (iM)^{-1/2} = e^{-iπ/4} / √M.
    let prefactor = C64::from_polar(mf.sqrt().recip(), -PI / 4.0);
    let kick_scale = mf * kick / (4.0 * PI);
    let kicks: Vec<C64> = (0..m)
        .map(|n| C64::from_polar(1.0, -kick_scale * (2.0 * PI * n as f64 / mf).cos()))
        .collect();
    // exp(iπ d/M) only depends on d mod 2M, which keeps the phase argument small.
    let period = 2 * m;
    let free: Vec<C64> = (0..period)
        .map(|d| C64::from_polar(1.0, PI * d as f64 / mf))
        .collect();
    CMat::from_fn(m, m, |n, col| {
        let diff = n.abs_diff(col);
        let d = (diff * diff) % period;
        prefactor * free[d] * (kicks[n] * kicks[col])
    })
}

/// Sites absorbed by the opening under the spec's site convention.
pub fn opening_mask(spec: &OpenMapSpec) -> Result<SiteSplit> {
    spec.validate()?;
    let (removed, kept): (Vec<usize>, Vec<usize>) = (0..spec.dimension)
        .partition(|&n| spec.opening.contains_site(spec.site_position(n)));
    if kept.is_empty() {
        return Err(Error::NothingKept {
            start: spec.opening.start,
            end: spec.opening.end,
            dimension: spec.dimension,
        });
    }
    Ok(SiteSplit { removed, kept })
}

/// Truncates `F` to the kept sites.
pub fn build_open_map(floquet: &UnitaryMatrix, spec: &OpenMapSpec) -> Result<OpenMap> {
    if floquet.dimension() != spec.dimension {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension,
            found: floquet.dimension(),
        });
    }
    let split = opening_mask(spec)?;
    let matrix = floquet.0.submatrix(&split.kept, &split.kept);
    Ok(OpenMap {
        kept_sites: split.kept,
        matrix,
        spec: spec.clone(),
    })
}

/// Convenience: Floquet matrix plus truncation in one call.
pub fn open_map(spec: &OpenMapSpec) -> Result<OpenMap> {
    build_open_map(&build_floquet(spec)?, spec)
}
