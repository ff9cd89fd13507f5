//! Counting statistics of resonance moduli and their scaling with `M`.
//!
//! `P(μ)` is the fraction of the `K` resonances with `|μ_n| > μ`. The
//! fraction in a lifetime window, `P_typ = P(μ_lo) − P(μ_hi)`, follows a power
//! law in `M` whose exponent is read off a log-log fit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::{fit_line, LineFit};
use crate::rotor::{open_map, OpenMapSpec, Opening, SiteConvention};
use crate::spectra::{check_band, eigenvalues, ResonanceSet};

/// Default lifetime window `(μ_lo, μ_hi)`.
pub const DEFAULT_WINDOW: Window = Window { lo: 0.1, hi: 0.98 };
/// Default system sizes of a sweep.
pub const DEFAULT_SWEEP: [usize; 4] = [160, 320, 640, 1280];

/// Open modulus interval `(lo, hi)` with `0 ≤ lo < hi ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        check_band(lo, hi)?;
        Ok(Self { lo, hi })
    }
}

impl Default for Window {
    fn default() -> Self {
        DEFAULT_WINDOW
    }
}

/// Sampled `P(μ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PCurve {
    pub thresholds: Vec<f64>,
    pub fractions: Vec<f64>,
    /// Denominator: number of kept sites.
    pub k: usize,
}

/// `P(μ) = #{|μ_n| > μ}/K` at each threshold.
pub fn p_curve(res: &ResonanceSet, thresholds: &[f64]) -> Result<PCurve> {
    if res.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(invalid("thresholds must lie in [0, 1]"));
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("thresholds must be sorted"));
    }
    let k = res.len();
    let fractions = thresholds
        .iter()
        .map(|&t| res.count_above(t) as f64 / k as f64)
        .collect();
    Ok(PCurve {
        thresholds: thresholds.to_vec(),
        fractions,
        k,
    })
}

/// `P(μ_lo) − P(μ_hi)`, identical to `count_in_band(lo, hi)/K`.
pub fn p_typ(res: &ResonanceSet, window: Window) -> Result<f64> {
    if res.is_empty() {
        return Err(Error::EmptyGrid);
    }
    check_band(window.lo, window.hi)?;
    // Computed as a single count so the identity with the band count is exact.
    Ok(res.count_in_band(window.lo, window.hi)? as f64 / res.len() as f64)
}

/// `(M, P_typ)` pairs sharing kick, opening and window.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    pub points: Vec<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Exponent of `P_typ ∝ M^slope`.
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// Exponent of `N_typ = M·P_typ`.
    pub count_exponent: f64,
}

/// Least squares on `(ln M, ln P_typ)`.
pub fn scaling_fit(series: &ScalingSeries) -> Result<ScalingFit> {
    let mut sizes: Vec<usize> = series.points.iter().map(|p| p.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            found: sizes.len(),
        });
    }
    if let Some(&(m, p)) = series.points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(invalid(format!("P_typ={p} at M={m} must be positive for a log-log fit")));
    }
    let xs: Vec<f64> = series.points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = series.points.iter().map(|p| p.1.ln()).collect();
    let LineFit {
        slope,
        intercept,
        slope_stderr,
        ..
    } = fit_line(&xs, &ys, 3)?;
    Ok(ScalingFit {
        slope,
        intercept,
        stderr: slope_stderr,
        count_exponent: slope + 1.0,
    })
}

/// `d − 1/(λ·τ_dwell)`.
pub fn chaotic_exponent(d: f64, lambda: f64, dwell: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(dwell > 0.0) {
        return Err(invalid(format!(
            "Lyapunov exponent {lambda} and dwell time {dwell} must be positive"
        )));
    }
    Ok(d - 1.0 / (lambda * dwell))
}

/// Per-`M` entry of a sweep report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub dimension: usize,
    pub kept: usize,
    /// `#{|μ| ≤ μ_lo}`.
    pub below_window: usize,
    pub in_window: usize,
    /// `#{|μ| ≥ μ_hi}`.
    pub above_window: usize,
    pub p_typ: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kick: f64,
    pub opening: Opening,
    pub sites: SiteConvention,
    pub window: Window,
    pub entries: Vec<SweepEntry>,
    /// Absent when fewer than three sizes or a zero `P_typ` prevent a fit.
    pub fit: Option<ScalingFit>,
    pub fit_error: Option<String>,
}

impl SweepReport {
    pub fn series(&self) -> ScalingSeries {
        ScalingSeries {
            points: self.entries.iter().map(|e| (e.dimension, e.p_typ)).collect(),
        }
    }
}

pub fn sweep_entry(res: &ResonanceSet, window: Window) -> Result<SweepEntry> {
    let in_window = res.count_in_band(window.lo, window.hi)?;
    let above = res.effective_moduli().filter(|&m| m >= window.hi).count();
    Ok(SweepEntry {
        dimension: res.spec().map_or(res.len(), |s| s.dimension),
        kept: res.len(),
        below_window: res.len() - in_window - above,
        in_window,
        above_window: above,
        p_typ: p_typ(res, window)?,
    })
}

/// Spectra of the open map for every size in `dimensions`, computed in parallel.
pub fn sweep_spectra(dimensions: &[usize], kick: f64, opening: Opening, sites: SiteConvention) -> Result<Vec<ResonanceSet>> {
    dimensions
        .par_iter()
        .map(|&m| {
            let spec = OpenMapSpec::new(m, kick, opening, sites)?;
            eigenvalues(&open_map(&spec)?)
        })
        .collect()
}

/// Sweep report over precomputed spectra sharing kick, opening and sites.
pub fn sweep_report(
    spectra: &[ResonanceSet],
    kick: f64,
    opening: Opening,
    sites: SiteConvention,
    window: Window,
) -> Result<SweepReport> {
    check_band(window.lo, window.hi)?;
    let entries = spectra
        .iter()
        .map(|res| sweep_entry(res, window))
        .collect::<Result<Vec<_>>>()?;
    let mut report = SweepReport {
        kick,
        opening,
        sites,
        window,
        entries,
        fit: None,
        fit_error: None,
    };
    match scaling_fit(&report.series()) {
        Ok(fit) => report.fit = Some(fit),
        Err(e) => report.fit_error = Some(e.to_string()),
    }
    Ok(report)
}

/// Eigenvalues of every size in `dimensions` and the scaling fit.
pub fn weyl_sweep(
    dimensions: &[usize],
    kick: f64,
    opening: Opening,
    sites: SiteConvention,
    window: Window,
) -> Result<SweepReport> {
    check_band(window.lo, window.hi)?;
    let spectra = sweep_spectra(dimensions, kick, opening, sites)?;
    sweep_report(&spectra, kick, opening, sites, window)
}
