//! Classical limit: the symmetrized standard map on the unit torus.
//!
//! The quantum step applies half a kick, free motion, then half a kick, so
//! its classical counterpart is
//!
//! ```text
//! p½ = p + (k/4π) sin 2πq
//! q' = q + p½                      (mod 1)
//! p' = p½ + (k/4π) sin 2πq'        (mod 1)
//! ```
//!
//! with the same `q` coordinate as the rotor sites. A trajectory escapes at
//! the first step after which `q'` lies in the opening; this mirrors the
//! quantum projector acting once per period.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::{fit_line, LineFit};
use crate::gridfile::{read_i32_grid, write_i32_grid, ESCAPE_MAGIC};
use crate::husimi::cell_centres;
use crate::rotor::Opening;

/// Escape-grid cell value for orbits still inside after `t_max` steps.
pub const NOT_ESCAPED: i32 = -1;
/// Escape-grid cell value for initial conditions already in the opening.
pub const STARTS_IN_OPENING: i32 = 0;
/// Minimum ensemble size for survival statistics.
pub const MIN_SURVIVAL_SAMPLES: usize = 1000;
/// Lyapunov estimates below this count as regular motion.
pub const CHAOTIC_THRESHOLD: f64 = 1e-3;

/// Point on the unit torus, both coordinates wrapped into `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        Self { q: wrap(q), p: wrap(p) }
    }
}

#[inline]
fn wrap(x: f64) -> f64 {
    let w = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// One step on the covering plane (no wrapping).
#[inline]
pub fn lifted_step(q: f64, p: f64, k: f64) -> (f64, f64) {
    let half = k / (4.0 * PI);
    let p_half = p + half * (2.0 * PI * q).sin();
    let q_next = q + p_half;
    (q_next, p_half + half * (2.0 * PI * q_next).sin())
}

/// One step of the symmetrized standard map.
#[inline]
pub fn map_step(x: PhasePoint, k: f64) -> PhasePoint {
    let (q, p) = lifted_step(x.q, x.p, k);
    PhasePoint::new(q, p)
}

/// Jacobian `∂(q', p')/∂(q, p)` of one step, row-major.
#[inline]
pub fn jacobian(x: PhasePoint, k: f64) -> [[f64; 2]; 2] {
    let (q_next, _) = lifted_step(x.q, x.p, k);
    let c1 = 0.5 * k * (2.0 * PI * x.q).cos();
    let c2 = 0.5 * k * (2.0 * PI * q_next).cos();
    [[1.0 + c1, 1.0], [c1 + c2 * (1.0 + c1), 1.0 + c2]]
}

/// Steps until the orbit of `x` lands in the opening, if within `t_max`.
pub fn escape_time(x: PhasePoint, k: f64, opening: &Opening, t_max: usize) -> Option<usize> {
    let mut x = x;
    for t in 1..=t_max {
        x = map_step(x, k);
        if opening.contains(x.q) {
            return Some(t);
        }
    }
    None
}

/// Mean dwell time `1/w` in map steps for an opening of width `w`.
pub fn sabine_dwell(opening: &Opening) -> f64 {
    opening.width().recip()
}

/// Escape times on an `n×n` cell-centred grid.
#[derive(Clone, Debug, PartialEq)]
pub struct EscapeZoneGrid {
    n: usize,
    t_max: usize,
    /// Row-major, `q` outer.
    cells: Vec<i32>,
}

impl EscapeZoneGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn cells(&self) -> &[i32] {
        &self.cells
    }

    pub fn cell(&self, iq: usize, ip: usize) -> i32 {
        self.cells[iq * self.n + ip]
    }

    /// Area fraction of the torus escaping at exactly step `t`.
    pub fn measure(&self, t: i32) -> f64 {
        self.cells.iter().filter(|&&c| c == t).count() as f64 / self.cells.len() as f64
    }

    /// Area fraction escaping within `1..=t`.
    pub fn measure_up_to(&self, t: i32) -> f64 {
        self.cells.iter().filter(|&&c| c >= 1 && c <= t).count() as f64 / self.cells.len() as f64
    }

    pub fn write_binary<W: Write>(&self, out: W) -> Result<()> {
        write_i32_grid(out, ESCAPE_MAGIC, self.n, self.n, &self.cells)
    }

    pub fn read_binary<R: Read>(input: R) -> Result<Self> {
        let (nq, np, cells) = read_i32_grid(input, ESCAPE_MAGIC)?;
        if nq != np {
            return Err(Error::Format(format!("escape grid must be square, got {nq}x{np}")));
        }
        let t_max = cells.iter().copied().max().unwrap_or(0).max(0) as usize;
        Ok(Self { n: nq, t_max, cells })
    }
}

pub fn escape_zones(k: f64, opening: &Opening, n: usize, t_max: usize) -> Result<EscapeZoneGrid> {
    check_kick(k)?;
    if n == 0 {
        return Err(invalid("escape grid needs n >= 1"));
    }
    if t_max > i32::MAX as usize {
        return Err(invalid("t_max too large"));
    }
    let axis = cell_centres(n);
    let cells: Vec<i32> = axis
        .par_iter()
        .flat_map_iter(|&q| {
            axis.iter().map(move |&p| {
                if opening.contains(q) {
                    return STARTS_IN_OPENING;
                }
                match escape_time(PhasePoint { q, p }, k, opening, t_max) {
                    Some(t) => t as i32,
                    None => NOT_ESCAPED,
                }
            })
        })
        .collect();
    Ok(EscapeZoneGrid { n, t_max, cells })
}

fn check_kick(k: f64) -> Result<()> {
    if !k.is_finite() || k < 0.0 {
        return Err(invalid(format!("kicking strength k={k} must be finite and >= 0")));
    }
    Ok(())
}

/// Random stream for trajectory `index` of a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Visited points of `n_traj` closed-system orbits of `n_iter` steps each,
/// starting points included, trajectory-major.
pub fn phase_portrait(k: f64, n_traj: usize, n_iter: usize, seed: u64) -> Result<Vec<PhasePoint>> {
    check_kick(k)?;
    let orbits: Vec<Vec<PhasePoint>> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i);
            let mut x = PhasePoint::new(rng.random::<f64>(), rng.random::<f64>());
            let mut orbit = Vec::with_capacity(n_iter + 1);
            orbit.push(x);
            for _ in 0..n_iter {
                x = map_step(x, k);
                orbit.push(x);
            }
            orbit
        })
        .collect();
    Ok(orbits.concat())
}

/// Surviving fraction `S(t)` for `t = 0..=t_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub surviving: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl SurvivalCurve {
    pub fn t_max(&self) -> usize {
        self.surviving.len() - 1
    }

    pub fn at(&self, t: usize) -> f64 {
        self.surviving[t]
    }

    /// Writes `t,S` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,S")?;
        for (t, s) in self.surviving.iter().enumerate() {
            writeln!(out, "{t},{s}")?;
        }
        Ok(())
    }
}

/// Monte Carlo survival of an ensemble uniform on the closed part of the torus.
pub fn survival(k: f64, opening: &Opening, samples: usize, t_max: usize, seed: u64) -> Result<SurvivalCurve> {
    check_kick(k)?;
    if samples < MIN_SURVIVAL_SAMPLES {
        return Err(invalid(format!(
            "survival needs at least {MIN_SURVIVAL_SAMPLES} samples, got {samples}"
        )));
    }
    if opening.width() >= 1.0 {
        return Err(invalid("opening leaves no initial conditions"));
    }
    let closed = 1.0 - opening.width();
    let escapes: Vec<Option<usize>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i);
            let u = rng.random::<f64>() * closed;
            let q = if u < opening.start() { u } else { u + opening.width() };
            let x = PhasePoint::new(q, rng.random::<f64>());
            escape_time(x, k, opening, t_max)
        })
        .collect();
    let mut escaped_at = vec![0usize; t_max + 1];
    for t in escapes.into_iter().flatten() {
        escaped_at[t] += 1;
    }
    let mut alive = samples;
    let surviving = escaped_at
        .iter()
        .map(|&e| {
            alive -= e;
            alive as f64 / samples as f64
        })
        .collect();
    Ok(SurvivalCurve {
        surviving,
        samples,
        seed,
    })
}

/// Slope-type estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub value: f64,
    pub stderr: f64,
    pub points: usize,
    pub t_lo: usize,
    pub t_hi: usize,
}

fn window(curve: &SurvivalCurve, t_lo: usize, t_hi: usize) -> Result<Vec<(f64, f64)>> {
    if t_lo > t_hi || t_hi > curve.t_max() {
        return Err(invalid(format!(
            "fit window [{t_lo}, {t_hi}] outside curve support [0, {}]",
            curve.t_max()
        )));
    }
    Ok((t_lo..=t_hi)
        .filter(|&t| curve.at(t) > 0.0)
        .map(|t| (t as f64, curve.at(t).ln()))
        .collect())
}

fn to_rate(fit: LineFit, t_lo: usize, t_hi: usize) -> RateFit {
    RateFit {
        value: -fit.slope,
        stderr: fit.slope_stderr,
        points: fit.points,
        t_lo,
        t_hi,
    }
}

/// Rate `r` of `S(t) ∝ e^{−rt}` from least squares on `(t, ln S)`.
pub fn fit_exponential_rate(curve: &SurvivalCurve, t_lo: usize, t_hi: usize) -> Result<RateFit> {
    let pts = window(curve, t_lo, t_hi)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(to_rate(fit_line(&xs, &ys, 4)?, t_lo, t_hi))
}

/// Exponent `α` of `S(t) ∝ t^{−α}` from least squares on `(ln t, ln S)`.
pub fn fit_power_tail(curve: &SurvivalCurve, t_lo: usize, t_hi: usize) -> Result<RateFit> {
    let pts = window(curve, t_lo.max(1), t_hi)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().map(|(t, s)| (t.ln(), s)).unzip();
    Ok(to_rate(fit_line(&xs, &ys, 4)?, t_lo, t_hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// Mean logarithmic stretching per step.
    pub lambda: f64,
    /// False when every attempt stayed below [`CHAOTIC_THRESHOLD`].
    pub chaotic: bool,
    pub attempts: usize,
}

const LYAPUNOV_ATTEMPTS: usize = 16;
const RENORMALIZE_EVERY: usize = 8;

/// Largest Lyapunov exponent from the tangent map.
///
/// Starting points are drawn from trajectory streams `0, 1, …` of `seed`;
/// a start whose estimate falls below [`CHAOTIC_THRESHOLD`] is taken to sit
/// on a regular island and is discarded.
pub fn lyapunov(k: f64, n_iter: usize, seed: u64, burn_in: usize) -> Result<LyapunovEstimate> {
    check_kick(k)?;
    if n_iter == 0 {
        return Err(invalid("Lyapunov estimate needs n_iter >= 1"));
    }
    let mut last = 0.0;
    for attempt in 0..LYAPUNOV_ATTEMPTS {
        let mut rng = trajectory_rng(seed, attempt as u64);
        let mut x = PhasePoint::new(rng.random::<f64>(), rng.random::<f64>());
        for _ in 0..burn_in {
            x = map_step(x, k);
        }
        let lambda = tangent_growth(x, k, n_iter);
        if !lambda.is_finite() {
            return Err(Error::LyapunovNonConvergence { attempts: attempt + 1 });
        }
        if lambda >= CHAOTIC_THRESHOLD {
            return Ok(LyapunovEstimate {
                lambda,
                chaotic: true,
                attempts: attempt + 1,
            });
        }
        last = lambda;
    }
    Ok(LyapunovEstimate {
        lambda: last,
        chaotic: false,
        attempts: LYAPUNOV_ATTEMPTS,
    })
}

fn tangent_growth(mut x: PhasePoint, k: f64, n_iter: usize) -> f64 {
    let mut v = [1.0f64, 0.0];
    let mut log_sum = 0.0;
    for i in 1..=n_iter {
        let j = jacobian(x, k);
        v = [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1]];
        x = map_step(x, k);
        if i % RENORMALIZE_EVERY == 0 || i == n_iter {
            let len = v[0].hypot(v[1]);
            log_sum += len.ln();
            v = [v[0] / len, v[1] / len];
        }
    }
    log_sum / n_iter as f64
}
