//! Run configuration: flag and config-file settings, merged and resolved.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use fractal_weyl::husimi::GridDims;
use fractal_weyl::rotor::{Opening, SiteConvention};
use fractal_weyl::spectra::SchurOrder;
use fractal_weyl::weyl::{Window, DEFAULT_SWEEP};
use serde::{Deserialize, Serialize};

/// Closed pair `a:b` of reals; interpretation (half-open, strict) is up to the consumer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for Interval {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .with_context(|| format!("interval {s:?} must look like a:b"))?;
        let lo: f64 = a.trim().parse().with_context(|| format!("bad lower bound in {s:?}"))?;
        let hi: f64 = b.trim().parse().with_context(|| format!("bad upper bound in {s:?}"))?;
        ensure!(lo.is_finite() && hi.is_finite() && lo < hi, "interval {s:?} needs finite a < b");
        Ok(Self { lo, hi })
    }
}

impl TryFrom<String> for Interval {
    type Error = anyhow::Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Interval> for String {
    fn from(i: Interval) -> String {
        i.to_string()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

/// Inclusive range of map steps `a:b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Steps {
    pub lo: usize,
    pub hi: usize,
}

impl FromStr for Steps {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .with_context(|| format!("step range {s:?} must look like a:b"))?;
        let lo = a.trim().parse().with_context(|| format!("bad first step in {s:?}"))?;
        let hi = b.trim().parse().with_context(|| format!("bad last step in {s:?}"))?;
        ensure!(lo < hi, "step range {s:?} needs a < b");
        Ok(Self { lo, hi })
    }
}

impl TryFrom<String> for Steps {
    type Error = anyhow::Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Steps> for String {
    fn from(s: Steps) -> String {
        format!("{}:{}", s.lo, s.hi)
    }
}

/// Which vectors a Husimi grid is built from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Leading Schur vectors of the ordered decomposition.
    #[default]
    Schur,
    /// Unit-norm right eigenvectors of the band.
    Eigenvectors,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    SchurHusimi,
    ClassicalEscape,
    ClassicalSurvival,
    PhasePortrait,
    WeylSweep,
}

impl Command {
    fn takes_single_size(self) -> bool {
        matches!(self, Command::Spectrum | Command::SchurHusimi)
    }
}

/// Settings as given on the command line or in a config file; unset fields take defaults.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Hilbert-space dimension(s), comma separated for sweeps.
    #[arg(long = "M", value_delimiter = ',')]
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub dimensions: Option<Vec<usize>>,
    /// Kicking strength.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Opening `a:b` in q, half-open.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open: Option<Interval>,
    /// Site positions: `left` (n/M) or `centered` ((n+1/2)/M).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<SiteConvention>,
    /// Schur ordering: `fast` or `slow`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<SchurOrder>,
    /// Modulus band `lo:hi`, strict on both ends.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<Interval>,
    /// Vectors entering the Husimi grid.
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Basis>,
    /// Husimi grid `NQxNP`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDims>,
    /// Lifetime window `lo:hi` for P_typ.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Interval>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads (outputs do not depend on it).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Escape-zone grid side.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Longest escape time tracked.
    #[arg(long = "t-max")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<usize>,
    /// Survival ensemble size.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long = "n-traj")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[arg(long = "n-iter")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_iter: Option<usize>,
    /// Exponential fit range `t_lo:t_hi`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<Steps>,
    /// Power-law tail fit range `t_lo:t_hi`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<Steps>,
    /// Tangent-map iterations for the Lyapunov estimate.
    #[arg(long = "lyapunov-iter")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov_iter: Option<usize>,
}

impl Settings {
    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Field-wise `self` where set, otherwise `fallback`.
    pub fn or(self, fallback: Settings) -> Settings {
        Settings {
            dimensions: self.dimensions.or(fallback.dimensions),
            k: self.k.or(fallback.k),
            open: self.open.or(fallback.open),
            sites: self.sites.or(fallback.sites),
            order: self.order.or(fallback.order),
            band: self.band.or(fallback.band),
            basis: self.basis.or(fallback.basis),
            grid: self.grid.or(fallback.grid),
            window: self.window.or(fallback.window),
            seed: self.seed.or(fallback.seed),
            threads: self.threads.or(fallback.threads),
            out: self.out.or(fallback.out),
            n: self.n.or(fallback.n),
            t_max: self.t_max.or(fallback.t_max),
            samples: self.samples.or(fallback.samples),
            n_traj: self.n_traj.or(fallback.n_traj),
            n_iter: self.n_iter.or(fallback.n_iter),
            fit: self.fit.or(fallback.fit),
            tail: self.tail.or(fallback.tail),
            lyapunov_iter: self.lyapunov_iter.or(fallback.lyapunov_iter),
        }
    }
}

/// Fully resolved configuration; echoed verbatim into every manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "M")]
    pub dimensions: Vec<usize>,
    pub k: f64,
    pub open: Interval,
    pub sites: SiteConvention,
    pub order: SchurOrder,
    pub band: Interval,
    pub basis: Basis,
    pub grid: GridDims,
    pub window: Interval,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub n: usize,
    pub t_max: usize,
    pub samples: usize,
    pub n_traj: usize,
    pub n_iter: usize,
    pub fit: Steps,
    pub tail: Steps,
    pub lyapunov_iter: usize,
}

impl RunConfig {
    pub fn resolve(command: Command, s: Settings) -> Result<Self> {
        let dimensions = s.dimensions.unwrap_or_else(|| match command {
            Command::WeylSweep => DEFAULT_SWEEP.to_vec(),
            _ => vec![160],
        });
        if command.takes_single_size() && dimensions.len() != 1 {
            bail!("{command:?} takes a single --M, got {dimensions:?}");
        }
        let order = s.order.unwrap_or(SchurOrder::Fast);
        let band = s.band.unwrap_or(match order {
            SchurOrder::Fast => Interval { lo: 0.0, hi: 0.1 },
            SchurOrder::Slow => Interval { lo: 0.98, hi: 1.0 },
        });
        let t_max = s.t_max.unwrap_or(match command {
            Command::ClassicalEscape => 4,
            _ => 1000,
        });
        let config = RunConfig {
            command,
            dimensions,
            k: s.k.unwrap_or(2.0),
            open: s.open.unwrap_or(Interval { lo: 0.0, hi: 0.2 }),
            sites: s.sites.unwrap_or_default(),
            order,
            band,
            basis: s.basis.unwrap_or_default(),
            grid: s.grid.unwrap_or_default(),
            window: s.window.unwrap_or(Interval { lo: 0.1, hi: 0.98 }),
            seed: s.seed.unwrap_or(0),
            threads: s.threads,
            out: s.out.unwrap_or_else(|| PathBuf::from("out")),
            n: s.n.unwrap_or(512),
            t_max,
            samples: s.samples.unwrap_or(100_000),
            n_traj: s.n_traj.unwrap_or(100),
            n_iter: s.n_iter.unwrap_or(1000),
            fit: s.fit.unwrap_or(Steps { lo: 2, hi: 15 }),
            tail: s.tail.unwrap_or(Steps { lo: 100, hi: 1000 }),
            lyapunov_iter: s.lyapunov_iter.unwrap_or(1_000_000),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.dimensions.is_empty(), "--M needs at least one dimension");
        ensure!(self.threads != Some(0), "--threads must be at least 1");
        self.opening()?;
        self.modulus_window()?;
        Window::new(self.band.lo, self.band.hi).context("invalid --band")?;
        Ok(())
    }

    pub fn opening(&self) -> Result<Opening> {
        Opening::new(self.open.lo, self.open.hi).context("invalid --open")
    }

    pub fn modulus_window(&self) -> Result<Window> {
        Window::new(self.window.lo, self.window.hi).context("invalid --window")
    }

    /// The single dimension of a non-sweep command.
    pub fn dimension(&self) -> usize {
        self.dimensions[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intervals_round_trip_through_text() {
        let i: Interval = "0.0:0.2".parse().unwrap();
        assert_eq!(i, Interval { lo: 0.0, hi: 0.2 });
        assert_eq!(i.to_string(), "0:0.2");
        assert!("0.3:0.1".parse::<Interval>().is_err());
        assert!("0.3".parse::<Interval>().is_err());
        let json = serde_json::to_string(&i).unwrap();
        assert_eq!(json, "\"0:0.2\"");
        assert_eq!(serde_json::from_str::<Interval>(&json).unwrap(), i);
    }

    #[test]
    fn flags_win_over_file() {
        let file: Settings = serde_json::from_str(r#"{"M": [320], "k": 7.5, "seed": 3}"#).unwrap();
        let flags = Settings {
            k: Some(2.0),
            ..Settings::default()
        };
        let merged = flags.or(file);
        assert_eq!(merged.k, Some(2.0));
        assert_eq!(merged.seed, Some(3));
        assert_eq!(merged.dimensions, Some(vec![320]));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<Settings>(r#"{"kick": 2.0}"#).is_err());
    }

    #[test]
    fn defaults_depend_on_command() {
        let sweep = RunConfig::resolve(Command::WeylSweep, Settings::default()).unwrap();
        assert_eq!(sweep.dimensions, DEFAULT_SWEEP.to_vec());
        let slow = RunConfig::resolve(
            Command::SchurHusimi,
            Settings {
                order: Some(SchurOrder::Slow),
                ..Settings::default()
            },
        )
        .unwrap();
        assert_eq!(slow.band, Interval { lo: 0.98, hi: 1.0 });
        let multi = Settings {
            dimensions: Some(vec![160, 320]),
            ..Settings::default()
        };
        assert!(RunConfig::resolve(Command::Spectrum, multi).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = RunConfig::resolve(Command::ClassicalSurvival, Settings::default()).unwrap();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
