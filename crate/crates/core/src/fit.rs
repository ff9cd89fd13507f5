//! Ordinary least-squares straight lines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (zero for a perfect fit or two points).
    pub slope_stderr: f64,
    pub points: usize,
}

/// Unweighted least squares `y ≈ slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64], min_points: usize) -> Result<LineFit> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < min_points.max(2) {
        return Err(Error::TooFewPoints {
            needed: min_points.max(2),
            found: n,
        });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let ssr: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let e = y - (slope * x + intercept);
                e * e
            })
            .sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        points: n,
    })
}
