//! Error decomposition for one response series.
//!
//! The projection line Yp is the least-squares regression of modeled on
//! observed values. Total error Yobs − Ymod splits into a systematic part
//! Yobs − Yp and a random part Yp − Ymod. Each part is divided by a scalar
//! (by default the sample standard deviation of Yobs), squared and averaged
//! over the N pairs, giving MSEsys, MSEran and MSEtot, and finally
//! C = −(MSEtot − 2)/2.

use serde::{Deserialize, Serialize};

use crate::dataio::{ScalarKind, MIN_PAIRS};
use crate::error::{Error, Result};
use crate::numeric::{self, sum};

/// One observed/modeled pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub observed: f64,
    pub modeled: f64,
}

impl Pair {
    pub fn new(observed: f64, modeled: f64) -> Self {
        Self { observed, modeled }
    }
}

pub fn pairs_from(observed: &[f64], modeled: &[f64]) -> Vec<Pair> {
    observed
        .iter()
        .zip(modeled)
        .map(|(&o, &m)| Pair::new(o, m))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionLine {
    pub intercept: f64,
    pub slope: f64,
    /// Fitted values Yp, one per pair.
    pub fitted: Vec<f64>,
}

impl ProjectionLine {
    pub fn at(&self, observed: f64) -> f64 {
        self.intercept + self.slope * observed
    }
}

/// Least-squares regression of modeled on observed values.
pub fn fit_projection(pairs: &[Pair]) -> Result<ProjectionLine> {
    let n = pairs.len();
    if n < MIN_PAIRS {
        return Err(Error::InsufficientPairs {
            series: String::new(),
            n,
            min: MIN_PAIRS,
        });
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.observed).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.modeled).collect();
    let mx = numeric::mean(&x);
    let my = numeric::mean(&y);
    let sxx = sum(x.iter().map(|v| (v - mx) * (v - mx)));
    if sxx <= 0.0 {
        return Err(Error::DegenerateObserved(None));
    }
    let sxy = sum(x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // Evaluate around the means so the residuals sum to zero without cancellation.
    let fitted = x.iter().map(|v| my + slope * (v - mx)).collect();
    Ok(ProjectionLine {
        intercept,
        slope,
        fitted,
    })
}

/// Value of the chosen scalar for an observed series.
pub fn scalar_value(observed: &[f64], kind: ScalarKind) -> Result<f64> {
    if observed.len() < MIN_PAIRS {
        return Err(Error::InsufficientPairs {
            series: String::new(),
            n: observed.len(),
            min: MIN_PAIRS,
        });
    }
    let value = match kind {
        ScalarKind::SampleStdDev => numeric::sample_std_dev(observed),
        ScalarKind::InterquartileRange => {
            let s = numeric::sorted_copy(observed);
            numeric::quantile_sorted(&s, 0.75) - numeric::quantile_sorted(&s, 0.25)
        }
        ScalarKind::Mean => numeric::mean(observed),
        ScalarKind::Median => numeric::quantile_sorted(&numeric::sorted_copy(observed), 0.5),
    };
    if value == 0.0 || !value.is_finite() {
        return Err(Error::DegenerateScalar {
            kind: kind.label(),
            series: None,
        });
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPartition {
    pub n: usize,
    pub scalar_kind: ScalarKind,
    pub scalar: f64,
    pub line: ProjectionLine,
    /// Yobs − Ymod per pair.
    pub total_err: Vec<f64>,
    /// Yobs − Yp per pair.
    pub sys_err: Vec<f64>,
    /// Yp − Ymod per pair.
    pub ran_err: Vec<f64>,
    pub mse_sys: f64,
    pub mse_ran: f64,
    pub mse_tot: f64,
    pub c: f64,
    /// Mean of scaled SysErr × scaled RanErr. Zero up to rounding.
    pub cross_product: f64,
}

/// Systematic and random fractions of MSEtot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorShares {
    pub systematic: f64,
    pub random: f64,
    /// MSEtot is zero; both shares are reported as 0.
    pub perfect_fit: bool,
}

impl ErrorPartition {
    pub fn shares(&self) -> ErrorShares {
        if self.mse_tot == 0.0 {
            return ErrorShares {
                systematic: 0.0,
                random: 0.0,
                perfect_fit: true,
            };
        }
        ErrorShares {
            systematic: self.mse_sys / self.mse_tot,
            random: self.mse_ran / self.mse_tot,
            perfect_fit: false,
        }
    }

    /// |MSEtot − (MSEsys + MSEran)|.
    pub fn additivity_gap(&self) -> f64 {
        (self.mse_tot - (self.mse_sys + self.mse_ran)).abs()
    }
}

/// C from the total mean squared scaled error.
pub fn consilience(mse_tot: f64) -> f64 {
    -(mse_tot - 2.0) / 2.0
}

/// Full decomposition of one series.
pub fn decompose(pairs: &[Pair], kind: ScalarKind) -> Result<ErrorPartition> {
    let line = fit_projection(pairs)?;
    let observed: Vec<f64> = pairs.iter().map(|p| p.observed).collect();
    let scalar = scalar_value(&observed, kind)?;
    decompose_with(pairs, &line, kind, scalar)
}

/// Decomposition with a precomputed projection line and scalar.
pub fn decompose_with(
    pairs: &[Pair],
    line: &ProjectionLine,
    kind: ScalarKind,
    scalar: f64,
) -> Result<ErrorPartition> {
    let n = pairs.len();
    let nf = n as f64;
    let mut total_err = Vec::with_capacity(n);
    let mut sys_err = Vec::with_capacity(n);
    let mut ran_err = Vec::with_capacity(n);
    for (p, &yp) in pairs.iter().zip(&line.fitted) {
        total_err.push(p.observed - p.modeled);
        sys_err.push(p.observed - yp);
        ran_err.push(yp - p.modeled);
    }
    let scaled_mean_sq = |v: &[f64]| sum(v.iter().map(|e| (e / scalar) * (e / scalar))) / nf;
    let mse_sys = scaled_mean_sq(&sys_err);
    let mse_ran = scaled_mean_sq(&ran_err);
    let mse_tot = scaled_mean_sq(&total_err);
    let cross_product = sum(sys_err
        .iter()
        .zip(&ran_err)
        .map(|(s, r)| (s / scalar) * (r / scalar)))
        / nf;
    Ok(ErrorPartition {
        n,
        scalar_kind: kind,
        scalar,
        line: line.clone(),
        total_err,
        sys_err,
        ran_err,
        mse_sys,
        mse_ran,
        mse_tot,
        c: consilience(mse_tot),
        cross_product,
    })
}
