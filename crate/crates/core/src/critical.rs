//! Empirical critical values of C under the RandNorm null.
//!
//! C'(α) = 1 − Xⁿ / (X̃ⁿ + Xⁿ), with X = log₁₀(M·effN) and X̃ = log₁₀(X₀.₅).
//! The tabulated half-points X₀.₅ are on the M·effN scale, so C'(α) = 0.5
//! exactly when M·effN = X₀.₅.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest M·effN the curves are evaluated at.
pub const CALIBRATED_MIN: f64 = 2.0;
/// Largest M·effN covered by the calibration runs (N = 500, M = 5).
pub const CALIBRATED_MAX: f64 = 2500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub alpha: f64,
    /// Shape exponent n.
    pub exponent: f64,
    /// M·effN at which C'(α) = 0.5.
    pub half_point: f64,
}

pub const CURVE_TABLE: [CurveRow; 5] = [
    CurveRow {
        alpha: 0.01,
        exponent: 2.85,
        half_point: 25.0,
    },
    CurveRow {
        alpha: 0.05,
        exponent: 2.50,
        half_point: 15.0,
    },
    CurveRow {
        alpha: 0.10,
        exponent: 2.25,
        half_point: 11.0,
    },
    CurveRow {
        alpha: 0.25,
        exponent: 1.90,
        half_point: 4.5,
    },
    CurveRow {
        alpha: 0.50,
        exponent: 1.70,
        half_point: 2.3,
    },
];

pub const ALPHAS: [f64; 5] = [0.01, 0.05, 0.10, 0.25, 0.50];

pub fn curve_row(alpha: f64) -> Result<&'static CurveRow> {
    CURVE_TABLE
        .iter()
        .find(|r| (r.alpha - alpha).abs() < 1e-9)
        .ok_or(Error::UntabulatedAlpha(alpha))
}

impl CurveRow {
    /// C'(α) at a given M·effN, without range checks.
    pub fn evaluate(&self, m_effn: f64) -> f64 {
        let x = m_effn.log10().powf(self.exponent);
        let half = self.half_point.log10().powf(self.exponent);
        1.0 - x / (half + x)
    }
}

pub fn critical_c_mn(alpha: f64, m_effn: f64) -> Result<f64> {
    let row = curve_row(alpha)?;
    if !(m_effn >= CALIBRATED_MIN) || !m_effn.is_finite() {
        return Err(Error::OutsideCalibratedRange(m_effn));
    }
    Ok(row.evaluate(m_effn))
}

/// Critical C at a tabulated alpha for M responses with effective N `effn`.
pub fn critical_c(alpha: f64, m: usize, effn: f64) -> Result<f64> {
    critical_c_mn(alpha, m as f64 * effn)
}

/// Where an observed C falls among the tabulated critical values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceBracket {
    pub m_effn: f64,
    /// Smallest tabulated alpha whose critical value C does not fall below.
    pub significant_at: Option<f64>,
    /// Next smaller tabulated alpha, at which C is not significant.
    pub not_significant_at: Option<f64>,
    /// (alpha, C'(alpha)) for every tabulated level.
    pub critical_values: Vec<(f64, f64)>,
}

impl SignificanceBracket {
    /// Tabulated alpha whose critical value is closest to the observed C.
    pub fn nearest_alpha(&self, c: f64) -> f64 {
        self.critical_values
            .iter()
            .min_by(|a, b| (a.1 - c).abs().total_cmp(&(b.1 - c).abs()))
            .map(|r| r.0)
            .unwrap_or(f64::NAN)
    }

    pub fn describe(&self) -> String {
        match (self.significant_at, self.not_significant_at) {
            (Some(a), None) => format!("p < {a}"),
            (None, Some(a)) => format!("p > {a}"),
            (Some(lo), Some(hi)) => format!("{hi} < p < {lo}"),
            (None, None) => "undetermined".into(),
        }
    }
}

pub fn significance_bracket(c: f64, m: usize, effn: f64) -> Result<SignificanceBracket> {
    let m_effn = m as f64 * effn;
    let critical_values = ALPHAS
        .iter()
        .map(|&a| critical_c_mn(a, m_effn).map(|v| (a, v)))
        .collect::<Result<Vec<_>>>()?;
    // Critical values decrease as alpha grows; C passes a level when C ≥ C'(α).
    let passed = critical_values.iter().position(|&(_, v)| c >= v);
    let (significant_at, not_significant_at) = match passed {
        Some(0) => (Some(ALPHAS[0]), None),
        Some(k) => (Some(ALPHAS[k]), Some(ALPHAS[k - 1])),
        None => (None, Some(ALPHAS[ALPHAS.len() - 1])),
    };
    Ok(SignificanceBracket {
        m_effn,
        significant_at,
        not_significant_at,
        critical_values,
    })
}

/// One row of the nomogram export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NomogramRow {
    pub m_effn: f64,
    pub critical: Vec<f64>,
}

/// Log-spaced C'(α) table for every tabulated alpha.
pub fn nomogram(lo: f64, hi: f64, points: usize) -> Result<Vec<NomogramRow>> {
    if !(lo >= CALIBRATED_MIN) || !(hi > lo) || points < 2 {
        return Err(Error::InvalidArgument(format!(
            "nomogram range must satisfy {CALIBRATED_MIN} <= lo < hi with at least 2 points"
        )));
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..points)
        .map(|k| {
            let mn = if k + 1 == points {
                hi
            } else {
                10f64.powf(a + (b - a) * k as f64 / (points - 1) as f64)
            };
            let critical = CURVE_TABLE.iter().map(|r| r.evaluate(mn)).collect();
            Ok(NomogramRow {
                m_effn: mn,
                critical,
            })
        })
        .collect()
}

pub fn nomogram_csv(rows: &[NomogramRow]) -> String {
    let mut out = String::from("m_effn");
    for a in ALPHAS {
        out.push_str(&format!(",c_alpha_{a}"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&r.m_effn.to_string());
        for v in &r.critical {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}
