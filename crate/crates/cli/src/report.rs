//! The analysis report: JSON is canonical, the text table is rendered from it.

use serde::{Deserialize, Serialize};

use consilience::conventional::{self, Mssd, TestResult};
use consilience::critical::{self, SignificanceBracket};
use consilience::decomposition::{decompose, ErrorShares};
use consilience::weighting::WeightTable;
use consilience::{Config, Dataset, Result, ScalarKind};

use crate::format::{opt6, sig6, Table};

pub const TOOL_NAME: &str = "consilience";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub input_sha256: String,
    /// Effective configuration after command-line overrides.
    pub config: Config,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(input_sha256: String, config: Config, seed: Option<u64>) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            input_sha256,
            config,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub name: String,
    pub n: usize,
    /// Usable (observed, modeled) pairs in case order.
    pub pairs: Vec<[f64; 2]>,
    pub scalar: f64,
    pub intercept: f64,
    pub slope: f64,
    pub mse_sys: f64,
    pub mse_ran: f64,
    pub mse_tot: f64,
    pub c: f64,
    pub cross_product: f64,
    /// None when either series is constant.
    pub r_squared: Option<f64>,
    pub shares: ErrorShares,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalEntry {
    pub alpha: f64,
    pub critical_c: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub m_effn: f64,
    pub levels: Vec<CriticalEntry>,
    pub bracket: SignificanceBracket,
    pub nearest_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub scalar_kind: ScalarKind,
    /// Closed-form landmark values only hold for the sample standard deviation.
    pub landmark_scalar: bool,
    pub series: Vec<SeriesReport>,
    pub weights: WeightTable,
    pub joint_c: f64,
    pub effn: f64,
    pub m_effn: f64,
    /// None when M·effN is below the calibrated range.
    pub significance: Option<Significance>,
    pub warnings: Vec<String>,
}

/// Tabulated alphas requested in the config, or all of them.
pub fn requested_alphas(config: &Config) -> Result<Vec<f64>> {
    match &config.alphas {
        Some(list) if !list.is_empty() => list
            .iter()
            .map(|&a| critical::curve_row(a).map(|r| r.alpha))
            .collect(),
        _ => Ok(critical::ALPHAS.to_vec()),
    }
}

pub fn analyze(dataset: &Dataset, config: &Config, input_sha256: String) -> Result<AnalysisReport> {
    dataset.check_analyzable()?;
    let kind = config.scalar_kind();
    let alphas = requested_alphas(config)?;
    let mut warnings = Vec::new();
    if !kind.is_landmark() {
        warnings.push(format!(
            "scalar '{}' is non-landmark: closed-form reference values assume the sample standard deviation",
            kind.label()
        ));
    }

    let mut series = Vec::with_capacity(dataset.m());
    for s in &dataset.series {
        let pairs = s.usable_pairs();
        let part = decompose(&pairs, kind).map_err(|e| e.in_series(&s.name))?;
        let shares = part.shares();
        if shares.perfect_fit {
            warnings.push(format!(
                "series '{}': perfect fit, error shares undefined",
                s.name
            ));
        }
        series.push(SeriesReport {
            name: s.name.clone(),
            n: part.n,
            pairs: pairs.iter().map(|p| [p.observed, p.modeled]).collect(),
            scalar: part.scalar,
            intercept: part.line.intercept,
            slope: part.line.slope,
            mse_sys: part.mse_sys,
            mse_ran: part.mse_ran,
            mse_tot: part.mse_tot,
            c: part.c,
            cross_product: part.cross_product,
            r_squared: conventional::r_squared(&pairs).ok(),
            shares,
        });
    }

    let weights = WeightTable::build(dataset, config.overlap_policy.unwrap_or_default())?;
    warnings.extend(weights.warnings.iter().cloned());
    let cs: Vec<f64> = series.iter().map(|s| s.c).collect();
    let joint_c = weights.joint_c(&cs);
    let m_effn = weights.m_effn();

    let significance = if m_effn >= critical::CALIBRATED_MIN {
        let bracket = critical::significance_bracket(joint_c, weights.m(), weights.effn)?;
        let levels = alphas
            .iter()
            .map(|&a| {
                critical::critical_c_mn(a, m_effn).map(|v| CriticalEntry {
                    alpha: a,
                    critical_c: v,
                    significant: joint_c >= v,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if m_effn > critical::CALIBRATED_MAX {
            warnings.push(format!(
                "M·effN = {m_effn} exceeds the calibrated range ({}); critical values are extrapolated",
                critical::CALIBRATED_MAX
            ));
        }
        Some(Significance {
            m_effn,
            levels,
            nearest_alpha: bracket.nearest_alpha(joint_c),
            bracket,
        })
    } else {
        warnings.push(format!(
            "M·effN = {m_effn} is below the calibrated range; no critical values reported"
        ));
        None
    };

    Ok(AnalysisReport {
        provenance: Provenance::new(input_sha256, config.clone(), config.seed),
        scalar_kind: kind,
        landmark_scalar: kind.is_landmark(),
        series,
        effn: weights.effn,
        m_effn,
        weights,
        joint_c,
        significance,
        warnings,
    })
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "{} {}  input sha256 {}\nscalar: {}{}\n\n",
            self.provenance.tool,
            self.provenance.version,
            self.provenance.input_sha256,
            self.scalar_kind.label(),
            if self.landmark_scalar {
                ""
            } else {
                " (non-landmark)"
            }
        );
        let mut t = Table::new([
            "series",
            "N",
            "MSEsys",
            "MSEran",
            "MSEtot",
            "C",
            "R2",
            "sys share",
            "ran share",
            "weight",
        ]);
        for (k, s) in self.series.iter().enumerate() {
            t.row(vec![
                s.name.clone(),
                s.n.to_string(),
                sig6(s.mse_sys),
                sig6(s.mse_ran),
                sig6(s.mse_tot),
                sig6(s.c),
                opt6(s.r_squared),
                sig6(s.shares.systematic),
                sig6(s.shares.random),
                sig6(self.weights.w_final[k]),
            ]);
        }
        out.push_str(&t.render());
        out.push_str(&format!(
            "\njoint C  {}\neffN     {}\nM·effN   {}\n",
            sig6(self.joint_c),
            sig6(self.effn),
            sig6(self.m_effn)
        ));
        if let Some(sig) = &self.significance {
            let mut t = Table::new(["alpha", "critical C", "significant"]);
            for l in &sig.levels {
                t.row(vec![
                    sig6(l.alpha),
                    sig6(l.critical_c),
                    if l.significant { "yes" } else { "no" }.into(),
                ]);
            }
            out.push('\n');
            out.push_str(&t.render());
            out.push_str(&format!(
                "\nsignificance: {} (nearest tabulated alpha {})\n",
                sig.bracket.describe(),
                sig6(sig.nearest_alpha)
            ));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesComparison {
    pub name: String,
    pub n: usize,
    pub c: f64,
    pub r_squared: Option<f64>,
    pub residual_regression: TestResult,
    pub wilcoxon: TestResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mssd: Option<Mssd>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mssd_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub provenance: Provenance,
    pub series: Vec<SeriesComparison>,
    pub joint_c: f64,
}

pub fn compare(dataset: &Dataset, config: &Config, input_sha256: String) -> Result<CompareReport> {
    dataset.check_analyzable()?;
    let kind = config.scalar_kind();
    let mut series = Vec::with_capacity(dataset.m());
    for s in &dataset.series {
        let pairs = s.usable_pairs();
        let ctx = |e: consilience::Error| e.in_series(&s.name);
        let part = decompose(&pairs, kind).map_err(ctx)?;
        let (mssd, mssd_note) = match s.usable_standard_errors() {
            Some(se) => match conventional::mssd(&pairs, &se) {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e.to_string())),
            },
            None => (None, Some("no standard-error column".into())),
        };
        series.push(SeriesComparison {
            name: s.name.clone(),
            n: pairs.len(),
            c: part.c,
            r_squared: conventional::r_squared(&pairs).ok(),
            residual_regression: conventional::residual_regression_test(&pairs).map_err(ctx)?,
            wilcoxon: conventional::wilcoxon_signed_rank(&pairs).map_err(ctx)?,
            mssd,
            mssd_note,
        });
    }
    let weights = WeightTable::build(dataset, config.overlap_policy.unwrap_or_default())?;
    let cs: Vec<f64> = series.iter().map(|s| s.c).collect();
    Ok(CompareReport {
        provenance: Provenance::new(input_sha256, config.clone(), config.seed),
        joint_c: weights.joint_c(&cs),
        series,
    })
}

impl CompareReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut t = Table::new([
            "series", "N", "C", "R2", "F", "p(F)", "W", "p(W)", "MSSD", "RMSSD",
        ]);
        for s in &self.series {
            t.row(vec![
                s.name.clone(),
                s.n.to_string(),
                sig6(s.c),
                opt6(s.r_squared),
                sig6(s.residual_regression.statistic),
                sig6(s.residual_regression.p_value),
                sig6(s.wilcoxon.statistic),
                sig6(s.wilcoxon.p_value),
                opt6(s.mssd.map(|m| m.mssd)),
                opt6(s.mssd.map(|m| m.rmssd)),
            ]);
        }
        let mut out = t.render();
        out.push_str(&format!("\njoint C  {}\n", sig6(self.joint_c)));
        for s in &self.series {
            for (label, r) in [
                ("F test", &s.residual_regression),
                ("Wilcoxon", &s.wilcoxon),
            ] {
                if let Some(note) = &r.note {
                    out.push_str(&format!("{}: {label}: {note}\n", s.name));
                }
            }
        }
        out
    }
}
