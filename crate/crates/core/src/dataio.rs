//! Dataset model, CSV input and the JSON sidecar configuration.
//!
//! Input layout: a header `case,<name>_obs,<name>_mod[,<name>_se],...` followed
//! by one row per case. An empty cell is a missing value. A case is usable for
//! a series only when both its observed and modeled cells are filled; exactly
//! one of the two being present is rejected at parse time.

use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decomposition::Pair;
use crate::error::{Error, Result};
use crate::weighting::OverlapPolicy;

pub const MAX_SERIES: usize = 5;
pub const MIN_PAIRS: usize = 3;
pub const DEFAULT_MAX_ROWS: usize = 1000;

/// Normalizer applied to every error component of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ScalarKind {
    #[default]
    #[serde(rename = "stdev")]
    SampleStdDev,
    #[serde(rename = "iqr")]
    InterquartileRange,
    #[serde(rename = "mean")]
    Mean,
    #[serde(rename = "median")]
    Median,
}

impl ScalarKind {
    pub fn label(self) -> &'static str {
        match self {
            ScalarKind::SampleStdDev => "stdev",
            ScalarKind::InterquartileRange => "iqr",
            ScalarKind::Mean => "mean",
            ScalarKind::Median => "median",
        }
    }

    /// Closed-form landmarks (mean fit, perfect inverse, null expectations)
    /// only hold for the sample standard deviation.
    pub fn is_landmark(self) -> bool {
        self == ScalarKind::SampleStdDev
    }
}

impl fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ScalarKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stdev" | "sd" | "std" => Ok(ScalarKind::SampleStdDev),
            "iqr" => Ok(ScalarKind::InterquartileRange),
            "mean" => Ok(ScalarKind::Mean),
            "median" => Ok(ScalarKind::Median),
            other => Err(Error::InvalidArgument(format!(
                "unknown scalar '{other}' (expected stdev, iqr, mean or median)"
            ))),
        }
    }
}

/// One response type: case-aligned (observed, modeled) slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSeries {
    pub name: String,
    pub cases: Vec<Option<Pair>>,
    /// Per-case standard error of the observed value, when supplied.
    pub standard_errors: Option<Vec<Option<f64>>>,
}

impl ResponseSeries {
    pub fn new(name: impl Into<String>, cases: Vec<Option<Pair>>) -> Self {
        Self {
            name: name.into(),
            cases,
            standard_errors: None,
        }
    }

    /// A series with every case filled.
    pub fn complete(name: impl Into<String>, pairs: &[Pair]) -> Self {
        Self::new(name, pairs.iter().copied().map(Some).collect())
    }

    pub fn with_standard_errors(mut self, se: Vec<Option<f64>>) -> Self {
        self.standard_errors = Some(se);
        self
    }

    pub fn n_complete(&self) -> usize {
        self.cases.iter().filter(|c| c.is_some()).count()
    }

    pub fn usable_pairs(&self) -> Vec<Pair> {
        self.cases.iter().flatten().copied().collect()
    }

    pub fn observed(&self) -> Vec<f64> {
        self.cases.iter().flatten().map(|p| p.observed).collect()
    }

    /// Standard errors aligned with [`usable_pairs`](Self::usable_pairs).
    pub fn usable_standard_errors(&self) -> Option<Vec<Option<f64>>> {
        let se = self.standard_errors.as_ref()?;
        Some(
            self.cases
                .iter()
                .zip(se)
                .filter(|(c, _)| c.is_some())
                .map(|(_, s)| *s)
                .collect(),
        )
    }

    pub fn is_usable(&self, case: usize) -> bool {
        matches!(self.cases.get(case), Some(Some(_)))
    }
}

/// Symmetric table of CaseMatch flags; the diagonal is unused.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseMatchTable(Vec<Vec<bool>>);

impl CaseMatchTable {
    pub fn uniform(m: usize, value: bool) -> Self {
        Self(vec![vec![value; m]; m])
    }

    pub fn from_matrix(rows: Vec<Vec<bool>>) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Config("case_match matrix must be square".into()));
        }
        for i in 0..m {
            for j in (i + 1)..m {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Config(format!(
                        "case_match matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self(rows))
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.0[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.0[i][j] = value;
        self.0[j][i] = value;
    }

    pub fn size(&self) -> usize {
        self.0.len()
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.0
    }

    fn select(&self, idx: &[usize]) -> Self {
        Self(
            idx.iter()
                .map(|&a| idx.iter().map(|&b| self.0[a][b]).collect())
                .collect(),
        )
    }
}

/// M response series on a shared case index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub case_ids: Vec<String>,
    pub series: Vec<ResponseSeries>,
    pub case_match: CaseMatchTable,
    pub importance: Vec<f64>,
}

impl Dataset {
    pub fn new(case_ids: Vec<String>, series: Vec<ResponseSeries>) -> Result<Self> {
        let m = series.len();
        let ds = Self {
            case_ids,
            case_match: CaseMatchTable::uniform(m, true),
            importance: vec![1.0; m],
            series,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Single complete series with generated case ids.
    pub fn single(name: &str, pairs: &[Pair]) -> Result<Self> {
        let ids = (1..=pairs.len()).map(|i| i.to_string()).collect();
        Self::new(ids, vec![ResponseSeries::complete(name, pairs)])
    }

    pub fn m(&self) -> usize {
        self.series.len()
    }

    pub fn n_cases(&self) -> usize {
        self.case_ids.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.series.len();
        if m == 0 || m > MAX_SERIES {
            return Err(Error::Structure(format!(
                "expected 1 to {MAX_SERIES} response series, found {m}"
            )));
        }
        let n = self.case_ids.len();
        for s in &self.series {
            if s.cases.len() != n {
                return Err(Error::Structure(format!(
                    "series '{}' has {} case slots but the case index has {n}",
                    s.name,
                    s.cases.len()
                )));
            }
            if let Some(se) = &s.standard_errors {
                if se.len() != n {
                    return Err(Error::Structure(format!(
                        "series '{}' standard errors are not aligned with the case index",
                        s.name
                    )));
                }
            }
        }
        let mut seen = HashSet::new();
        for id in &self.case_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Structure(format!("duplicate case id '{id}'")));
            }
        }
        if self.case_match.size() != m {
            return Err(Error::Config(format!(
                "case_match table is {0}×{0} but the dataset has {m} series",
                self.case_match.size()
            )));
        }
        if self.importance.len() != m {
            return Err(Error::Config(format!(
                "{} importance weights given for {m} series",
                self.importance.len()
            )));
        }
        if let Some(w) = self
            .importance
            .iter()
            .find(|w| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::Config(format!(
                "importance weights must be strictly positive, got {w}"
            )));
        }
        Ok(())
    }

    /// Number of cases at which both series have usable pairs.
    pub fn overlap_count(&self, i: usize, j: usize) -> usize {
        let (a, b) = (&self.series[i], &self.series[j]);
        (0..self.n_cases())
            .filter(|&k| a.is_usable(k) && b.is_usable(k))
            .count()
    }

    /// Observed values of series i and j at their shared cases.
    pub fn overlapping_observed(&self, i: usize, j: usize) -> (Vec<f64>, Vec<f64>) {
        self.series[i]
            .cases
            .iter()
            .zip(&self.series[j].cases)
            .filter_map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => Some((a.observed, b.observed)),
                _ => None,
            })
            .unzip()
    }

    /// Sub-dataset with the given series, in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let ds = Self {
            case_ids: self.case_ids.clone(),
            series: idx.iter().map(|&i| self.series[i].clone()).collect(),
            case_match: self.case_match.select(idx),
            importance: idx.iter().map(|&i| self.importance[i]).collect(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_case_match(mut self, table: CaseMatchTable) -> Result<Self> {
        self.case_match = table;
        self.validate()?;
        Ok(self)
    }

    pub fn with_importance(mut self, importance: Vec<f64>) -> Result<Self> {
        self.importance = importance;
        self.validate()?;
        Ok(self)
    }

    /// Check the per-series minimum of usable pairs.
    pub fn check_analyzable(&self) -> Result<()> {
        for s in &self.series {
            let n = s.n_complete();
            if n < MIN_PAIRS {
                return Err(Error::InsufficientPairs {
                    series: s.name.clone(),
                    n,
                    min: MIN_PAIRS,
                });
            }
        }
        Ok(())
    }

    /// Serialize back to the CSV layout accepted by [`parse_dataset`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from("case");
        for s in &self.series {
            out.push_str(&format!(",{0}_obs,{0}_mod", s.name));
            if s.standard_errors.is_some() {
                out.push_str(&format!(",{}_se", s.name));
            }
        }
        out.push('\n');
        for (k, id) in self.case_ids.iter().enumerate() {
            out.push_str(id);
            for s in &self.series {
                match s.cases[k] {
                    Some(p) => out.push_str(&format!(",{},{}", p.observed, p.modeled)),
                    None => out.push_str(",,"),
                }
                if let Some(se) = &s.standard_errors {
                    match se[k] {
                        Some(v) => out.push_str(&format!(",{v}")),
                        None => out.push(','),
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub max_rows: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            max_rows: DEFAULT_MAX_ROWS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Observed,
    Modeled,
    StandardError,
}

#[derive(Debug, Default)]
struct ColumnSet {
    name: String,
    observed: Option<usize>,
    modeled: Option<usize>,
    se: Option<usize>,
}

fn split_header(col: &str) -> Option<(&str, Role)> {
    let (name, suffix) = col.rsplit_once('_')?;
    if name.is_empty() {
        return None;
    }
    let role = match suffix.to_ascii_lowercase().as_str() {
        "obs" => Role::Observed,
        "mod" => Role::Modeled,
        "se" => Role::StandardError,
        _ => return None,
    };
    Some((name, role))
}

fn parse_cell(raw: &str, line: usize, column: &str) -> Result<Option<f64>> {
    let t = raw.trim();
    if t.is_empty() {
        return Ok(None);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            line,
            message: format!("column '{column}': '{t}' is not a finite number"),
        }),
    }
}

/// Parse the CSV layout into a [`Dataset`] with default CaseMatch and importance.
pub fn parse_dataset<R: Read>(input: R, options: &ParseOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(input);

    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Structure("missing header row".into()));
    }
    if !headers[0].eq_ignore_ascii_case("case") {
        return Err(Error::Structure(format!(
            "first column must be 'case', found '{}'",
            &headers[0]
        )));
    }

    let mut sets: Vec<ColumnSet> = Vec::new();
    for (idx, col) in headers.iter().enumerate().skip(1) {
        let (name, role) = split_header(col).ok_or_else(|| {
            Error::Structure(format!(
                "column '{col}' is not of the form <name>_obs, <name>_mod or <name>_se"
            ))
        })?;
        let pos = match sets.iter().position(|s| s.name == name) {
            Some(p) => p,
            None => {
                sets.push(ColumnSet {
                    name: name.to_string(),
                    ..Default::default()
                });
                sets.len() - 1
            }
        };
        let slot = match role {
            Role::Observed => &mut sets[pos].observed,
            Role::Modeled => &mut sets[pos].modeled,
            Role::StandardError => &mut sets[pos].se,
        };
        if slot.replace(idx).is_some() {
            return Err(Error::Structure(format!("duplicate column '{col}'")));
        }
    }
    if sets.is_empty() || sets.len() > MAX_SERIES {
        return Err(Error::Structure(format!(
            "expected 1 to {MAX_SERIES} response column pairs, found {}",
            sets.len()
        )));
    }
    for s in &sets {
        if s.observed.is_none() || s.modeled.is_none() {
            return Err(Error::Structure(format!(
                "series '{}' needs both {0}_obs and {0}_mod columns",
                s.name
            )));
        }
    }

    let mut case_ids = Vec::new();
    let mut cases: Vec<Vec<Option<Pair>>> = vec![Vec::new(); sets.len()];
    let mut errors: Vec<Vec<Option<f64>>> = vec![Vec::new(); sets.len()];
    let mut seen = HashSet::new();

    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if case_ids.len() == options.max_rows {
            return Err(Error::Structure(format!(
                "more than {} data rows; raise the row limit to accept larger files",
                options.max_rows
            )));
        }
        let id = record[0].trim().to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty case id".into(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate case id '{id}'"),
            });
        }
        for (k, set) in sets.iter().enumerate() {
            let (oi, mi) = (set.observed.unwrap(), set.modeled.unwrap());
            let obs = parse_cell(&record[oi], line, &headers[oi])?;
            let md = parse_cell(&record[mi], line, &headers[mi])?;
            let pair = match (obs, md) {
                (Some(o), Some(m)) => Some(Pair::new(o, m)),
                (None, None) => None,
                (Some(_), None) => {
                    return Err(Error::HalfPair {
                        case: id,
                        series: set.name.clone(),
                        message: "observed value present but modeled value missing".into(),
                    })
                }
                (None, Some(_)) => {
                    return Err(Error::HalfPair {
                        case: id,
                        series: set.name.clone(),
                        message: "modeled value present but observed value missing".into(),
                    })
                }
            };
            cases[k].push(pair);
            if let Some(si) = set.se {
                errors[k].push(parse_cell(&record[si], line, &headers[si])?);
            }
        }
        case_ids.push(id);
    }

    let series = sets
        .iter()
        .zip(cases)
        .zip(errors)
        .map(|((set, c), e)| {
            let s = ResponseSeries::new(set.name.clone(), c);
            if set.se.is_some() {
                s.with_standard_errors(e)
            } else {
                s
            }
        })
        .collect();
    Dataset::new(case_ids, series)
}

pub fn parse_dataset_str(input: &str) -> Result<Dataset> {
    parse_dataset(input.as_bytes(), &ParseOptions::default())
}

/// CaseMatch in the sidecar: one flag for every pair, or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CaseMatchSpec {
    All(bool),
    Matrix(Vec<Vec<bool>>),
}

/// JSON sidecar configuration. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar: Option<ScalarKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_match: Option<CaseMatchSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importance: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_policy: Option<OverlapPolicy>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Apply CaseMatch and importance settings to a parsed dataset.
    pub fn apply(&self, mut ds: Dataset) -> Result<Dataset> {
        let m = ds.m();
        if let Some(spec) = &self.case_match {
            ds = ds.with_case_match(match spec {
                CaseMatchSpec::All(v) => CaseMatchTable::uniform(m, *v),
                CaseMatchSpec::Matrix(rows) => CaseMatchTable::from_matrix(rows.clone())?,
            })?;
        }
        if let Some(w) = &self.importance {
            ds = ds.with_importance(w.clone())?;
        }
        Ok(ds)
    }

    pub fn scalar_kind(&self) -> ScalarKind {
        self.scalar.unwrap_or_default()
    }
}
