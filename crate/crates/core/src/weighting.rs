//! Weighting of multiple responses into a joint C.
//!
//! Each response gets a covariance weight Wᵢ that grows with its independence
//! from the others (via the R² half-matrix of observed series), is multiplied
//! by its effective sample size effNᵢ and a user importance factor, and the
//! products are normalized to sum to one.

use serde::{Deserialize, Serialize};

use crate::dataio::{Dataset, MIN_PAIRS};
use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::numeric::{self, sum};

/// What to do when a CaseMatch pair has too few shared cases for R².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapPolicy {
    /// Fail with [`Error::InsufficientOverlap`].
    Error,
    /// Use the random-association surrogate 1/(min(Nᵢ, Nⱼ) − 1) and record a warning.
    #[default]
    Surrogate,
}

/// Expected R² of two unrelated series of length n.
pub fn random_association_rsq(n: usize) -> f64 {
    1.0 / (n as f64 - 1.0)
}

/// R² half-matrix over observed series, failing on insufficient overlap.
pub fn rsq_matrix(dataset: &Dataset) -> Result<SymmetricMatrix> {
    rsq_matrix_with(dataset, OverlapPolicy::Error).map(|(m, _)| m)
}

/// R² half-matrix with an explicit overlap policy; returns any warnings raised.
pub fn rsq_matrix_with(
    dataset: &Dataset,
    policy: OverlapPolicy,
) -> Result<(SymmetricMatrix, Vec<String>)> {
    let m = dataset.m();
    let mut rsq = SymmetricMatrix::new(m, 1.0);
    let mut warnings = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let ni = dataset.series[i].n_complete();
            let nj = dataset.series[j].n_complete();
            let surrogate = random_association_rsq(ni.min(nj));
            if !dataset.case_match.get(i, j) {
                rsq.set(i, j, surrogate);
                continue;
            }
            let overlap = dataset.overlap_count(i, j);
            let value = if overlap < MIN_PAIRS {
                match policy {
                    OverlapPolicy::Error => {
                        return Err(Error::InsufficientOverlap {
                            i: i + 1,
                            j: j + 1,
                            overlap,
                        })
                    }
                    OverlapPolicy::Surrogate => {
                        warnings.push(format!(
                            "series '{}' and '{}' share {overlap} cases; R² replaced by 1/(min(Ni,Nj)-1) = {surrogate}",
                            dataset.series[i].name, dataset.series[j].name
                        ));
                        surrogate
                    }
                }
            } else {
                let (a, b) = dataset.overlapping_observed(i, j);
                match numeric::squared_correlation(&a, &b) {
                    Some(r2) => r2,
                    None => match policy {
                        OverlapPolicy::Error => {
                            return Err(Error::DegenerateSeries(format!(
                            "observed values of '{}' or '{}' are constant over their shared cases",
                            dataset.series[i].name, dataset.series[j].name
                        )))
                        }
                        OverlapPolicy::Surrogate => {
                            warnings.push(format!(
                                "observed values of '{}' or '{}' are constant over shared cases; R² replaced by {surrogate}",
                                dataset.series[i].name, dataset.series[j].name
                            ));
                            surrogate
                        }
                    },
                }
            };
            rsq.set(i, j, value);
        }
    }
    Ok((rsq, warnings))
}

/// Covariance weights Wᵢ from an R² matrix (diagonal ignored).
///
/// For M ≥ 3:
/// Wᵢ = (1/M)·[1 + ((M−2)/(M−1))·(ΣR²_excl/(M−2) − ΣR²_incl/2)],
/// where the excluded set holds the (M−1)(M−2)/2 pairs not involving i and
/// the included set the M−1 pairs involving i. M = 1 gives [1], M = 2 gives
/// [0.5, 0.5]. The output always sums to one; entries may be negative for
/// R² matrices that no real data can produce (see [`clamp_negative`]).
pub fn covariance_weights(rsq: &SymmetricMatrix) -> Vec<f64> {
    let m = rsq.size();
    match m {
        0 => Vec::new(),
        1 => vec![1.0],
        2 => vec![0.5, 0.5],
        _ => {
            let mf = m as f64;
            (0..m)
                .map(|i| {
                    let mut excl = 0.0;
                    let mut incl = 0.0;
                    for (a, b) in rsq.pairs() {
                        if a == i || b == i {
                            incl += rsq.get(a, b);
                        } else {
                            excl += rsq.get(a, b);
                        }
                    }
                    (1.0 / mf)
                        * (1.0 + ((mf - 2.0) / (mf - 1.0)) * (excl / (mf - 2.0) - incl / 2.0))
                })
                .collect()
        }
    }
}

/// Zero out negative weights and renormalize. Returns whether anything changed.
pub fn clamp_negative(weights: &[f64]) -> (Vec<f64>, bool) {
    if weights.iter().all(|&w| w >= 0.0) {
        return (weights.to_vec(), false);
    }
    let clipped: Vec<f64> = weights.iter().map(|&w| w.max(0.0)).collect();
    let total = sum(clipped.iter().copied());
    (clipped.iter().map(|w| w / total).collect(), true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveN {
    /// effN_{i,j}; the diagonal holds each series' own N.
    pub pair: SymmetricMatrix,
    /// effNᵢ: mean of effN_{i,j} over j ≠ i (own N when M = 1).
    pub per_series: Vec<f64>,
    /// System effN: mean of effN_{i,j} over all i < j (N when M = 1).
    pub system: f64,
}

/// Effective sample sizes. CaseMatch pairs count shared cases; others use min(Nᵢ, Nⱼ).
pub fn effn_values(dataset: &Dataset) -> EffectiveN {
    let m = dataset.m();
    let mut pair = SymmetricMatrix::new(m, 0.0);
    for i in 0..m {
        pair.set(i, i, dataset.series[i].n_complete() as f64);
        for j in (i + 1)..m {
            let v = if dataset.case_match.get(i, j) {
                dataset.overlap_count(i, j)
            } else {
                dataset.series[i]
                    .n_complete()
                    .min(dataset.series[j].n_complete())
            };
            pair.set(i, j, v as f64);
        }
    }
    if m == 1 {
        let n = pair.get(0, 0);
        return EffectiveN {
            pair,
            per_series: vec![n],
            system: n,
        };
    }
    let per_series = (0..m)
        .map(|i| sum((0..m).filter(|&j| j != i).map(|j| pair.get(i, j))) / (m - 1) as f64)
        .collect();
    let n_pairs = (m * (m - 1) / 2) as f64;
    let system = sum(pair.pairs().map(|(i, j)| pair.get(i, j))) / n_pairs;
    EffectiveN {
        pair,
        per_series,
        system,
    }
}

/// Wᵢ·effNᵢ·importanceᵢ normalized to sum to one.
pub fn final_weights(w_cov: &[f64], effn_series: &[f64], importance: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = w_cov
        .iter()
        .zip(effn_series)
        .zip(importance)
        .map(|((w, n), r)| w * n * r)
        .collect();
    let total = sum(raw.iter().copied());
    raw.iter().map(|v| v / total).collect()
}

/// Σ wᵢ·cᵢ.
pub fn joint_c(component_c: &[f64], weights: &[f64]) -> f64 {
    sum(component_c.iter().zip(weights).map(|(c, w)| c * w))
}

/// Everything needed to turn per-series C values into a joint C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    pub rsq: SymmetricMatrix,
    pub effn_pair: SymmetricMatrix,
    pub effn_series: Vec<f64>,
    pub effn: f64,
    /// Covariance weights straight from the formula.
    pub w_cov_raw: Vec<f64>,
    /// Covariance weights after clamping negatives (equal to raw in practice).
    pub w_cov: Vec<f64>,
    pub w_final: Vec<f64>,
    pub warnings: Vec<String>,
}

impl WeightTable {
    pub fn build(dataset: &Dataset, policy: OverlapPolicy) -> Result<Self> {
        let (rsq, mut warnings) = if dataset.m() >= 2 {
            rsq_matrix_with(dataset, policy)?
        } else {
            (SymmetricMatrix::new(1, 1.0), Vec::new())
        };
        let w_cov_raw = covariance_weights(&rsq);
        let (w_cov, clamped) = clamp_negative(&w_cov_raw);
        if clamped {
            warnings.push(format!(
                "negative covariance weights {w_cov_raw:?} clamped to zero and renormalized"
            ));
        }
        let effn = effn_values(dataset);
        let w_final = final_weights(&w_cov, &effn.per_series, &dataset.importance);
        Ok(Self {
            rsq,
            effn_pair: effn.pair,
            effn_series: effn.per_series,
            effn: effn.system,
            w_cov_raw,
            w_cov,
            w_final,
            warnings,
        })
    }

    pub fn m(&self) -> usize {
        self.w_final.len()
    }

    pub fn joint_c(&self, component_c: &[f64]) -> f64 {
        joint_c(component_c, &self.w_final)
    }

    /// M·effN, the sample-size argument of the critical curves.
    pub fn m_effn(&self) -> f64 {
        self.m() as f64 * self.effn
    }
}
