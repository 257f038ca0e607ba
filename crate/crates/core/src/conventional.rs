//! Classical companions to C: R², the zero-intercept residual regression F
//! test, the Wilcoxon signed-rank test for pairs, and MSSD/RMSSD.
//!
//! The two tests ask whether Ymod is distinguishable from the perfect model
//! Ymod = Yobs; a large p-value does not by itself mean a good fit.

use serde::{Deserialize, Serialize};

use crate::dataio::MIN_PAIRS;
use crate::decomposition::Pair;
use crate::error::{Error, Result};
use crate::numeric::{self, sum};
use crate::special::{f_upper_tail, normal_cdf};

/// Largest n for which the Wilcoxon p-value is computed exactly.
pub const WILCOXON_EXACT_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    NormalApproximation,
    FDistribution,
    /// Degenerate input; see the note.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn check_n(pairs: &[Pair]) -> Result<()> {
    if pairs.len() < MIN_PAIRS {
        return Err(Error::InsufficientPairs {
            series: String::new(),
            n: pairs.len(),
            min: MIN_PAIRS,
        });
    }
    Ok(())
}

/// Squared Pearson correlation of observed and modeled values.
pub fn r_squared(pairs: &[Pair]) -> Result<f64> {
    check_n(pairs)?;
    let x: Vec<f64> = pairs.iter().map(|p| p.observed).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.modeled).collect();
    numeric::squared_correlation(&x, &y)
        .ok_or_else(|| Error::DegenerateSeries("observed or modeled values are constant".into()))
}

/// Regress d = Ymod − Yobs on Yobs through the origin and F-test the slope.
pub fn residual_regression_test(pairs: &[Pair]) -> Result<TestResult> {
    check_n(pairs)?;
    let n = pairs.len() as f64;
    let syy = sum(pairs.iter().map(|p| p.observed * p.observed));
    if syy == 0.0 {
        return Err(Error::DegenerateSeries(
            "sum of squared observed values is zero".into(),
        ));
    }
    let d: Vec<f64> = pairs.iter().map(|p| p.modeled - p.observed).collect();
    let total_ss = sum(d.iter().map(|v| v * v));
    if total_ss == 0.0 {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            method: Method::Degenerate,
            note: Some("perfect fit: all residuals are zero".into()),
        });
    }
    let sdy = sum(d.iter().zip(pairs).map(|(di, p)| di * p.observed));
    let slope = sdy / syy;
    let regression_ss = sdy * sdy / syy;
    let residual_ss = (total_ss - regression_ss).max(0.0);
    let note = Some(format!("slope = {slope}"));
    if residual_ss <= 1e-14 * total_ss {
        return Ok(TestResult {
            statistic: f64::INFINITY,
            p_value: 0.0,
            method: Method::FDistribution,
            note,
        });
    }
    let f = regression_ss / (residual_ss / (n - 1.0));
    Ok(TestResult {
        statistic: f,
        p_value: f_upper_tail(f, 1.0, n - 1.0).clamp(0.0, 1.0),
        method: Method::FDistribution,
        note,
    })
}

/// Average ranks (1-based) of the values, ties sharing the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Signed-rank statistics for the nonzero differences Ymod − Yobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedRanks {
    /// Number of nonzero differences.
    pub n: usize,
    pub zeros_dropped: usize,
    pub ranks: Vec<f64>,
    pub positive_sum: f64,
    pub negative_sum: f64,
    /// Σ (t³ − t) over tie groups.
    pub tie_term: f64,
}

impl SignedRanks {
    pub fn from_differences(differences: &[f64]) -> Self {
        let nonzero: Vec<f64> = differences.iter().copied().filter(|d| *d != 0.0).collect();
        let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
        let ranks = average_ranks(&abs);
        let positive_sum = sum(nonzero
            .iter()
            .zip(&ranks)
            .filter(|(d, _)| **d > 0.0)
            .map(|(_, r)| *r));
        let negative_sum = sum(nonzero
            .iter()
            .zip(&ranks)
            .filter(|(d, _)| **d < 0.0)
            .map(|(_, r)| *r));
        let sorted = numeric::sorted_copy(&abs);
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        Self {
            n: nonzero.len(),
            zeros_dropped: differences.len() - nonzero.len(),
            ranks,
            positive_sum,
            negative_sum,
            tie_term,
        }
    }

    /// W = min(T⁺, T⁻).
    pub fn statistic(&self) -> f64 {
        self.positive_sum.min(self.negative_sum)
    }
}

/// Null distribution of 2·T⁺ over all 2ⁿ sign assignments of the given ranks.
///
/// Ranks are doubled so tied (half-integer) ranks stay integral. Entry s is
/// the probability that 2·T⁺ = s.
pub fn signed_rank_distribution(ranks: &[f64]) -> Vec<f64> {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let patterns = 2f64.powi(ranks.len() as i32);
    counts.iter().map(|c| c / patterns).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WilcoxonMode {
    /// Exact for n ≤ 20, normal approximation above.
    #[default]
    Auto,
    Exact,
    Normal,
}

pub fn wilcoxon_signed_rank(pairs: &[Pair]) -> Result<TestResult> {
    wilcoxon_signed_rank_with(pairs, WilcoxonMode::Auto)
}

pub fn wilcoxon_signed_rank_with(pairs: &[Pair], mode: WilcoxonMode) -> Result<TestResult> {
    let d: Vec<f64> = pairs.iter().map(|p| p.modeled - p.observed).collect();
    let sr = SignedRanks::from_differences(&d);
    if sr.n == 0 {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            method: Method::Degenerate,
            note: Some("no signal: all differences are zero".into()),
        });
    }
    if sr.n < MIN_PAIRS {
        return Err(Error::DegenerateSeries(format!(
            "only {} nonzero differences; the signed-rank test needs at least {MIN_PAIRS}",
            sr.n
        )));
    }
    let w = sr.statistic();
    let exact = match mode {
        WilcoxonMode::Auto => sr.n <= WILCOXON_EXACT_MAX,
        WilcoxonMode::Exact => true,
        WilcoxonMode::Normal => false,
    };
    let note =
        (sr.zeros_dropped > 0).then(|| format!("{} zero differences dropped", sr.zeros_dropped));
    if exact {
        let dist = signed_rank_distribution(&sr.ranks);
        let limit = (2.0 * w).round() as usize;
        let lower = sum(dist[..=limit.min(dist.len() - 1)].iter().copied());
        Ok(TestResult {
            statistic: w,
            p_value: (2.0 * lower).min(1.0),
            method: Method::Exact,
            note,
        })
    } else {
        Ok(TestResult {
            statistic: w,
            p_value: signed_rank_normal_p(w, sr.n, sr.tie_term),
            method: Method::NormalApproximation,
            note,
        })
    }
}

/// Two-sided normal approximation with tie and continuity corrections.
pub fn signed_rank_normal_p(w: f64, n: usize, tie_term: f64) -> f64 {
    let n = n as f64;
    let mean = n * (n + 1.0) / 4.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * normal_cdf(-z)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mssd {
    pub mssd: f64,
    pub rmssd: f64,
}

/// Mean squared deviation scaled by per-pair standard errors.
pub fn mssd(pairs: &[Pair], standard_errors: &[Option<f64>]) -> Result<Mssd> {
    if pairs.is_empty() {
        return Err(Error::StandardError("no pairs".into()));
    }
    if standard_errors.len() != pairs.len() {
        return Err(Error::StandardError(
            "one standard error per pair is required".into(),
        ));
    }
    let mut acc = numeric::CompensatedSum::new();
    for (k, (p, se)) in pairs.iter().zip(standard_errors).enumerate() {
        let se = match se {
            Some(v) if *v > 0.0 && v.is_finite() => *v,
            Some(v) => {
                return Err(Error::StandardError(format!(
                    "standard error of pair {} is {v}; it must be positive",
                    k + 1
                )))
            }
            None => {
                return Err(Error::StandardError(format!(
                    "standard error of pair {} is missing",
                    k + 1
                )))
            }
        };
        let z = (p.observed - p.modeled) / se;
        acc.add(z * z);
    }
    let m = acc.value() / pairs.len() as f64;
    Ok(Mssd {
        mssd: m,
        rmssd: m.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::pairs_from;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Brute-force two-sided p over all sign patterns.
    fn brute_force_p(ranks: &[f64], w: f64) -> f64 {
        let n = ranks.len();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let t: f64 = (0..n)
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| ranks[k])
                .sum();
            if t <= w + 1e-9 {
                hits += 1;
            }
        }
        (2.0 * hits as f64 / (1u64 << n) as f64).min(1.0)
    }

    #[test]
    fn r_squared_cases() {
        let x = [1.0, 2.0, 3.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert_relative_eq!(
            r_squared(&pairs_from(&x, &y)).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        // Closed-form Pearson on [1,2,3,4] vs [1.1,1.9,3.2,3.8]:
        // Sxy = 4.7, Sxx = 5, Syy = 4.5 → r² = 22.09 / 22.5.
        let r2 = r_squared(&pairs_from(&[1.0, 2.0, 3.0, 4.0], &[1.1, 1.9, 3.2, 3.8])).unwrap();
        assert_relative_eq!(r2, 22.09 / 22.5, epsilon = 1e-12);
        assert!(matches!(
            r_squared(&pairs_from(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0])),
            Err(Error::DegenerateSeries(_))
        ));
    }

    #[test]
    fn residual_test_perfect_fit() {
        let x = [1.0, 2.0, 3.0];
        let t = residual_regression_test(&pairs_from(&x, &x)).unwrap();
        assert_eq!(t.p_value, 1.0);
        assert_eq!(t.method, Method::Degenerate);
    }

    #[test]
    fn residual_test_zero_slope() {
        // Differences orthogonal to Yobs: Σ d·y = 0.
        let x = [1.0, 2.0, 3.0, 4.0];
        let d = [1.0, -1.0, -1.0, 1.0];
        let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
        let t = residual_regression_test(&pairs_from(&x, &y)).unwrap();
        assert!(t.statistic.abs() < 1e-12);
        assert!((t.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn residual_test_degenerate_observed() {
        let t = residual_regression_test(&pairs_from(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]));
        assert!(matches!(t, Err(Error::DegenerateSeries(_))));
    }

    #[test]
    fn residual_test_matches_hand_computation() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.3, 2.0, 3.4, 4.1, 5.6];
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let sdy: f64 = d.iter().zip(&x).map(|(a, b)| a * b).sum();
        let syy: f64 = x.iter().map(|v| v * v).sum();
        let sdd: f64 = d.iter().map(|v| v * v).sum();
        let reg = sdy * sdy / syy;
        let f = reg / ((sdd - reg) / 4.0);
        let t = residual_regression_test(&pairs_from(&x, &y)).unwrap();
        assert_relative_eq!(t.statistic, f, epsilon = 1e-10);
        // F(1, k) tail equals the two-sided t tail at sqrt(F).
        use statrs::distribution::{ContinuousCDF, StudentsT};
        let tdist = StudentsT::new(0.0, 1.0, 4.0).unwrap();
        assert_relative_eq!(t.p_value, 2.0 * tdist.sf(f.sqrt()), epsilon = 1e-10);
    }

    #[test]
    fn hand_enumerated_w() {
        let d = [1.0, -2.0, 3.0, -4.0, 5.0];
        let sr = SignedRanks::from_differences(&d);
        assert_eq!(sr.positive_sum, 9.0);
        assert_eq!(sr.negative_sum, 6.0);
        let x = [10.0; 5];
        let y: Vec<f64> = d.iter().map(|v| 10.0 + v).collect();
        let t = wilcoxon_signed_rank(&pairs_from(&x, &y)).unwrap();
        assert_eq!(t.statistic, 6.0);
        assert_eq!(t.method, Method::Exact);
        assert_relative_eq!(t.p_value, brute_force_p(&sr.ranks, 6.0), epsilon = 1e-15);
    }

    #[test]
    fn exact_distribution_sums_to_one() {
        let ranks: Vec<f64> = (1..=10).map(|r| r as f64).collect();
        let dist = signed_rank_distribution(&ranks);
        assert_relative_eq!(dist.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        // 1024 patterns: P(T⁺ = 0) = 1/1024.
        assert_eq!(dist[0], 1.0 / 1024.0);
    }

    #[test]
    fn ties_use_average_ranks() {
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
        let d = [1.0, -1.0, 2.0, 2.0, -3.0];
        let sr = SignedRanks::from_differences(&d);
        assert_eq!(sr.tie_term, 12.0);
        let x = [0.0; 5];
        let t = wilcoxon_signed_rank(&pairs_from(&x, &d)).unwrap();
        assert_relative_eq!(
            t.p_value,
            brute_force_p(&sr.ranks, sr.statistic()),
            epsilon = 1e-14
        );
    }

    #[test]
    fn zeros_dropped_and_all_zero() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let t = wilcoxon_signed_rank(&pairs_from(&x, &x)).unwrap();
        assert_eq!(
            (t.statistic, t.p_value, t.method),
            (0.0, 1.0, Method::Degenerate)
        );
        let y = [1.0, 2.5, 2.0, 5.0];
        assert!(wilcoxon_signed_rank(&pairs_from(&x, &y)).is_ok());
        let y = [1.0, 2.0, 3.0, 5.0];
        assert!(wilcoxon_signed_rank(&pairs_from(&x, &y)).is_err());
    }

    #[test]
    fn large_n_uses_normal() {
        let x: Vec<f64> = (0..30).map(|v| v as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| v + ((i * 7 % 11) as f64 - 4.5))
            .collect();
        let t = wilcoxon_signed_rank(&pairs_from(&x, &y)).unwrap();
        assert_eq!(t.method, Method::NormalApproximation);
        assert!((0.0..=1.0).contains(&t.p_value));
    }

    #[test]
    fn mssd_cases() {
        let x = [1.0, 2.0, 3.0];
        let m = mssd(&pairs_from(&x, &x), &[Some(1.0); 3]).unwrap();
        assert_eq!((m.mssd, m.rmssd), (0.0, 0.0));
        let y = [1.5, 1.5, 3.5];
        let m = mssd(&pairs_from(&x, &y), &[Some(0.5); 3]).unwrap();
        assert_relative_eq!(m.mssd, 1.0, epsilon = 1e-15);
        assert_relative_eq!(m.rmssd, 1.0, epsilon = 1e-15);
        assert!(mssd(&pairs_from(&x, &y), &[Some(0.5), None, Some(1.0)]).is_err());
        assert!(mssd(&pairs_from(&x, &y), &[Some(0.5), Some(0.0), Some(1.0)]).is_err());
    }

    #[test]
    fn mssd_uniform_se_one_line_oracle() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.1, 1.9, 3.2, 3.8];
        let s: f64 = 0.25;
        let oracle = x
            .iter()
            .zip(&y)
            .map(|(a, b)| ((a - b) / s).powi(2))
            .sum::<f64>()
            / 4.0;
        let m = mssd(&pairs_from(&x, &y), &[Some(s); 4]).unwrap();
        assert_relative_eq!(m.mssd, oracle, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn exact_matches_brute_force(d in prop::collection::vec(prop_oneof![-9i32..=-1, 1i32..=9], 3..=12)) {
            let d: Vec<f64> = d.into_iter().map(f64::from).collect();
            let x = vec![0.0; d.len()];
            let t = wilcoxon_signed_rank(&pairs_from(&x, &d)).unwrap();
            let sr = SignedRanks::from_differences(&d);
            prop_assert!((t.p_value - brute_force_p(&sr.ranks, sr.statistic())).abs() < 1e-12);
        }

        #[test]
        fn sign_symmetry(d in prop::collection::vec(-50.0f64..50.0, 3..25)) {
            let x = vec![0.0; d.len()];
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            if let (Ok(a), Ok(b)) = (
                wilcoxon_signed_rank(&pairs_from(&x, &d)),
                wilcoxon_signed_rank(&pairs_from(&x, &neg)),
            ) {
                prop_assert_eq!(a.statistic, b.statistic);
                prop_assert_eq!(a.p_value, b.p_value);
            }
        }

        #[test]
        fn exact_and_normal_agree_at_twenty(d in prop::collection::vec(-50.0f64..50.0, 20)) {
            let x = vec![0.0; 20];
            let p = pairs_from(&x, &d);
            let e = wilcoxon_signed_rank_with(&p, WilcoxonMode::Exact).unwrap();
            let a = wilcoxon_signed_rank_with(&p, WilcoxonMode::Normal).unwrap();
            prop_assert!((e.p_value - a.p_value).abs() < 0.02, "{} vs {}", e.p_value, a.p_value);
        }

        #[test]
        fn f_test_p_decreases_with_slope(
            noise in prop::collection::vec(-1.0f64..1.0, 12),
            s1 in 0.0f64..0.5,
            delta in 0.01f64..0.5,
        ) {
            let x: Vec<f64> = (1..=12).map(f64::from).collect();
            // Noise made orthogonal to x so the slope estimate equals the imposed slope.
            let proj: f64 = noise.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
                / x.iter().map(|v| v * v).sum::<f64>();
            let e: Vec<f64> = noise.iter().zip(&x).map(|(a, b)| a - proj * b).collect();
            let at = |s: f64| {
                let y: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a + s * a + b).collect();
                residual_regression_test(&pairs_from(&x, &y)).unwrap().p_value
            };
            prop_assert!(at(s1 + delta) <= at(s1) + 1e-12);
        }
    }
}
