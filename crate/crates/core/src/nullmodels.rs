//! Null models for C and joint C.
//!
//! RandMix pairs the observed values with a random permutation of
//! themselves. RandNorm draws each modeled value as
//! mean(Yobs) + sd(Yobs)·Φ⁻¹(u) with u restricted to [lo, hi]
//! (by default [0.001, 0.999], about ±3.09 sd).
//!
//! Replicate r of a run seeded with s uses a ChaCha8 generator seeded from s
//! with stream number r, so every replicate is reproducible on its own and the
//! collected distribution does not depend on thread count or scheduling.

use rand::distr::{Distribution, Open01};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{Dataset, ScalarKind, MIN_PAIRS};
use crate::decomposition::{decompose, decompose_with, fit_projection, pairs_from, scalar_value};
use crate::error::{Error, Result};
use crate::numeric::{self, CompensatedSum};
use crate::special::normal_quantile;
use crate::weighting::{OverlapPolicy, WeightTable};

pub const MAX_ENUMERATION_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NullKind {
    RandMix,
    RandNorm,
}

impl std::str::FromStr for NullKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "randmix" => Ok(NullKind::RandMix),
            "randnorm" => Ok(NullKind::RandNorm),
            other => Err(Error::InvalidArgument(format!(
                "unknown null model '{other}' (expected randmix or randnorm)"
            ))),
        }
    }
}

/// How u is restricted to the clip interval before Φ⁻¹ is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClipMode {
    /// u ~ U(0, 1), then clamped into [lo, hi].
    #[default]
    Clamp,
    /// u ~ U[lo, hi].
    Truncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clip {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub mode: ClipMode,
}

impl Default for Clip {
    fn default() -> Self {
        Self {
            lo: 0.001,
            hi: 0.999,
            mode: ClipMode::Clamp,
        }
    }
}

impl Clip {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo <= self.hi && self.hi < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "clip interval must satisfy 0 < lo <= hi < 1, got ({}, {})",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.mode {
            ClipMode::Clamp => {
                let u: f64 = Open01.sample(rng);
                u.clamp(self.lo, self.hi)
            }
            ClipMode::Truncate => {
                if self.lo == self.hi {
                    self.lo
                } else {
                    rng.random_range(self.lo..=self.hi)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullSpec {
    pub kind: NullKind,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub clip: Clip,
}

impl NullSpec {
    pub fn new(kind: NullKind, replicates: usize, seed: u64) -> Self {
        Self {
            kind,
            replicates,
            seed,
            clip: Clip::default(),
        }
    }

    pub fn with_clip(mut self, clip: Clip) -> Self {
        self.clip = clip;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument(
                "replicates must be at least 1".into(),
            ));
        }
        self.clip.validate()
    }
}

/// Generator for replicate `index` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A uniformly random permutation of the observed values (Fisher–Yates).
pub fn randmix_replicate<R: Rng + ?Sized>(observed: &[f64], rng: &mut R) -> Vec<f64> {
    let mut v = observed.to_vec();
    v.shuffle(rng);
    v
}

/// Draws from the clipped normal with the observed mean and sample sd.
pub fn randnorm_replicate<R: Rng + ?Sized>(
    observed: &[f64],
    rng: &mut R,
    clip: &Clip,
) -> Result<Vec<f64>> {
    if observed.len() < MIN_PAIRS {
        return Err(Error::InsufficientPairs {
            series: String::new(),
            n: observed.len(),
            min: MIN_PAIRS,
        });
    }
    let mean = numeric::mean(observed);
    let sd = numeric::sample_std_dev(observed);
    if !(sd > 0.0) {
        return Err(Error::DegenerateObserved(None));
    }
    Ok(randnorm_draws(mean, sd, observed.len(), rng, clip))
}

fn randnorm_draws<R: Rng + ?Sized>(
    mean: f64,
    sd: f64,
    n: usize,
    rng: &mut R,
    clip: &Clip,
) -> Vec<f64> {
    (0..n)
        .map(|_| mean + sd * normal_quantile(clip.draw(rng)))
        .collect()
}

/// Per-series averages over all replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub name: String,
    pub n: usize,
    pub mean_mse_sys: f64,
    pub mean_mse_ran: f64,
    pub mean_mse_tot: f64,
    pub mean_c: f64,
    pub sd_mse_sys: f64,
    pub sd_mse_ran: f64,
    pub sd_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullDistribution {
    pub kind: NullKind,
    pub seed: u64,
    /// Replicate C (M = 1) or joint C (M > 1), ascending.
    pub c_values: Vec<f64>,
    pub mean_c: f64,
    pub sd_c: f64,
    pub components: Vec<ComponentSummary>,
}

impl NullDistribution {
    pub fn replicates(&self) -> usize {
        self.c_values.len()
    }

    /// Type-7 quantile of the replicate values.
    pub fn quantile(&self, p: f64) -> f64 {
        numeric::quantile_sorted(&self.c_values, p)
    }

    pub fn standard_error(&self) -> f64 {
        self.sd_c / (self.replicates() as f64).sqrt()
    }

    /// Fraction of replicates with C at least as large as `c`.
    pub fn upper_tail(&self, c: f64) -> f64 {
        let below = self.c_values.partition_point(|&v| v < c);
        (self.c_values.len() - below) as f64 / self.c_values.len() as f64
    }
}

struct SeriesModel {
    observed: Vec<f64>,
    mean: f64,
    sd: f64,
    scalar: f64,
}

struct ReplicateOutcome {
    joint: f64,
    parts: Vec<[f64; 4]>,
}

/// Null distribution of C / joint C with weights computed under the default overlap policy.
pub fn null_distribution(
    dataset: &Dataset,
    spec: &NullSpec,
    kind: ScalarKind,
) -> Result<NullDistribution> {
    let weights = WeightTable::build(dataset, OverlapPolicy::default())?;
    null_distribution_weighted(dataset, spec, kind, &weights)
}

/// Null distribution using precomputed weights.
///
/// Weights depend only on the observed series, so they are the same for
/// every replicate; only the modeled values are redrawn, independently for
/// each series.
pub fn null_distribution_weighted(
    dataset: &Dataset,
    spec: &NullSpec,
    kind: ScalarKind,
    weights: &WeightTable,
) -> Result<NullDistribution> {
    spec.validate()?;
    dataset.check_analyzable()?;
    let models = dataset
        .series
        .iter()
        .map(|s| {
            let observed = s.observed();
            let scalar = scalar_value(&observed, kind).map_err(|e| e.in_series(&s.name))?;
            let sd = numeric::sample_std_dev(&observed);
            if !(sd > 0.0) {
                return Err(Error::DegenerateObserved(Some(s.name.clone())));
            }
            Ok(SeriesModel {
                mean: numeric::mean(&observed),
                sd,
                scalar,
                observed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let outcomes = (0..spec.replicates as u64)
        .into_par_iter()
        .map(|r| run_replicate(&models, spec, kind, weights, r))
        .collect::<Result<Vec<_>>>()?;

    let m = models.len();
    let mut c_values: Vec<f64> = outcomes.iter().map(|o| o.joint).collect();
    let (mean_c, sd_c) = mean_sd(&c_values);
    c_values.sort_by(f64::total_cmp);

    let components = (0..m)
        .map(|k| {
            let col = |idx: usize| {
                outcomes
                    .iter()
                    .map(|o| o.parts[k][idx])
                    .collect::<Vec<f64>>()
            };
            let (ms, ss) = mean_sd(&col(0));
            let (mr, sr) = mean_sd(&col(1));
            let (mt, _) = mean_sd(&col(2));
            let (mc, sc) = mean_sd(&col(3));
            ComponentSummary {
                name: dataset.series[k].name.clone(),
                n: models[k].observed.len(),
                mean_mse_sys: ms,
                mean_mse_ran: mr,
                mean_mse_tot: mt,
                mean_c: mc,
                sd_mse_sys: ss,
                sd_mse_ran: sr,
                sd_c: sc,
            }
        })
        .collect();

    Ok(NullDistribution {
        kind: spec.kind,
        seed: spec.seed,
        c_values,
        mean_c,
        sd_c,
        components,
    })
}

fn run_replicate(
    models: &[SeriesModel],
    spec: &NullSpec,
    kind: ScalarKind,
    weights: &WeightTable,
    index: u64,
) -> Result<ReplicateOutcome> {
    let mut rng = replicate_rng(spec.seed, index);
    let mut parts = Vec::with_capacity(models.len());
    let mut cs = Vec::with_capacity(models.len());
    for model in models {
        let modeled = match spec.kind {
            NullKind::RandMix => randmix_replicate(&model.observed, &mut rng),
            NullKind::RandNorm => randnorm_draws(
                model.mean,
                model.sd,
                model.observed.len(),
                &mut rng,
                &spec.clip,
            ),
        };
        let pairs = pairs_from(&model.observed, &modeled);
        let line = fit_projection(&pairs)?;
        let part = decompose_with(&pairs, &line, kind, model.scalar)?;
        parts.push([part.mse_sys, part.mse_ran, part.mse_tot, part.c]);
        cs.push(part.c);
    }
    Ok(ReplicateOutcome {
        joint: weights.joint_c(&cs),
        parts,
    })
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let mean = numeric::mean(values);
    let sd = if values.len() > 1 {
        numeric::sample_std_dev(values)
    } else {
        0.0
    };
    (mean, sd)
}

/// Visit every permutation of `values` (Heap's algorithm, iterative).
pub fn for_each_permutation<F: FnMut(&[f64])>(values: &[f64], mut visit: F) {
    let n = values.len();
    let mut a = values.to_vec();
    let mut c = vec![0usize; n];
    visit(&a);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            visit(&a);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Exact means over all n! RandMix pairings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationMeans {
    pub n: usize,
    pub permutations: usize,
    pub mse_sys: f64,
    pub mse_ran: f64,
    pub mse_tot: f64,
    pub c: f64,
    /// Mean squared correlation between the observed values and their pairing.
    pub rsq: f64,
    /// Observed values contain ties (the closed forms assume distinct values).
    pub has_ties: bool,
}

pub fn enumerate_randmix(observed: &[f64], kind: ScalarKind) -> Result<EnumerationMeans> {
    let n = observed.len();
    if !(MIN_PAIRS..=MAX_ENUMERATION_N).contains(&n) {
        return Err(Error::EnumerationSize(n));
    }
    // Surface degeneracy before the loop.
    decompose(&pairs_from(observed, observed), kind)?;
    let sorted = numeric::sorted_copy(observed);
    let has_ties = sorted.windows(2).any(|w| w[0] == w[1]);

    let mut acc = [CompensatedSum::new(); 5];
    let mut count = 0usize;
    let mut failure = None;
    for_each_permutation(observed, |perm| {
        if failure.is_some() {
            return;
        }
        match decompose(&pairs_from(observed, perm), kind) {
            Ok(p) => {
                let rsq = numeric::squared_correlation(observed, perm).unwrap_or(0.0);
                for (a, v) in acc
                    .iter_mut()
                    .zip([p.mse_sys, p.mse_ran, p.mse_tot, p.c, rsq])
                {
                    a.add(v);
                }
                count += 1;
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let k = count as f64;
    Ok(EnumerationMeans {
        n,
        permutations: count,
        mse_sys: acc[0].value() / k,
        mse_ran: acc[1].value() / k,
        mse_tot: acc[2].value() / k,
        c: acc[3].value() / k,
        rsq: acc[4].value() / k,
        has_ties,
    })
}
