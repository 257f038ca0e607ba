//! Consilience (C): a goodness-of-fit statistic for comparing modeled
//! against observed values.
//!
//! The crate is organised along the analysis pipeline:
//!
//! - [`dataio`] - dataset model, CSV parsing, sidecar configuration
//! - [`decomposition`] - projection regression, systematic/random error split, C
//! - [`weighting`] - R² half-matrix, covariance weights, effective N, joint C
//! - [`nullmodels`] - RandMix / RandNorm null replicates and exhaustive enumeration
//! - [`critical`] - empirical critical-value curves and significance brackets
//! - [`conventional`] - R², residual regression F test, Wilcoxon signed-rank, MSSD
//!
//! ```
//! use consilience::decomposition::{decompose, Pair};
//! use consilience::dataio::ScalarKind;
//!
//! let pairs: Vec<Pair> = [1.0, 2.0, 3.0, 4.0]
//!     .iter()
//!     .map(|&y| Pair::new(y, y))
//!     .collect();
//! let part = decompose(&pairs, ScalarKind::SampleStdDev)?;
//! assert_eq!(part.c, 1.0);
//! # Ok::<(), consilience::Error>(())
//! ```

pub mod conventional;
pub mod critical;
pub mod dataio;
pub mod decomposition;
pub mod error;
pub mod matrix;
pub mod nullmodels;
pub mod numeric;
pub mod special;
pub mod weighting;

pub use dataio::{Config, Dataset, ResponseSeries, ScalarKind};
pub use decomposition::{decompose, ErrorPartition, Pair, ProjectionLine};
pub use error::{Error, Result};
pub use nullmodels::{NullDistribution, NullKind, NullSpec};
pub use weighting::WeightTable;
